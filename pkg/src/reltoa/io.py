"""JSON state/detector specs and deterministic CSV/JSON writers."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .detectors import Absorption, CovariantProfile, DetectorModel, SpreadProfile
from .exceptions import ConfigError
from .states import MomentumState, make_gaussian_state, make_inverse_gaussian_state, make_levy_energy_state

_STATE_FAMILIES = {
    "gaussian": (make_gaussian_state, ("p0", "sigma_p"), ("x0", "chirp")),
    "inverse_gaussian_kinetic": (make_inverse_gaussian_state, ("xi0", "sigma_xi"), ()),
    "levy_energy": (make_levy_energy_state, ("c_E",), ()),
}


def _number(d, key, where):
    try:
        v = float(d[key])
    except KeyError:
        raise ConfigError(f"{where}: missing {key!r}") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key!r} must be a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"{where}: {key!r} must be finite")
    return v


def state_from_dict(spec: dict) -> MomentumState:
    """{"family": ..., "params": {...}, "mass": ...} -> MomentumState."""
    if not isinstance(spec, dict):
        raise ConfigError("state spec must be an object")
    family = spec.get("family")
    if family not in _STATE_FAMILIES:
        raise ConfigError(f"unknown state family {family!r}; expected one of {sorted(_STATE_FAMILIES)}")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("state params must be an object")
    mass = _number({"mass": spec.get("mass", 1.0)}, "mass", "state")
    make, required, optional = _STATE_FAMILIES[family]
    args = [_number(params, k, "state.params") for k in required]
    kwargs = {k: _number(params, k, "state.params") for k in optional if k in params}
    unknown = set(params) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"state.params: unexpected keys {sorted(unknown)}")
    try:
        return make(*args, mass=mass, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"state: {exc}") from exc


def _absorption(spec, mass):
    if not isinstance(spec, dict) or "form" not in spec:
        raise ConfigError("detector.alpha must be an object with a 'form'")
    params = {k: v for k, v in spec.items() if k != "form"}
    try:
        return Absorption(spec["form"], params, mass)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"detector.alpha: {exc}") from exc


def detector_from_dict(spec: dict, mass: float = 1.0) -> DetectorModel:
    """{"kind": ..., "tau": ..., "delta": ..., "alpha": {"form": ...}, ...} -> DetectorModel."""
    if not isinstance(spec, dict):
        raise ConfigError("detector spec must be an object")
    kw = {"kind": spec.get("kind")}
    for key in ("tau", "delta"):
        if spec.get(key) is not None:
            kw[key] = _number(spec, key, "detector")
    if "alpha" in spec:
        kw["alpha"] = _absorption(spec["alpha"], mass)
    if "sigma" in spec:
        s = dict(spec["sigma"])
        kw["sigma"] = CovariantProfile(s.pop("form", "power"), s, mass)
    if "u_profile" in spec:
        u = dict(spec["u_profile"])
        kw["u_profile"] = SpreadProfile(u.pop("form", "gaussian"), u)
    try:
        return DetectorModel(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"detector: {exc}") from exc


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc


# -- writers -----------------------------------------------------------------------

def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, *columns) -> str:
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(rows) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def json_text(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_outputs(files: dict):
    """Write {path: text} atomically, one file at a time, after everything is computed."""
    for path, text in files.items():
        _atomic_write(path, text)
