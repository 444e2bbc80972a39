"""Command line: experiment definitions in, CSV/JSON artifacts out.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import _validation as V
from .arrival import arrival_density, arrival_density_amplitude, arrival_density_phillips
from .bounds import fundamental_bound, inequality_suite, kinetic_bound, paper_constants_table, ultrarel_bounds
from .exceptions import ConfigError, ReltoaError
from .io import csv_text, detector_from_dict, json_text, load_json, state_from_dict, write_outputs
from .moments import variance_decomposition
from .position import newton_wigner_density, position_density

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def bundled_config(name="gaussian_maximal.json"):
    return resources.files("reltoa") / "configs" / name


class Experiment:
    """A parsed configuration: state, detector and command parameters."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        if "state" not in raw:
            raise ConfigError("configuration needs a 'state' entry")
        self.raw = raw
        self.state = state_from_dict(raw["state"])
        self.detector = detector_from_dict(raw.get("detector", {"kind": "maximal"}), self.state.mass)
        try:
            self.x = V.check_finite(raw.get("x", 50.0), "x")
            self.t = V.check_finite(raw.get("t", 0.0), "t")
            self.n_times = int(raw.get("n_times", 2048))
            self.n_points = int(raw.get("n_points", 2048))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_times < 16 or self.n_points < 16:
            raise ConfigError("grids need at least 16 points")


def _load(args) -> Experiment:
    path = args.config or bundled_config()
    return Experiment(load_json(path))


def _density(exp: Experiment, route: str):
    det = exp.detector
    if route == "kernel":
        return arrival_density(exp.state, det, exp.x, n_times=exp.n_times)
    if det.kind != "maximal":
        raise ConfigError(f"route {route!r} needs a maximal detector")
    if route == "amplitude":
        return arrival_density_amplitude(exp.state, exp.x, det.tau, det.delta, n_times=exp.n_times)
    if det.tau is None:
        raise ConfigError("the phillips route needs tau and delta in the detector spec")
    return arrival_density_phillips(exp.state, exp.x, det.tau, det.delta, n_times=exp.n_times)


def _density_files(exp, args):
    dist = _density(exp, args.route)
    meta = dist.metadata()
    meta["norm_within_tol"] = abs(dist.norm - 1) < args.tol
    out = Path(args.out)
    return {out / "density.csv": csv_text(("t", "density"), dist.t_grid, dist.density),
            out / "density.json": json_text(meta)}


def _moments_files(exp, args):
    rep = variance_decomposition(exp.state, exp.detector, exp.x).report()
    rep["within_tol"] = rep["cross_check"]["rel_err"] < max(args.tol, 1e-3)
    return {Path(args.out) / "moments.json": json_text(rep)}


def _position_files(exp, args):
    dist = position_density(exp.state, exp.detector, exp.t, n_points=exp.n_points)
    meta = dist.metadata()
    if exp.detector.kind == "maximal":
        ref = newton_wigner_density(exp.state, exp.t, dist.x_grid, exp.detector.tau, exp.detector.delta)
        meta["newton_wigner_l1"] = float(np.trapezoid(np.abs(dist.density - ref), dist.x_grid))
    out = Path(args.out)
    return {out / "position.csv": csv_text(("x", "density"), dist.x_grid, dist.density),
            out / "position.json": json_text(meta)}


def _state_bounds(exp):
    dist = arrival_density(exp.state, exp.detector, exp.x, n_times=exp.n_times)
    rep = {"fundamental": fundamental_bound(exp.state, dist.variance).to_dict()}
    m = exp.state.mass
    p_mean = exp.state.expect(lambda p: p)
    if p_mean / m <= 0.1:
        rep["kinetic"] = kinetic_bound(exp.state)
    else:
        rep["ultrarel"] = ultrarel_bounds(exp.state)
    return rep


def _random_suite(args):
    if args.seed is None:
        raise ConfigError("randomized runs need --seed")
    if args.n < 1:
        raise ConfigError("--n must be positive")
    return inequality_suite(args.n, args.seed)


def _bounds_files(args):
    out = Path(args.out)
    files = {}
    if args.suite == "paper-constants":
        files[out / "paper_constants.json"] = json_text({"constants": paper_constants_table()})
    if args.n is not None:
        files[out / "inequality_suite.json"] = json_text(_random_suite(args))
    if args.config or not files:
        files[out / "bounds.json"] = json_text(_state_bounds(_load(args)))
    return files


def _suite_files(args):
    exp = _load(args)
    files = {}
    files.update(_density_files(exp, args))
    files.update(_moments_files(exp, args))
    files.update(_position_files(exp, args))
    out = Path(args.out)
    files[out / "bounds.json"] = json_text(_state_bounds(exp))
    files[out / "paper_constants.json"] = json_text({"constants": paper_constants_table()})
    if args.n is not None:
        files[out / "inequality_suite.json"] = json_text(_random_suite(args))
    return files


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment JSON (defaults to the bundled gaussian_maximal.json)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--tol", type=float, default=1e-6, help="tolerance for the reported checks")

    parser = argparse.ArgumentParser(prog="reltoa", description="Relativistic time-of-arrival densities and bounds.")
    sub = parser.add_subparsers(dest="command", required=True)
    d = sub.add_parser("density", parents=[common], help="arrival-time density CSV + metadata")
    d.add_argument("--route", choices=("kernel", "amplitude", "phillips"), default="kernel")
    sub.add_parser("moments", parents=[common], help="mean, variance and decomposition report")
    b = sub.add_parser("bounds", parents=[common], help="uncertainty bound reports")
    b.add_argument("--suite", choices=("paper-constants",))
    b.add_argument("--n", type=int, help="number of random states for the inequality suite")
    b.add_argument("--seed", type=int)
    sub.add_parser("position", parents=[common], help="position density CSV + metadata")
    s = sub.add_parser("suite", parents=[common], help="run every command on one configuration")
    s.add_argument("--route", choices=("kernel", "amplitude", "phillips"), default="kernel")
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        V.check_tolerance(args.tol)
        if args.command == "density":
            files = _density_files(_load(args), args)
        elif args.command == "moments":
            files = _moments_files(_load(args), args)
        elif args.command == "position":
            files = _position_files(_load(args), args)
        elif args.command == "bounds":
            files = _bounds_files(args)
        else:
            files = _suite_files(args)
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"reltoa: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReltoaError, ArithmeticError, FloatingPointError) as exc:
        print(f"reltoa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(files)
    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
