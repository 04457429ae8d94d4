"""Batch command line: ``ksgeo {geodesic,ks-check,spectrum,verify}``.

Settings resolve as flag > config file > built-in default. The config file
is TOML, given by ``--config`` or ``$KSGEO_CONFIG``; top-level keys apply to
every command and a table named after the command overrides them::

    mass = 1.0
    [geodesic]
    spin = 0.6
    r0 = 1.8

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 identity
failure, 5 acceptance failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import acceptance, serialize
from .errors import DomainError, GridTooSmallError, PreconditionError, StepFailure
from .geometry import ConstantsOfMotion, SpacetimeParams, turning_points
from .integrator import IntegrationConfig, integrate_general, integrate_zero_constants
from .oscillator import GridSpec, OscillatorParams, spectrum_4d

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IDENTITY, EXIT_ACCEPTANCE = 0, 2, 3, 4, 5

DEFAULTS = {
    "geodesic": {
        "mass": 1.0, "spin": 0.0, "energy": 0.0, "angmom": 0.0, "r0": None,
        "direction": "infall", "rel_tol": 1e-12, "abs_tol": 1e-16,
        "terminal_radius": None, "max_tau": math.inf, "max_turns": 1,
        "out": None, "format": None,
    },
    "ks-check": {"samples": 10_000, "seed": 0, "out": None},
    "spectrum": {"n_max": 3, "grid_points": 2001, "grid_halfwidth": 8.0, "out": None},
    "verify": {"quick": False, "seed": 0, "out": None},
}


class UsageError(Exception):
    pass


def _load_config(path) -> dict:
    if path is None:
        path = os.environ.get("KSGEO_CONFIG")
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults for ``command``."""
    cfg = _load_config(getattr(args, "config", None))
    section = cfg.get(command, {})
    shared = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    out = {}
    for key, default in DEFAULTS[command].items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in section:
            out[key] = section[key]
        elif key in shared:
            out[key] = shared[key]
        else:
            out[key] = default
    unknown = set(section) - set(DEFAULTS[command])
    if unknown:
        raise UsageError(f"unknown keys in [{command}] config: {sorted(unknown)}")
    return out


def _emit(text: str, out) -> None:
    if out:
        serialize.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def cmd_geodesic(args) -> int:
    o = resolve("geodesic", args)
    try:
        params = SpacetimeParams(float(o["mass"]), float(o["spin"]))
        consts = ConstantsOfMotion(float(o["energy"]), float(o["angmom"]))
        max_turns = None if int(o["max_turns"]) == 0 else int(o["max_turns"])
        config = IntegrationConfig(
            rel_tol=float(o["rel_tol"]), abs_tol=float(o["abs_tol"]),
            terminal_radius=None if o["terminal_radius"] is None else float(o["terminal_radius"]),
            direction=o["direction"], max_tau=float(o["max_tau"]), max_turns=max_turns,
        )
        roots = turning_points(consts, params)
        r0 = o["r0"]
        if r0 is None:
            if consts.is_zero:
                r0 = params.horizons()[1]
            elif roots:
                r0 = roots[-1]
            else:
                raise PreconditionError("no turning point to start from; pass --r0")
        fmt = o["format"] or (Path(o["out"]).suffix.lstrip(".") if o["out"] else "csv")
        if fmt not in ("csv", "json"):
            raise PreconditionError(f"format must be csv or json, got {fmt!r}")
    except (PreconditionError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        if consts.is_zero:
            traj = integrate_zero_constants(params, float(r0), config)
        else:
            sign = -1 if config.direction == "infall" else 1
            traj = integrate_general(params, consts, float(r0), sign, config)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StepFailure, DomainError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if o["out"]:
        text = serialize.trajectory_to_csv(traj) if fmt == "csv" else serialize.trajectory_to_json(traj)
        serialize.atomic_write(o["out"], text)
    tp = ", ".join(serialize.fmt(r) for r in roots)
    print(
        f"turning_points=[{tp}] tau_span={serialize.fmt(traj.tau_span)} "
        f"max_normalization_drift={traj.max_normalization_drift:.3e} "
        f"termination={traj.termination} samples={len(traj.samples)}"
    )
    return EXIT_OK


def cmd_ks_check(args) -> int:
    o = resolve("ks-check", args)
    n, seed = int(o["samples"]), int(o["seed"])
    if n < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    s, sdot = acceptance.random_ks_samples(n, seed)
    res = acceptance.ks_identity_residuals(s, sdot)
    res.update(acceptance.shell_transport_residuals(n, seed))
    identities = {
        k: {"max_residual": v, "threshold": acceptance.KS_THRESHOLDS[k],
            "passed": v <= acceptance.KS_THRESHOLDS[k]}
        for k, v in res.items()
    }
    failed = [k for k, v in identities.items() if not v["passed"]]
    report = {
        "schema_version": serialize.SCHEMA_VERSION,
        "samples": n,
        "seed": seed,
        "identities": identities,
        "passed": not failed,
    }
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", o["out"])
    if failed:
        print(f"identity failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def cmd_spectrum(args) -> int:
    o = resolve("spectrum", args)
    try:
        grid = GridSpec(float(o["grid_halfwidth"]), int(o["grid_points"]))
        result = spectrum_4d(grid, OscillatorParams(), int(o["n_max"]))
    except GridTooSmallError as exc:
        print(f"grid too small: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = serialize.spectrum_to_json(result)
    if o["out"]:
        serialize.atomic_write(o["out"], text)
        for lv in result.levels:
            print(f"n={lv.n} analytic={lv.analytic_energy:g} numeric={lv.numeric_energy:.8f} "
                  f"degeneracy={lv.degeneracy}")
        print(f"claim_comparison={result.claim_comparison:.8f}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    o = resolve("verify", args)
    report = acceptance.run_all(quick=bool(o["quick"]), seed=int(o["seed"]))
    for c in report["criteria"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] criterion {c['id']}: {c['name']}", file=sys.stderr)
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", o["out"])
    if not report["passed"]:
        for c in report["criteria"]:
            if not c["passed"]:
                detail = c["metrics"].get("failed") or c["metrics"].get("error") or ""
                print(f"failed criterion {c['id']} ({c['name']}) {detail}".rstrip(), file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksgeo", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML config file (default: $KSGEO_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geodesic", help="integrate a radial time-like geodesic")
    g.add_argument("--mass", type=float)
    g.add_argument("--spin", type=float)
    g.add_argument("--energy", type=float)
    g.add_argument("--angmom", type=float)
    g.add_argument("--r0", type=float, help="start radius (default: outer turning point)")
    g.add_argument("--direction", choices=["infall", "outfall"])
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--terminal-radius", dest="terminal_radius", type=float)
    g.add_argument("--max-tau", dest="max_tau", type=float)
    g.add_argument("--max-turns", dest="max_turns", type=int, help="0 = unlimited")
    g.add_argument("--out")
    g.add_argument("--format", choices=["csv", "json"])
    g.set_defaults(func=cmd_geodesic)

    k = sub.add_parser("ks-check", help="check the KS identities on random inputs")
    k.add_argument("--samples", type=int)
    k.add_argument("--seed", type=int)
    k.add_argument("--out")
    k.set_defaults(func=cmd_ks_check)

    s = sub.add_parser("spectrum", help="finite-difference spectrum of the 4D oscillator")
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--grid-points", dest="grid_points", type=int)
    s.add_argument("--grid-halfwidth", dest="grid_halfwidth", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--quick", action="store_true", default=None)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
