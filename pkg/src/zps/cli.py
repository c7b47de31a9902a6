"""Command-line front end.

Exit status: 0 on success, 2 on a domain error (bad state, parameter out of
range, ...), 3 on an I/O error.  Diagnostics are a single ``error:`` line on
stderr.  Data files carry no timestamps; sidecars hold metadata.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import detectors, engine, scan, witness
from .exceptions import DomainError
from .montecarlo import ExperimentConfig, run_experiment
from .states import StateSpec, load_custom_csv

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 2, 3


class _IOFailure(Exception):
    pass


def _read_source(value: str) -> tuple[str, Path | None]:
    if not value.startswith("@"):
        return value, None
    path = Path(value[1:])
    try:
        return path.read_text(), path
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def parse_state(value: str) -> StateSpec:
    """``--state`` value: inline JSON, ``@file.json`` or ``@file.csv`` (column ``p_n``)."""
    text, path = _read_source(value)
    if path is not None and path.suffix.lower() == ".csv":
        return load_custom_csv(path)
    return StateSpec.from_json(text)


def parse_detector(value: str | None) -> detectors.DetectorModel:
    if value is None:
        return detectors.DetectorModel()
    text, _ = _read_source(value)
    return detectors.DetectorModel.from_json(text)


def _grid(value: str) -> np.ndarray:
    try:
        lo, hi, n = value.split(",")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError as exc:
        raise DomainError(f"grid must be 'lo,hi,n', got {value!r}") from exc


def _pair(value: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value.split(","))
    except ValueError as exc:
        raise DomainError(f"range must be 'lo,hi', got {value!r}") from exc
    return lo, hi


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write {out}: {exc.strerror or exc}") from exc


def _sidecar(out: str | None, suffix: str, payload: dict) -> None:
    if out is not None:
        _emit(json.dumps(payload, indent=2), out + suffix)


# ---------------------------------------------------------------------------
# subcommands


def cmd_curve(args) -> None:
    dist = parse_state(args.state).build()
    curve = engine.sample_curve(dist, args.r_stop, args.points)
    if args.format == "json":
        payload = {
            "R": curve.r_grid.tolist(),
            "K": curve.k_values.tolist(),
            "dKdR": curve.dkdr_values.tolist(),
            "Qout": curve.q_out_values.tolist(),
            "extrema": [e.to_dict() for e in curve.extrema],
        }
        _emit(json.dumps(payload, indent=2), args.out)
    else:
        _emit(curve.to_csv(), args.out)
        _sidecar(args.out, ".extrema.json", json.loads(curve.extrema_json()))


def cmd_classify(args) -> None:
    dist = parse_state(args.state).build()
    report = witness.classify(dist, args.r_stop)
    _emit(report.to_json(), args.out)


def cmd_limits(args) -> None:
    dist = parse_state(args.state).build()
    payload = {
        "K_limit": witness.json_value(engine.k_limit_r1(dist)),
        "dKdR_limit": witness.json_value(engine.dkdr_limit_r1(dist)),
    }
    _emit(json.dumps(payload), args.out)


def cmd_detector_curve(args) -> None:
    dist = parse_state(args.state).build()
    model = parse_detector(args.detector)
    rows = detectors.detector_curve(dist, model, np.linspace(0.0, args.r_stop, args.points))
    if args.format == "json":
        keys = ("R", "K_exp", "K_click", "K_dark")
        _emit(json.dumps({k: [row[i] for row in rows] for i, k in enumerate(keys)}, indent=2),
              args.out)
    else:
        _emit(detectors.detector_curve_csv(rows), args.out)
        _sidecar(args.out, ".meta.json", {"state": parse_state(args.state).to_dict(),
                                          "detector": model.to_dict()})


def cmd_scan(args) -> None:
    g1, g2 = scan.default_grid(args.family)
    if args.grid1:
        g1 = _grid(args.grid1)
    if args.grid2:
        g2 = _grid(args.grid2)
    result = scan.scan_family(args.family, g1, g2, args.r_stop, seed=args.seed)
    if args.format == "json":
        payload = result.metadata()
        payload["cells"] = [
            {"param1": a, "param2": b, "qsign": c.q_in_sign, "has_min": c.has_min,
             "has_max": c.has_max, "klyshko": c.klyshko}
            for a, b, c in result.iter_cells()
        ]
        _emit(json.dumps(payload, indent=2), args.out)
    else:
        _emit(result.to_csv(), args.out)
        _sidecar(args.out, ".meta.json", result.metadata())


def cmd_boundary(args) -> None:
    axes = scan.AXES.get(args.family)
    if axes is None:
        raise DomainError(f"unknown family {args.family!r}; expected 'dsq' or 'ccs'")
    axis = args.axis or axes[0]
    if args.range:
        bounds = _pair(args.range)
    else:
        bounds = scan.DEFAULT_RANGES[args.family][axes.index(axis)] if axis in axes else (0, 1)
    trace = scan.trace_boundary(args.family, args.criterion, axis, bounds, args.fixed, args.r_stop)
    _emit(trace.to_json(), args.out)


def cmd_mc(args) -> None:
    if args.config:
        text, _ = _read_source(args.config)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {exc}") from exc
        config = ExperimentConfig.from_dict(data)
    else:
        if args.state is None or args.reflectance is None:
            raise DomainError("mc needs --config, or both --state and --reflectance")
        config = ExperimentConfig(
            state=parse_state(args.state),
            R=args.reflectance,
            detectors=parse_detector(args.detector),
            shots=args.shots,
            seed=args.seed,
            partitions=args.partitions,
        )
    result = run_experiment(config)
    payload = {"config": config.to_dict(), "result": result.to_dict()}
    _emit(json.dumps(payload, indent=2), args.out)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zps", description="Zero-photon subtraction statistics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, state=True, r_stop=True, points=False, fmt=False):
        if state:
            p.add_argument("--state", required=True, help="state JSON, @file.json or @file.csv")
        if r_stop:
            p.add_argument("--r-stop", type=float, default=engine.DEFAULT_R_STOP)
        if points:
            p.add_argument("--points", type=int, default=200)
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("curve", help="K(R), dK/dR and Q_out on a grid")
    common(p, points=True, fmt=True)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("classify", help="transformability report")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("limits", help="R -> 1 limits of K and dK/dR")
    common(p, r_stop=False)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("detector-curve", help="K_exp, K_click, K_dark on a grid")
    common(p, points=True, fmt=True)
    p.add_argument("--detector", help="detector JSON or @file")
    p.set_defaults(func=cmd_detector_curve)

    p = sub.add_parser("scan", help="classify a parameter grid of the dsq or ccs family")
    common(p, state=False, fmt=True)
    p.add_argument("--family", required=True, choices=sorted(scan.AXES))
    p.add_argument("--grid1", help="first axis 'lo,hi,n' (dsq: z, ccs: lambda)")
    p.add_argument("--grid2", help="second axis 'lo,hi,n' (dsq: r, ccs: alpha)")
    p.add_argument("--seed", type=int, default=0, help="seed of the cross-check subsample")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("boundary", help="trace where a criterion changes along one axis")
    common(p, state=False)
    p.add_argument("--family", required=True, choices=sorted(scan.AXES))
    p.add_argument("--criterion", required=True, choices=scan.CRITERIA)
    p.add_argument("--axis", help="parameter to vary (default: first axis)")
    p.add_argument("--range", help="'lo,hi' along the axis")
    p.add_argument("--fixed", type=float, required=True, help="value of the other parameter")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("mc", help="Monte-Carlo estimate of K_click and the herald rate")
    p.add_argument("--config", help="experiment JSON or @file")
    p.add_argument("--state")
    p.add_argument("--detector")
    p.add_argument("-R", "--reflectance", type=float)
    p.add_argument("--shots", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
