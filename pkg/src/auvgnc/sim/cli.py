"""Command-line entry point: ``auvgnc {run,sweep,check-bounds,validate-path}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..path import BernsteinPath, DegeneratePath, PathBounds, validate_bounds
from ..pf import PFGains, PFParams
from .config import ConfigError, bundled_config_names, load_config, parse_config, _load_json_resource
from .export import FORMATS, export
from .monitor import check_log
from .runlog import RunLog
from .runner import NumericalDivergence, run, ts_sweep

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_BOUND = 0, 2, 3, 4

log = logging.getLogger("auvgnc")


def _config(name: str):
    """A config file path, or the name of a bundled scenario."""
    f = Path(name)
    if f.exists():
        return load_config(f)
    if name in bundled_config_names():
        return parse_config(_load_json_resource("configs", f"{name}.json"))
    raise ConfigError(f"no config file or bundled scenario named {name!r}")


def _read_json(fname) -> dict:
    try:
        return json.loads(Path(fname).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {fname}: {exc}") from exc


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_run(args) -> int:
    cfg = _config(args.config)
    res = run(cfg)
    if args.out:
        stem = cfg.name or Path(args.config).stem
        for f in export(res.log, res.metrics, args.out, args.format, stem):
            log.info("wrote %s", f)
    _emit(res.metrics.to_json())
    if args.strict and res.metrics.envelope_violations:
        return EXIT_BOUND
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args.config)
    try:
        ts = [float(x) for x in args.ts.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --ts list: {exc}") from None
    table = ts_sweep(cfg, ts, jobs=args.jobs)
    doc = table.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _emit(doc)
    return EXIT_OK


def cmd_check_bounds(args) -> int:
    try:
        runlog = RunLog.read_csv(args.log)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read log {args.log}: {exc}") from exc
    doc = _read_json(args.params)
    try:
        params = PFParams.from_dict(doc.get("pf_params", doc))
        gains = PFGains(**doc.get("pf_gains", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter file {args.params}: {exc}") from exc
    report = check_log(runlog, params, gains, tol=args.tol)
    _emit(report.to_json())
    if args.strict and not report.passed:
        return EXIT_BOUND
    return EXIT_OK


def cmd_validate_path(args) -> int:
    try:
        path = BernsteinPath.load(args.path)
        doc = _read_json(args.bounds)
        bounds = PathBounds(**doc.get("bounds", doc))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_bounds(path, bounds, samples=args.samples)
    _emit(report.to_json())
    return EXIT_OK if report.passed else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="auvgnc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--config", required=True, help="config file or bundled scenario name")
    r.add_argument("--out", help="directory for telemetry CSV and metrics JSON")
    r.add_argument("--format", choices=FORMATS, default="both")
    r.add_argument("--strict", action="store_true", help="exit 4 on envelope violations")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="repeat a scenario over sample periods")
    s.add_argument("--config", required=True)
    s.add_argument("--ts", required=True, help="descending comma-separated list")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check-bounds", help="check a telemetry log against the envelope")
    c.add_argument("--log", required=True)
    c.add_argument("--params", required=True,
                   help="JSON with outer-loop parameters (a scenario config also works)")
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--strict", action="store_true", help="exit 4 on violations")
    c.set_defaults(func=cmd_check_bounds)

    v = sub.add_parser("validate-path", help="check a path against speed and turn-rate bounds")
    v.add_argument("--path", required=True)
    v.add_argument("--bounds", required=True)
    v.add_argument("--samples", type=int, default=2001)
    v.set_defaults(func=cmd_validate_path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DegeneratePath) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (NumericalDivergence, FloatingPointError) as exc:
        log.error("%s", exc)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
