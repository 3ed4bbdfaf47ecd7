"""Command line interface: extract, evaluate, synth, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

from . import __version__, kernels
from .assessment import DEFAULT_VICINITY_M
from .behavior import write_report
from .categorization import DEFAULT_CRITICAL_S, read_records, write_records
from .extraction import DEFAULT_PATTERNS, DEFAULT_XI, PatternFileError, load_patterns
from .geometry import LaneFileError
from .hmm import HmmParamsError, default_params, load_params
from .ingest import TrajectoryFileError, load_dataset
from .pipeline import ExtractionSettings, LabelMismatchError, evaluate, extract_all, labels_from_roads, summarize
from .synth import SynthConfig, generate, load_labels

log = logging.getLogger("rampminer")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2
INPUT_ERRORS = (TrajectoryFileError, LaneFileError, HmmParamsError, PatternFileError,
                LabelMismatchError, FileNotFoundError, json.JSONDecodeError)


class InputError(Exception):
    pass


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise InputError(f"--{n.replace('_', '-')} is required")


def _settings(args) -> ExtractionSettings:
    if args.xi not in (0, 1, 2, 3):
        raise InputError("--xi must be one of 0..3")
    if args.vicinity_m <= 0 or args.critical_s <= 0:
        raise InputError("--vicinity-m and --critical-s must be positive")
    params = load_params(args.hmm_params) if args.hmm_params else default_params()
    patterns = tuple(load_patterns(args.patterns)) if args.patterns else DEFAULT_PATTERNS
    return ExtractionSettings(params, patterns, args.xi, args.vicinity_m, args.critical_s)


def _extract(args):
    _require(args, "trajectories", "lanes", "out")
    settings = _settings(args)
    trajs, lanes = load_dataset(args.trajectories, args.lanes)
    t0 = time.perf_counter()
    records = extract_all(trajs, lanes, settings, args.workers)
    log.info("%d trajectories -> %d records in %.2f s (%s kernels)", len(trajs), len(records),
             time.perf_counter() - t0, kernels.BACKEND)
    return trajs, records


def cmd_extract(args) -> int:
    trajs, records = _extract(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "scenarios.jsonl")
    _json_dump(summarize(records, len(trajs)), out / "summary.json")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    trajs, records = _extract(args)
    labels = load_labels(args.labels) if args.labels else labels_from_roads(trajs)
    res = evaluate(records, labels, [t.object_id for t in trajs])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "scenarios.jsonl")
    _json_dump(res, out / "evaluation.json")
    print(res["summary"])
    prec = res["precision"]
    print(f"accuracy {res['accuracy']}  precision {'absent' if prec is None else prec}")
    for m in res["misses"]:
        print(f"missed {m['object_id']}: start {m['start_pos']} end {m['end_pos']}")
    return EXIT_OK


def cmd_synth(args) -> int:
    _require(args, "out")
    overrides = {}
    for f in fields(SynthConfig):
        v = getattr(args, f"synth_{f.name}", None)
        if v is not None:
            overrides[f.name] = v
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = SynthConfig(**overrides)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    ds = generate(cfg)
    ds.write(args.out)
    n = sum(1 for v in ds.labels.values() if v["label"] == "merge")
    log.info("wrote %d trajectories (%d merges) to %s", len(ds.trajectories), n, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    _require(args, "out")
    src = Path(args.scenarios) if args.scenarios else Path(args.out) / "scenarios.jsonl"
    if not src.exists():
        raise InputError(f"scenario file not found: {src}")
    try:
        records = read_records(src)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{src}: invalid scenario record ({exc})") from exc
    rep = write_report(records, args.out)
    log.info("report over %d merge scenarios written to %s", rep.n_scenarios, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option values; its values override flags")
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--seed", type=int)

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--trajectories", help="trajectory CSV")
    run.add_argument("--lanes", help="lane geometry JSON")
    run.add_argument("--hmm-params", help="HMM parameter JSON (default: built-in values)")
    run.add_argument("--patterns", help="pattern library JSON (default: merge, abort, overshoot-merge)")
    run.add_argument("--xi", type=int, default=DEFAULT_XI, help="primitive bound (default 2)")
    run.add_argument("--vicinity-m", type=float, default=DEFAULT_VICINITY_M,
                     help="challenger search radius in m (default 100)")
    run.add_argument("--critical-s", type=float, default=DEFAULT_CRITICAL_S,
                     help="|PET| below this is critical (default 1.0)")
    run.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="rampminer", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common, run], help="extract merge scenarios").set_defaults(
        func=cmd_extract)
    ev = sub.add_parser("evaluate", parents=[common, run], help="extract and score against labels")
    ev.add_argument("--labels", help="labels.json from `synth` (default: road association)")
    ev.set_defaults(func=cmd_evaluate)
    sy = sub.add_parser("synth", parents=[common], help="generate a labeled synthetic dataset")
    sy.add_argument("--n-mainline", dest="synth_n_mainline", type=int)
    sy.add_argument("--n-merging", dest="synth_n_merging", type=int)
    sy.add_argument("--n-aborting", dest="synth_n_aborting", type=int)
    sy.add_argument("--noise-std", dest="synth_noise_std", type=float)
    sy.add_argument("--rate-hz", dest="synth_rate_hz", type=float)
    sy.set_defaults(func=cmd_synth)
    rp = sub.add_parser("report", parents=[common], help="behavior statistics from scenarios.jsonl")
    rp.add_argument("--scenarios", help="scenario JSON-lines (default: <out>/scenarios.jsonl)")
    rp.set_defaults(func=cmd_report)
    return p


def _apply_config(args) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{args.config}: expected a JSON object")
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) and hasattr(args, f"synth_{attr}"):
            attr = f"synth_{attr}"
        if not hasattr(args, attr) or attr in ("func", "command", "config"):
            raise InputError(f"{args.config}: unknown option {key!r}")
        setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except InputError as exc:
        print(f"rampminer: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        print(f"rampminer: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"rampminer: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
