"""``eprsim`` command line tool.

    eprsim run CONFIG.json [--seed N] [--shots N] [--workers N] [--out DIR] [--format json|csv|both]
    eprsim chsh [--config CONFIG.json] [...same flags]
    eprsim compile FILE.seq
    eprsim lint FILE.seq

Exit status: 0 success, 2 configuration or input error, 3 a physics
invariant failed (e.g. a gate identity check or an unphysical covariance).

CSV columns (frozen): estimator, value, std_error, shots, seed, settings.
Lines starting with ``#`` at the top carry the tool version and the resolved
config as JSON.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, FORMATS, ConfigError, RunConfig
from .control import ScheduleError
from .experiments import Outcome, run_experiment
from .qcore import StateError

CSV_COLUMNS = ("estimator", "value", "std_error", "shots", "seed", "settings")
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS = 0, 2, 3


def _clean(obj):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dumps(obj, indent=None) -> str:
    sep = None if indent else (",", ":")
    return json.dumps(_clean(obj), indent=indent, separators=sep, allow_nan=False)


def render_json(cfg: RunConfig, out: Outcome) -> str:
    doc = {
        "tool": "eprsim",
        "version": __version__,
        "config": cfg.to_dict(),
        "summary": out.summary,
        "ok": out.ok,
        "results": [r.to_dict() for r in out.results],
    }
    for key in ("schedule", "diagnostics", "canonical"):
        if key in out.extra:
            doc[key] = out.extra[key]
    return _dumps(doc, indent=2) + "\n"


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def render_csv(cfg: RunConfig, out: Outcome) -> str:
    buf = io.StringIO()
    buf.write(f"# eprsim {__version__}\n")
    buf.write(f"# config {_dumps(cfg.to_dict())}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in out.results:
        w.writerow([r.estimator, _num(r.value), _num(r.std_error), r.shots, _num(r.seed), _dumps(r.settings)])
    return buf.getvalue()


def write_artifacts(cfg: RunConfig, out: Outcome, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = cfg.output["format"]
    written = []
    if fmt in ("json", "both"):
        p = out_dir / f"{cfg.output_name}.json"
        p.write_text(render_json(cfg, out), encoding="utf-8")
        written.append(p)
    if fmt in ("csv", "both") and cfg.experiment != "compile":
        p = out_dir / f"{cfg.output_name}.csv"
        p.write_text(render_csv(cfg, out), encoding="utf-8")
        written.append(p)
    return written


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--seed", type=int)
    common.add_argument("--shots", type=int)
    common.add_argument("--workers", type=int, help="shot workers (default: $EPRSIM_WORKERS or 1)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=FORMATS)

    parser = argparse.ArgumentParser(prog="eprsim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"eprsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run the experiment named in a config file")
    run.add_argument("config_path", type=Path)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        if name in ("compile", "lint"):
            p.add_argument("source", nargs="?", help=".seq file")
    return parser


def _load(args) -> RunConfig:
    path = args.config_path if args.command == "run" else args.config
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        base = Path(path).parent
    else:
        data, base = {"experiment": args.command}, Path(".")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if args.command != "run" and data.get("experiment", args.command) != args.command:
        raise ConfigError(f"config is for {data.get('experiment')!r}, not {args.command!r}")
    data = dict(data)
    data.setdefault("experiment", args.command)
    if args.shots is not None:
        data["shots"] = args.shots
    if args.seed is not None:
        data["seed"] = args.seed
    if args.format is not None:
        data["output"] = {**data.get("output", {}), "format": args.format}
    if getattr(args, "source", None):
        data["params"] = {**data.get("params", {}), "source": str(Path(args.source).resolve())}
    return RunConfig.from_dict(data, base_dir=base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out = run_experiment(cfg, args.workers)
    except (ConfigError, ScheduleError, OSError) as e:
        print(f"eprsim: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StateError as e:
        print(f"eprsim: physics invariant violated: {e}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ValueError, KeyError) as e:
        print(f"eprsim: invalid parameters: {e}", file=sys.stderr)
        return EXIT_CONFIG

    diag_stream = sys.stdout if cfg.experiment == "lint" else sys.stderr
    for line in out.extra.get("diagnostics", []):
        print(line, file=diag_stream)
    if out.extra.get("input_error"):
        print(out.summary, file=sys.stderr)
        return EXIT_CONFIG
    if cfg.experiment != "lint":
        out_dir = Path(args.out or cfg.output["dir"])
        write_artifacts(cfg, out, out_dir)
    print(out.summary)
    return EXIT_OK if out.ok else EXIT_PHYSICS


if __name__ == "__main__":
    raise SystemExit(main())
