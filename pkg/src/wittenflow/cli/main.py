"""Command line: ``wittenflow run|validate|presets|batch``."""
import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import ConfigError
from .config import validate
from .presets import PRESETS, list_presets, preset
from .runner import EXIT_INVALID, load_config, run


def _run_one(source, root):
    try:
        config = load_config(source)
    except ConfigError as exc:
        return str(source), EXIT_INVALID, [f"  ! {d}" for d in exc.diagnostics]
    verdict = run(config, root)
    return config.name, verdict.exit_code, verdict.summary_lines()


def cmd_run(args):
    _, code, lines = _run_one(args.config, args.output_root)
    print("\n".join(lines))
    return code


def cmd_validate(args):
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print("\n".join(exc.diagnostics))
        return EXIT_INVALID
    diags = validate(config)
    for d in diags:
        print(d)
    if not diags:
        print(f"{config.name}: ok")
    return EXIT_INVALID if diags else 0


def cmd_presets(args):
    if args.write:
        target = Path(args.write)
        target.mkdir(parents=True, exist_ok=True)
        for name in PRESETS:
            (target / f"{name}.json").write_text(json.dumps(preset(name), indent=1) + "\n")
        print(f"wrote {len(PRESETS)} presets to {target}")
    else:
        print(list_presets())
    return 0


def cmd_batch(args):
    sources = sorted(str(p) for p in Path(args.directory).glob("*.json"))
    if not sources:
        print(f"no *.json configs in {args.directory}")
        return EXIT_INVALID
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, sources, [args.output_root] * len(sources)))
    else:
        results = [_run_one(s, args.output_root) for s in sources]
    for _, _, lines in results:
        print("\n".join(lines))
    return max(code for _, code, _ in results)


def build_parser():
    p = argparse.ArgumentParser(prog="wittenflow", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment (JSON file or preset name)")
    r.add_argument("config")
    r.add_argument("--output-root", default=None, help="overrides $WITTENFLOW_OUTPUT_ROOT (default ./runs)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="static checks only")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    ps = sub.add_parser("presets", help="list built-in presets")
    ps.add_argument("--write", metavar="DIR", help="dump every preset as a JSON file into DIR")
    ps.set_defaults(func=cmd_presets)

    b = sub.add_parser("batch", help="run every *.json config in a directory")
    b.add_argument("directory")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--output-root", default=None)
    b.set_defaults(func=cmd_batch)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
