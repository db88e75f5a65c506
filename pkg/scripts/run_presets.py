"""Run built-in presets and print a one-line verdict for each.

    python3 scripts/run_presets.py                 # every preset
    python3 scripts/run_presets.py lott-flow k-variants --out runs
"""
import argparse
import time

from wittenflow.cli import PRESETS, preset, run


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("names", nargs="*", default=list(PRESETS))
    p.add_argument("--out", default=None, help="output root (default: $WITTENFLOW_OUTPUT_ROOT or ./runs)")
    args = p.parse_args()
    failures = 0
    for name in args.names:
        start = time.perf_counter()
        verdict = run(preset(name), args.out)
        elapsed = time.perf_counter() - start
        failures += not verdict.passed
        print(f"{name:<26} {verdict.status.upper():<6} {elapsed:6.1f}s  -> {verdict.output_dir}")
        for line in verdict.summary_lines()[:-1]:
            print("    " + line)
    print(f"{len(args.names) - failures}/{len(args.names)} presets passed")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
