"""Evolve a Lott flow on T^1 and print W_q along the conjugate heat flow.

Writes the table to lott_flow.csv in the working directory.
"""
import csv

import numpy as np

from wittenflow.cli import preset, run
from wittenflow.cli.checks import Context
from wittenflow.cli.config import ExperimentConfig


def main():
    cfg = preset("lott-flow")
    verdict = run(cfg, write=False)
    for line in verdict.summary_lines():
        print(line)
    ctx = Context(ExperimentConfig.from_dict(cfg))
    taus, W, lhs, rhs = ctx.lott_entropy
    stride = max(1, len(taus) // 10)
    print(f"{'tau':>8} {'W_q':>14} {'dW/dtau':>12} {'formula':>12}")
    for i in range(0, len(taus), stride):
        print(f"{taus[i]:8.3f} {W[i]:14.8f} {lhs[i]:12.4e} {rhs[i]:12.4e}")
    with open("lott_flow.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "W_q", "dWq_lhs", "dWq_rhs"])
        w.writerows(np.column_stack([taus, W, lhs, rhs]))


if __name__ == "__main__":
    main()
