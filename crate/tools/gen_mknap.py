"""Generate the bundled multi-knapsack instances and their optima.

Sizes follow the classic mknap1 family (instances 2..6). Weights are
uniform integers, profits are correlated with the item's total weight and
capacities are half of each row sum. Optima are computed with HiGHS through
scipy.optimize.milp.

    python3 tools/gen_mknap.py crates/core/data
"""
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

SIZES = {"1-2": (10, 10), "1-3": (15, 10), "1-4": (20, 10), "1-5": (28, 10), "1-6": (39, 5)}


def generate(name, n, m, seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 60, size=(m, n))
    w[rng.random((m, n)) < 0.15] = 0
    p = (w.sum(axis=0) // m + rng.integers(5, 40, size=n)).astype(int)
    cap = (w.sum(axis=1) // 2).astype(int)
    res = milp(-p, constraints=LinearConstraint(w, -np.inf, cap),
               integrality=np.ones(n), bounds=Bounds(0, 1))
    assert res.success, name
    return p, w, cap, int(round(-res.fun))


def main(out):
    out = Path(out)
    for k, (name, (n, m)) in enumerate(SIZES.items()):
        p, w, cap, opt = generate(name, n, m, 1000 + k)
        lines = [f"{n} {m}", " ".join(map(str, p))]
        lines += [" ".join(map(str, row)) for row in w]
        lines += [" ".join(map(str, cap)), str(opt)]
        (out / f"mknap{name}.txt").write_text("\n".join(lines) + "\n")
        print(name, n, m, opt)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
