"""Smoke test for the pydbnot extension.

Build and run from the repository root:

    cargo build -p dbnot-py --release --features extension-module
    cp target/release/libpydbnot.so python/pydbnot.so
    python3 python/smoke_test.py
"""

import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pydbnot  # noqa: E402


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok: {msg}")


def main():
    rng = random.Random(0)

    p = pydbnot.project_row_simplex([0.5, 2.0, -1.0])
    check(abs(sum(p) - 1.0) < 1e-12 and min(p) >= 0.0, "simplex projection")

    m = [[rng.uniform(-1, 2) for _ in range(3)] for _ in range(6)]
    f = pydbnot.project(m, 1.0, 3.0)
    check(pydbnot.feasibility_deviation(f, 1.0, 3.0) < 1e-8, "projection is feasible")

    g = [[rng.random() for _ in range(3)] for _ in range(6)]
    e = pydbnot.entropic_plan(g, 1.0, 3.0, 0.05)
    check(all(abs(sum(r) - 1.0) < 1e-12 for r in e), "entropic plan rows")

    s = [[0.0 if i == j or (i < 3) != (j < 3) else 1.0 for j in range(6)] for i in range(6)]
    check(abs(pydbnot.mincut_value(s, f) + sum(
        s[i][j] * sum(a * b for a, b in zip(f[i], f[j])) for i in range(6) for j in range(6)
    )) < 1e-12, "min-cut value matches the dense formula")
    mu = pydbnot.line_search_mincut(s, f, e)
    check(0.0 <= mu <= 1.0, "line-search weight in [0, 1]")

    f0 = pydbnot.project([[0.6, 0.4]] * 3 + [[0.4, 0.6]] * 3, 2.0, 4.0)
    res = pydbnot.solve_mincut(s, f0, 2.0, 4.0, measure="norm", step="line")
    labels = res["labels"]
    check(len(set(labels[:3])) == 1 and len(set(labels[3:])) == 1 and labels[0] != labels[3],
          f"two triangles separated (objective {res['objective']:.3f})")

    points, truth = pydbnot.two_rings(60, 0.05, 7)
    out = pydbnot.cluster(points, 2, labels=truth, balance=0.2, k=10, seed=7)
    check(out["acc"] == 1.0 and out["nmi"] == 1.0 and out["ari"] == 1.0, "two rings recovered")
    lo, hi = out["bounds"]
    check(all(lo - 1e-6 <= x <= hi + 1e-6 for x in out["column_sums"]), "column sums within bounds")

    check(pydbnot.accuracy([0, 0, 1], [1, 1, 0]) == 1.0, "accuracy under relabelling")
    try:
        pydbnot.solve_mincut(s, f0, 2.0, 4.0, measure="bogus")
    except ValueError:
        print("ok: bad measure raises ValueError")
    else:
        raise SystemExit("FAIL: bad measure accepted")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
