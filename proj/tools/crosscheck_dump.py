#!/usr/bin/env python3
"""Solve a dumped cone program with an external solver through cvxpy.

Reads the plain-text format written by `isac_cli dump` and prints the optimal
objective c'x as JSON. Used as an independent oracle for the in-repo solver.

    python3 tools/crosscheck_dump.py program.txt [--solver CLARABEL]
"""

import argparse
import json
import math
import sys

import numpy as np
import scipy.sparse as sp


def read_dump(path):
    with open(path) as f:
        tok = f.read().split()
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return tok[pos - 1]

    def expect(word):
        got = take()
        if got != word:
            raise ValueError(f"expected {word!r}, got {got!r}")

    expect("isac-conic")
    if take() != "1":
        raise ValueError("unsupported version")
    expect("vars")
    n = int(take())
    expect("rows")
    m = int(take())
    expect("nnz")
    nnz = int(take())
    expect("zero")
    zero = int(take())
    expect("nonneg")
    nonneg = int(take())
    expect("soc")
    soc = [int(take()) for _ in range(int(take()))]
    expect("psd")
    psd = [int(take()) for _ in range(int(take()))]
    expect("c")
    c = np.array([float(take()) for _ in range(n)])
    expect("b")
    b = np.array([float(take()) for _ in range(m)])
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        rows.append(int(take()))
        cols.append(int(take()))
        vals.append(float(take()))
    a = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    return dict(n=n, m=m, zero=zero, nonneg=nonneg, soc=soc, psd=psd, c=c, b=b, a=a)


def solve(prog, solver):
    import cvxpy as cp

    x = cp.Variable(prog["n"])
    s = prog["b"] - prog["a"] @ x
    cons = []
    off = 0
    if prog["zero"]:
        cons.append(s[off:off + prog["zero"]] == 0)
        off += prog["zero"]
    if prog["nonneg"]:
        cons.append(s[off:off + prog["nonneg"]] >= 0)
        off += prog["nonneg"]
    for q in prog["soc"]:
        cons.append(cp.SOC(s[off], s[off + 1:off + q]))
        off += q
    for side in prog["psd"]:
        mat = cp.Variable((side, side), symmetric=True)
        k = off
        for j in range(side):
            for i in range(j, side):
                scale = 1.0 if i == j else math.sqrt(2.0)
                cons.append(scale * mat[i, j] == s[k])
                k += 1
        cons.append(mat >> 0)
        off += side * (side + 1) // 2
    problem = cp.Problem(cp.Minimize(prog["c"] @ x), cons)
    problem.solve(solver=solver)
    return problem.status, problem.value


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dump")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    try:
        status, value = solve(read_dump(args.dump), args.solver)
    except Exception as exc:  # solver failures are reported, not raised
        print(json.dumps({"status": "error", "message": str(exc)}))
        return 1
    print(json.dumps({"status": status, "objective": value}))
    return 0 if status == "optimal" else 1


if __name__ == "__main__":
    sys.exit(main())
