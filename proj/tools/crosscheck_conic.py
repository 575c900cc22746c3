#!/usr/bin/env python3
"""Cross-check dumped cone programs against an external solver.

The conic module writes every solved program (plus its status, objective and
primal point) to `$UAVMEC_DUMP_DIR/prog_<k>.conic` when that variable is set:

    mkdir -p /tmp/dumps
    UAVMEC_DUMP_DIR=/tmp/dumps ./build/uavmec run --scenario data/table2.scenario
    python3 tools/crosscheck_conic.py /tmp/dumps

Requires cvxpy (any installed conic solver; Clarabel by default).
"""

import glob
import sys

import cvxpy as cp


def parse(path):
    n = 0
    c0 = 0.0
    obj = {}
    eqs = []    # (const, {var: coef})
    cones = []  # (kind, [(const, {var: coef}), ...])
    status = None
    reported = None
    pending = None
    primal = None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "conicprogram":
                n = int(parts[2])
            elif parts[0] == "objconst":
                c0 = float(parts[1])
            elif parts[0] == "obj":
                obj[int(parts[1])] = float(parts[2])
            elif parts[0] in ("eq", "row"):
                const = float(parts[1])
                terms = {}
                for tok in parts[3:]:
                    i, coef = tok.split(":")
                    terms[int(i)] = float(coef)
                (eqs if parts[0] == "eq" else pending[1]).append((const, terms))
            elif parts[0] == "cone":
                pending = (parts[1], [])
                cones.append(pending)
            elif parts[0] == "solution":
                status = parts[1]
                reported = float(parts[2])
            elif parts[0] == "primal":
                primal = [float(v) for v in parts[1:]]
    return n, c0, obj, eqs, cones, status, reported, primal


def affine(x, const, terms):
    e = const
    for i, coef in terms.items():
        e = e + coef * x[i]
    return e


def main():
    if len(sys.argv) != 2:
        print(__doc__)
        return 2
    worst = 0.0
    checked = skipped = 0
    for path in sorted(glob.glob(sys.argv[1] + "/*.conic")):
        n, c0, obj, eqs, cones, status, reported, _ = parse(path)
        if status != "optimal":
            print(f"{path}: skipped (status {status})")
            skipped += 1
            continue
        x = cp.Variable(n)
        constraints = [affine(x, c, t) == 0 for c, t in eqs]
        for kind, rows in cones:
            if kind == "nonneg":
                constraints.append(affine(x, *rows[0]) >= 0)
            elif kind == "zero":
                constraints.append(affine(x, *rows[0]) == 0)
            else:
                constraints.append(
                    cp.SOC(affine(x, *rows[0]),
                           cp.hstack([affine(x, *r) for r in rows[1:]])))
        objective = c0
        for i, coef in obj.items():
            objective = objective + coef * x[i]
        value = cp.Problem(cp.Minimize(objective), constraints).solve(solver=cp.CLARABEL)
        delta = abs(value - reported) / max(1.0, abs(reported))
        worst = max(worst, delta)
        checked += 1
        print(f"{path}: n={n} external={value:.12g} ours={reported:.12g} rel-delta={delta:.3e}")
    print(f"\nchecked {checked} programs ({skipped} skipped), "
          f"worst relative objective delta = {worst:.3e}")
    return 0 if checked > 0 and worst < 1e-6 else 1


if __name__ == "__main__":
    sys.exit(main())
