"""Golden DOZZ table: emits the row list and validates a computed table.

  python3 dozz_golden.py --emit-config > data/dozz_golden.json
  python3 dozz_golden.py --check data/dozz_golden.csv

The check recomputes every row with mpmath: Upsilon from its integral in the
strip 0 < Re z < Q, continued by the shift relation and reflection, and the
DOZZ formula assembled from it. Independent of the C++ code.
"""
import argparse
import csv
import json
import random
import sys

import mpmath as mp

from upsilon_mpmath import log_upsilon

mp.mp.dps = 25
GAMMA = 1.0


def upsilon(z, gamma):
    gamma = mp.mpf(gamma)
    Q = 2 / gamma + gamma / 2
    b = gamma / 2
    z = mp.mpc(z)
    if mp.re(z) >= Q:
        return upsilon(Q - z, gamma)
    if mp.re(z) <= 0:
        # Upsilon(z + b) = l(b z) b^(1 - 2 b z) Upsilon(z)
        l = mp.gamma(b * z) / mp.gamma(1 - b * z)
        return upsilon(z + b, gamma) / (l * b ** (1 - 2 * b * z))
    return mp.exp(log_upsilon(z, gamma))


def dozz(a1, a2, a3, gamma, mu=1):
    gamma = mp.mpf(gamma)
    Q = 2 / gamma + gamma / 2
    ab = a1 + a2 + a3
    l = mp.gamma(gamma ** 2 / 4) / mp.gamma(1 - gamma ** 2 / 4)
    base = mp.pi * mu * l * (gamma / 2) ** (2 - gamma ** 2 / 2)
    ups0 = upsilon(gamma / 2, gamma)  # Upsilon'(0) = Upsilon(gamma/2)
    num = ups0 * upsilon(a1, gamma) * upsilon(a2, gamma) * upsilon(a3, gamma)
    den = upsilon(ab / 2 - Q, gamma) * upsilon(ab / 2 - a1, gamma) * \
        upsilon(ab / 2 - a2, gamma) * upsilon(ab / 2 - a3, gamma)
    return base ** ((2 * Q - ab) / gamma) * num / den


def rows():
    rng = random.Random(20261016)
    out = []
    for _ in range(40):
        out.append([round(rng.uniform(0.3, 2.4), 3) for _ in range(3)])
    for _ in range(8):
        out.append([[round(rng.uniform(0.5, 2.2), 3), round(rng.uniform(-1.5, 1.5), 3)] for _ in range(3)])
    out.append([1.5, 1.5, 2.0])  # abar = 2Q: pole
    out.append([1.25, [1.25, 0.7], [1.25, -0.7]])
    return out


def emit_config():
    cfg = {"kind": "dozz-table", "seed": 0,
           "parameters": {"gamma": GAMMA, "mu": 1.0, "rows": rows(), "golden": "dozz_golden.csv"}}
    json.dump(cfg, sys.stdout, indent=1)
    print()


def check(path, tol):
    worst = 0
    with open(path) as f:
        for i, r in enumerate(csv.DictReader(f)):
            a = [mp.mpc(float(r[f"a{k}_re"]), float(r[f"a{k}_im"])) for k in (1, 2, 3)]
            if r["pole"] == "1":
                ab = sum(a)
                print(f"row {i}: pole, abar = {mp.nstr(ab, 8)}")
                continue
            got = mp.mpc(float(r["value_re"]), float(r["value_im"]))
            ref = dozz(*a, GAMMA)
            rel = abs(got - ref) / abs(ref)
            worst = max(worst, rel)
            print(f"row {i}: rel {mp.nstr(rel, 3)}")
    print(f"worst relative deviation {mp.nstr(worst, 3)} (tolerance {tol})")
    return 0 if worst < tol else 1


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--emit-config", action="store_true")
    ap.add_argument("--check")
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()
    if args.emit_config:
        emit_config()
        return 0
    if args.check:
        return check(args.check, args.tol)
    ap.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
