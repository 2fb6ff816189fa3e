"""Regenerate tests/data/allometry_oracle.csv.

Draws 1000 (rho, dbh_cm, height_m) triples and evaluates
0.0673 * (rho * dbh^2 * h)^0.967 with 50-digit arithmetic. The inputs are
written with repr() so the Rust side parses bit-identical f64 values.
"""
import random
import sys

from mpmath import mp, mpf

mp.dps = 50
COEF = mpf("0.0673")
EXP = mpf("0.967")


def agb(rho, dbh, h):
    return COEF * (mpf(rho) * mpf(dbh) ** 2 * mpf(h)) ** EXP


def main(path):
    rng = random.Random(20240611)
    with open(path, "w") as out:
        out.write("rho,dbh_cm,height_m,agb_kg\n")
        for _ in range(1000):
            rho = rng.uniform(0.2, 1.2)
            dbh = rng.uniform(1.0, 150.0)
            h = rng.uniform(1.0, 60.0)
            out.write(f"{rho!r},{dbh!r},{h!r},{mp.nstr(agb(rho, dbh, h), 30)}\n")
    for rho, dbh, h in [(1.0, 1.0, 1.0), (0.65, 30.0, 20.0), (0.55, 15.0, 10.0)]:
        print(rho, dbh, h, mp.nstr(agb(rho, dbh, h), 25), file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/allometry_oracle.csv")
