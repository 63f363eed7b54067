"""Extended-precision reference for the split scattering-angle integral.

Evaluates the unsplit integral
    I(c1, c2, c3; eps) = int_eps^pi 8 eps / (pi t^4)
                         [cos(c1 (1 - cos t) - c3) J0(c2 sin t) - cos c3] dt
with mpmath at 30 significant digits on a 5 x 5 x 5 grid of (c1, c2, c3)
and writes tests/data/inner_theta_eps1e-2.csv.
"""
import itertools
import pathlib
import sys

import mpmath as mp

mp.mp.dps = 30

EPS = mp.mpf("0.01")
C1 = ["-20", "-4", "0", "1.5", "10"]
C2 = ["0", "0.5", "3", "10", "20"]
C3 = ["0", "0.7", "2.5", "10", "40"]


def integral(c1, c2, c3, eps):
    c1, c2, c3 = mp.mpf(c1), mp.mpf(c2), mp.mpf(c3)

    def f(t):
        return 8 * eps / (mp.pi * t**4) * (
            mp.cos(c1 * (1 - mp.cos(t)) - c3) * mp.besselj(0, c2 * mp.sin(t)) - mp.cos(c3))

    # geometric panels near the cutoff, then panels short enough for the oscillation
    pts = [eps]
    while pts[-1] < mp.pi:
        pts.append(min(pts[-1] * mp.mpf(1.5), mp.pi))
    fine = []
    rate = abs(c1) + abs(c2) + 1
    for a, b in zip(pts[:-1], pts[1:]):
        n = int(max(1, mp.ceil(rate * (b - a) / mp.mpf("0.5"))))
        fine += [a + (b - a) * i / n for i in range(n)]
    fine.append(mp.pi)
    return mp.quad(f, fine)


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data/inner_theta_eps1e-2.csv")
    rows = ["# eps,c1,c2,c3,reference  (mpmath, 30 digits, unsplit integrand)"]
    for c1, c2, c3 in itertools.product(C1, C2, C3):
        v = integral(c1, c2, c3, EPS)
        rows.append(f"0.01,{c1},{c2},{c3},{mp.nstr(v, 20)}")
    out.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
