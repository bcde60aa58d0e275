#!/usr/bin/env python3
"""Regenerate the frozen oracle values used by the Rust test suites.

All values come from mpmath at 50 significant digits. Moments of the
rebalanced-spectrum density use the single-sum form

    E[z^m] = B(a, m + 1/2) / B(1/2, a) * 2F1(m, a; a + m + 1/2; 1 - g),

which follows from z = x / (g + (1 - g) x) with x ~ Beta(1/2, a). A few
points are cross-checked against direct quadrature of the density before
anything is written.

Usage: python3 tools/oracles.py   (from the repository root)
"""

import json
from pathlib import Path

from mpmath import mp, mpf, beta, hyp2f1, loggamma, quad, sqrt

mp.dps = 50
ROOT = Path(__file__).resolve().parent.parent


def shape_params(sigma, i, k):
    top = max(sigma)
    b = [(mpf(s) / top) ** (4 * k) for s in sigma]
    rest = [x for j, x in enumerate(b) if j != i]
    s1, s2 = sum(rest), sum(x * x for x in rest)
    return s1 * s1 / (2 * s2), s2 / s1 / b[i]


def raw_moment(a, g, m):
    a, g = mpf(a), mpf(g)
    half = mpf(1) / 2
    c = a + m + half
    if g > 1:
        # Pfaff: 2F1(m, a; c; 1 - g) = g^-m 2F1(m, c - a; c; 1 - 1/g)
        series = g ** (-m) * hyp2f1(m, c - a, c, 1 - 1 / g, maxprec=20000)
    else:
        series = hyp2f1(m, a, c, 1 - g, maxprec=20000)
    return beta(a, m + half) / beta(half, a) * series


def moments(a, g):
    lam = raw_moment(a, g, 1)
    return lam, raw_moment(a, g, 2) - lam * lam


def density(z, a, g):
    """x-bullet(z): Beta(1/2, a) pushed through z = x / (g + (1 - g) z)."""
    a, g = mpf(a), mpf(g)
    x = g * z / (1 - (1 - g) * z)
    jac = g / (1 - (1 - g) * z) ** 2
    half = mpf(1) / 2
    return x ** (half - 1) * (1 - x) ** (a - 1) / beta(half, a) * jac


def cross_check():
    for a, g in [(0.7, 0.3), (2.0, 1.0), (3.5, 8.0)]:
        lam, var = moments(a, g)
        q1 = quad(lambda z: z * density(z, a, g), [0, 0.5, 1])
        q2 = quad(lambda z: z * z * density(z, a, g), [0, 0.5, 1])
        assert abs(q1 - lam) < mpf(10) ** -30, (a, g, q1, lam)
        assert abs(q2 - q1 * q1 - var) < mpf(10) ** -30, (a, g)


def f(x):
    return float(x)


SPECTRA = [
    [2.0, 1.5, 0.9, 0.2, 0.01],
    [1.0, 1.0, 1.0],
    [3.0, 2.9, 0.5],
    [5.0, 0.3, 0.2, 0.1],
    [1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
    [10.0, 9.0, 8.5, 3.0, 2.0, 1.0, 0.5, 0.25, 0.125, 0.0625],
]


def spectrum_cases():
    out = []
    for sigma in SPECTRA:
        d = len(sigma)
        for k in (1, 2):
            for i in sorted({0, 1, d - 1}):
                a, g = shape_params(sigma, i, k)
                lam, var = moments(a, g)
                out.append({"sigma": sigma, "i": i, "k": k, "alpha": f(a), "gamma": f(g), "lambda": f(lam), "variance": f(var)})
    return out


def fig3():
    tail = [1.5, 0.9, 0.2, 0.01]
    grid = [j / 10 for j in range(31)]
    rows = {}
    for k in (1, 2, 4, 8):
        phi, std = [], []
        for s1 in grid:
            if s1 == 0:
                phi.append(0.0)
                std.append(0.0)
                continue
            a, g = shape_params([s1] + tail, 0, k)
            lam, var = moments(a, g)
            phi.append(f(s1 * (1 - lam)))
            std.append(f(s1 * sqrt(var)))
        rows[str(k)] = {"phi": phi, "std": std}
    return {"tail": tail, "grid": grid, "profiles": rows}


def special_values():
    log_gamma = [[x, f(loggamma(mpf(x)))] for x in [1e-8, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 7.3, 20.0, 42.5, 171.3, 1000.0, 1e5]]
    hyp = [
        (1.5, 2.5, 3.5, 0.3),
        (1.5, 2.5, 4.5, 0.999),
        (1.5, 0.5 + 40.0, 1.5 + 40.0, 1.0 - 1e-12),
        (2.5, 1.5 + 0.8, 2.5 + 0.8, -3.0),
        (3.5, 1.5 + 7.5, 3.5 + 7.5, -1e6),
        (1.0, 1.0, 2.0, -0.5),
        (0.5, 0.5, 1.5, 0.25),
        (-3.0, 2.0, 4.0, 0.7),
        (2.5, -39.0, 3.5, 1.0),
        (2.0, 3.0, 7.5, 1.0),
        (1.5, 2.0, 3.0, 0.5),
        (1.5, 2.0, 3.0, -0.95),
    ]
    hyp2f1_rows = [[a, b, c, z, f(hyp2f1(mpf(a), mpf(b), mpf(c), mpf(z)))] for a, b, c, z in hyp]
    shapes = []
    for a in [0.5, 0.8, 1.0, 2.0, 7.5, 40.0]:
        for g in [1e-6, 0.05, 0.4, 1.0, 3.0, 80.0, 1e6]:
            lam, var = moments(a, g)
            shapes.append([a, g, f(lam), f(var)])
    return {"log_gamma": log_gamma, "hyp2f1": hyp2f1_rows, "moments": shapes, "spectra": spectrum_cases()}


def write(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {path.relative_to(ROOT)}")


def main():
    cross_check()
    write(ROOT / "crates/core/tests/fixtures/special_values.json", special_values())
    write(ROOT / "crates/validation/tests/fixtures/oracle.json", {"fig3": fig3(), "spectra": spectrum_cases()})


if __name__ == "__main__":
    main()
