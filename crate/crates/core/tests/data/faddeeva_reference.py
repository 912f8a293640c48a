"""Reference values of the Faddeeva function w(z) = exp(-z^2) erfc(-iz).

Evaluated with mpmath at 50 significant digits and printed as Rust tuples
(re z, im z, re w, im w). The output is frozen into tests/faddeeva.rs.
"""
import math
import random

import mpmath

mpmath.mp.dps = 50


def w(z):
    return mpmath.exp(-z * z) * mpmath.erfc(-1j * z)


def main():
    rng = random.Random(20240611)
    points = [
        (0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (3.0, 0.0), (5.5, 1e-3), (6.3, 1e-8),
        (-2.4, 3.9e-5), (0.176, 1.258), (9.9, 0.2), (-7.0, 7.0), (1e-4, 1e-4),
        (2.0, 10.0), (-15.0, 1.0), (40.0, 0.01), (300.0, 150.0), (-1234.5, 67.8),
        (0.3, 4.0), (4.2, 2.9), (-0.05, 0.6), (8.0, 5.99),
    ]
    for _ in range(60):
        r = 10.0 * math.sqrt(rng.random())
        th = math.pi * rng.random()
        points.append((r * math.cos(th), r * math.sin(th)))
    lower = [(1.0, -1.0), (-2.5, -0.7), (3.0, -2.0), (0.2, -4.0), (-6.0, -3.0), (4.5, -0.01)]
    for (x, y) in points + lower:
        v = w(mpmath.mpc(x, y))
        print(f"    ({x!r}, {y!r}, {mpmath.nstr(v.real, 20)}, {mpmath.nstr(v.imag, 20)}),")


if __name__ == "__main__":
    main()
