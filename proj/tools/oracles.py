#!/usr/bin/env python3
"""Independent high-precision oracles whose outputs are frozen into the C++
tests. Every value printed here is computed from first principles (mpmath
quadrature / root finding), never from the closed forms the library uses.

Run:  python3 tools/oracles.py [section ...]
"""
import sys

import mpmath as mp

mp.mp.dps = 50


def phi(x):
    return mp.exp(-x * x / 2) / mp.sqrt(2 * mp.pi)


def Phi(x):
    return mp.ncdf(x)


def section_normal():
    print("# std_normal_cdf(x) by mpmath.ncdf (30 digits)")
    for x in ["-8", "-3", "-1", "-0.5", "0.5", "1", "3", "8"]:
        print(f"Phi({x}) = {mp.nstr(Phi(mp.mpf(x)), 30)}")


def section_g1g2():
    # Oracle: direct numerical integration of the defining expectations,
    # E[(G+x)_+]   = int_{-x}^{inf} (g+x) phi(g) dg
    # E[(G+x)_+^2] = int_{-x}^{inf} (g+x)^2 phi(g) dg
    print("# g1/g2 by direct mpmath quadrature of the defining integrals (30 digits)")
    for x in ["-2", "-0.5", "0", "0.7", "1", "1.3", "3"]:
        xm = mp.mpf(x)
        v = mp.quad(lambda g: (g + xm) * phi(g), [-xm, mp.inf])
        print(f"g1({x}) = {mp.nstr(v, 30)}")
    for x in ["-20", "-1", "0", "0.7", "2"]:
        xm = mp.mpf(x)
        v = mp.quad(lambda g: (g + xm) ** 2 * phi(g), [-xm, mp.inf])
        print(f"g2({x}) = {mp.nstr(v, 30)}")


def section_g1inv():
    # Oracle: root of the integral-defined g1 (not the closed form).
    print("# g1_inv by mpmath root solve on the integral definition (30 digits)")

    def g1_int(x):
        return mp.quad(lambda g: (g + x) * phi(g), [-x, mp.inf])

    for y in ["0.05", "0.5", "2", "5"]:
        ym = mp.mpf(y)
        r = mp.findroot(lambda x: g1_int(x) - ym, ym if ym > 1 else mp.mpf("-1"))
        print(f"g1_inv({y}) = {mp.nstr(r, 30)}")
    print("# g_fun(2.0) = g2(g1_inv(2.0)) via the integral forms")
    r = mp.findroot(lambda x: g1_int(x) - 2, mp.mpf(2))
    v = mp.quad(lambda g: (g + r) ** 2 * phi(g), [-r, mp.inf])
    print(f"g_fun(2) = {mp.nstr(v, 30)}")


def section_prox():
    # Oracle: the logistic-loss prox at (x=0, lam=1) solves t = 1/(1+e^t);
    # solved by bisection on [0,1] to 1e-40.
    print("# prox_logistic(0, 1) by mpmath bisection (30 digits)")
    lo, hi = mp.mpf(0), mp.mpf(1)
    f = lambda t: t - 1 / (1 + mp.exp(t))
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    print(f"prox(0, 1) = {mp.nstr((lo + hi) / 2, 30)}")


def section_gh():
    # Reference Gauss-Hermite nodes/weights on the N(0,1) scale, order 20,
    # from numpy.polynomial (independent of the Golub-Welsch route).
    import numpy as np

    x, w = np.polynomial.hermite.hermgauss(20)
    z = np.sqrt(2.0) * x
    wn = w / np.sqrt(np.pi)
    print("# order-20 Gauss-Hermite (normal scale), numpy reference")
    for zi, wi in zip(z, wn):
        print(f"{zi:.16e} {wi:.16e}")


SECTIONS = {
    "normal": section_normal,
    "g1g2": section_g1g2,
    "g1inv": section_g1inv,
    "prox": section_prox,
    "gh": section_gh,
}

if __name__ == "__main__":
    names = sys.argv[1:] or list(SECTIONS)
    for n in names:
        SECTIONS[n]()
