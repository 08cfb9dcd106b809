"""Derive Daubechies scaling filters db1..db8 by spectral factorization.

Prints C++ initializers for src/wavelet_filters.cpp. Roots of the half-band
polynomial are taken inside the unit circle (extremal phase), which matches
the usual dbN tables.
"""
import mpmath as mp

mp.mp.dps = 60


def daubechies(n):
    # P(y) = sum_k C(n-1+k, k) y^k, y = sin^2(w/2)
    coeffs = [mp.binomial(n - 1 + k, k) for k in range(n)]
    yroots = mp.polyroots(list(reversed(coeffs)), maxsteps=400, extraprec=400) if n > 1 else []
    zroots = []
    for y in yroots:
        # y = (2 - z - 1/z) / 4  ->  z^2 - (2 - 4y) z + 1 = 0
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        zroots.append(z1 if abs(z1) < 1 else z2)
    poly = [mp.mpf(1)]
    def mul(p, q):
        r = [mp.mpc(0)] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            for j, c in enumerate(q):
                r[i + j] += a * c
        return r
    for _ in range(n):
        poly = mul(poly, [mp.mpf(1), mp.mpf(1)])
    for z in zroots:
        poly = mul(poly, [-z, mp.mpf(1)])
    poly = [mp.re(c) for c in poly]
    s = sum(poly)
    return [c * mp.sqrt(2) / s for c in poly]


for n in range(1, 9):
    h = daubechies(n)
    if h[0] < 0 or abs(h[0]) < abs(h[-1]):
        h = list(reversed(h))
    print("    // db%d" % n)
    print("    {" + ", ".join(mp.nstr(c, 20, min_fixed=-30, max_fixed=30) for c in h) + "},")
