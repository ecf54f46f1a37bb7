"""Independent reference values for the Rust test-suite.

Everything here is computed with mpmath / scipy and frozen into the
fixtures under crates/core/tests/data/. Re-run with

    python3 tools/oracles.py

The parametrizations must match the ones in crates/core/src/geometry.rs:
circle  x(t) = R (cos 2 pi t, sin 2 pi t)
square  counterclockwise, arclength-proportional, starting at (-1,-1)
"""
import json
import math
import os

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 40
HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "crates", "core", "tests", "data")


def a2(z):
    z = mp.mpc(z)
    return 2 * (mp.besselk(0, z) + mp.besselk(1, z) / z - 1 / z**2)


def b2(z):
    z = mp.mpc(z)
    return 2 * (2 / z**2 - mp.besselk(2, z))


def a3(z):
    z = mp.mpc(z)
    return 2 / z**2 * (mp.exp(-z) * (z**2 + z + 1) - 1)


def b3(z):
    z = mp.mpc(z)
    return -2 / z**2 * (mp.exp(-z) * (z**2 + 3 * z + 3) - 3)


def kernel2(r, s, nu=1.0):
    s = mp.mpc(s)
    rx, ry = mp.mpf(r[0]), mp.mpf(r[1])
    rn = mp.sqrt(rx**2 + ry**2)
    z = mp.sqrt(s) * rn
    a, b = a2(z), b2(z)
    c = 1 / (4 * mp.pi * nu)
    return [
        [c * (a + b * rx * rx / rn**2), c * b * rx * ry / rn**2],
        [c * b * rx * ry / rn**2, c * (a + b * ry * ry / rn**2)],
    ]


def cplx(v):
    v = mp.mpc(v)
    return [float(v.real), float(v.imag)]


def bessel_points():
    return {
        "k0_1": float(mp.besselk(0, 1)),
        "k1_1": float(mp.besselk(1, 1)),
        "k2_1": float(mp.besselk(2, 1)),
        "k0_2p3i": cplx(mp.besselk(0, mp.mpc(2, 3))),
        "k1_2p3i": cplx(mp.besselk(1, mp.mpc(2, 3))),
        "k2_2p3i": cplx(mp.besselk(2, mp.mpc(2, 3))),
    }


def scalar_samples(rng, n=200):
    rows = []
    for k in range(n):
        d = 2 if k % 2 == 0 else 3
        mod = 10 ** rng.uniform(-3, math.log10(40.0))
        arg = rng.uniform(-1.25, 1.25)
        z = mp.mpc(mod * math.cos(arg), mod * math.sin(arg))
        if d == 2:
            a, b = a2(z), b2(z)
        else:
            a, b = a3(z), b3(z)
        rows.append({"d": d, "z": cplx(z), "a": cplx(a), "b": cplx(b)})
    return rows


def kernel_samples(rng, n=200):
    rows = []
    for _ in range(n):
        mod = 10 ** rng.uniform(-1, 2)
        arg = rng.uniform(-2.4, 2.4)
        s = mp.mpc(mod * math.cos(arg), mod * math.sin(arg))
        rr = 10 ** rng.uniform(-3, 0.5)
        th = rng.uniform(0, 2 * math.pi)
        r = [rr * math.cos(th), rr * math.sin(th)]
        e = kernel2(r, s)
        rows.append(
            {
                "s": cplx(s),
                "r": r,
                "e": [cplx(e[0][0]), cplx(e[0][1]), cplx(e[1][1])],
            }
        )
    return rows


# Fast double-precision kernel for nested quadrature; mpmath below |z| < 2e-3
# where the 1/z^2 cancellation would cost more than about six digits.
from scipy import special


def a2b2_fast(z):
    if abs(z) < 2e-3:
        with mp.workdps(25):
            return complex(a2(z)), complex(b2(z))
    k0 = special.kv(0, z)
    k1 = special.kv(1, z)
    k2 = special.kv(2, z)
    return 2 * (k0 + k1 / z - 1 / z**2), 2 * (2 / z**2 - k2)


def e2_fast(rx, ry, sqs):
    rn = math.hypot(rx, ry)
    a, b = a2b2_fast(sqs * rn)
    c = 1 / (4 * math.pi)
    return np.array(
        [
            [c * (a + b * rx * rx / rn**2), c * b * rx * ry / rn**2],
            [c * b * rx * ry / rn**2, c * (a + b * ry * ry / rn**2)],
        ]
    )


def circle(t):
    return np.array([math.cos(2 * math.pi * t), math.sin(2 * math.pi * t)]), 2 * math.pi


def square(t):
    t = t % 1.0
    side = min(int(t * 4), 3)
    u = t * 4 - side
    corners = [(-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)]
    a, b = np.array(corners[side], float), np.array(corners[side + 1], float)
    return a + u * (b - a), 8.0


def quad_c(f, a, b, points=None):
    opts = dict(epsabs=1e-15, epsrel=1e-11, limit=200)
    if points is not None:
        opts["points"] = points
    re = integrate.quad(lambda x: f(x).real, a, b, **opts)[0]
    im = integrate.quad(lambda x: f(x).imag, a, b, **opts)[0]
    return complex(re, im)


def galerkin_entry(curve, n, e, f, comp, s, basis_e=None, basis_f=None):
    """<mu_i, V mu_j> with mu supported on elements e, f (P0 or nodal P1)."""
    sqs = complex(mp.sqrt(mp.mpc(s)))
    h = 1.0 / n
    be = basis_e or (lambda u: 1.0)
    bf = basis_f or (lambda u: 1.0)
    ci, cj = comp

    def inner(tx):
        x, jx = curve(tx)

        def g(ty):
            y, jy = curve(ty)
            r = x - y
            return e2_fast(r[0], r[1], sqs)[ci, cj] * jy * bf((ty - f * h) / h)

        pts = [tx] if f * h < tx < (f + 1) * h else None
        return quad_c(g, f * h, (f + 1) * h, points=pts) * jx * be((tx - e * h) / h)

    return quad_c(inner, e * h, (e + 1) * h)


def nystrom_block(curve, n, e, f, s):
    sqs = complex(mp.sqrt(mp.mpc(s)))
    h = 1.0 / n
    xm, jm = curve((e + 0.5) * h)
    out = []
    for ci in range(2):
        for cj in range(2):
            def g(ty):
                y, jy = curve(ty)
                r = xm - y
                return e2_fast(r[0], r[1], sqs)[ci, cj] * jy

            out.append(quad_c(g, f * h, (f + 1) * h) * jm * h)
    return out


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = np.random.default_rng(20140317)
    kern = {
        "bessel": bessel_points(),
        "scalar": scalar_samples(rng),
        "velocity": kernel_samples(rng),
        "velocity_point": {
            "s": [10.0, 5.0],
            "r": [0.3, 0.4],
            "e": [cplx(v) for v in (lambda e: [e[0][0], e[0][1], e[1][1]])(kernel2([0.3, 0.4], mp.mpc(10, 5)))],
        },
    }
    with open(os.path.join(OUT, "kernel_oracle.json"), "w") as fh:
        json.dump(kern, fh, indent=1)

    c2 = lambda v: [v.real, v.imag]
    jobs = {
        "circle4_p0_self_xx_s1": lambda: c2(galerkin_entry(circle, 4, 0, 0, (0, 0), 1.0)),
        "circle4_p0_self_xy_s2p3i": lambda: c2(galerkin_entry(circle, 4, 0, 0, (0, 1), mp.mpc(2, 3))),
        "square4_p0_corner_xy_s2p3i": lambda: c2(galerkin_entry(square, 4, 0, 1, (0, 1), mp.mpc(2, 3))),
        "square4_p0_self_yy_s2p3i": lambda: c2(galerkin_entry(square, 4, 0, 0, (1, 1), mp.mpc(2, 3))),
        "square8_p1_collinear_xx_s1": lambda: c2(
            galerkin_entry(square, 8, 0, 1, (0, 0), 1.0, basis_e=lambda u: u, basis_f=lambda u: 1 - u)
        ),
        "square8_p1_self_xx_s1": lambda: c2(
            galerkin_entry(square, 8, 0, 0, (0, 0), 1.0, basis_e=lambda u: u, basis_f=lambda u: 1 - u)
        ),
        "nystrom_circle8_block01_s1": lambda: [c2(v) for v in nystrom_block(circle, 8, 0, 1, 1.0)],
    }
    # entries are slow; keep finished ones so an interrupted run can resume
    path = os.path.join(OUT, "quadrature_oracle.json")
    quad = {}
    if os.path.exists(path):
        with open(path) as fh:
            quad = json.load(fh)
    for name, job in jobs.items():
        if name in quad:
            continue
        quad[name] = job()
        print(name, quad[name], flush=True)
        with open(path, "w") as fh:
            json.dump(quad, fh, indent=1)


if __name__ == "__main__":
    main()
