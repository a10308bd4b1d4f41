"""Brute-force reference computations shared by the test modules.

Everything here works on quadrature grids with pointwise formulas and never
touches the spectral objectives used by the package.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from spherestab.harmonics import SphereGrid, evaluate


def _l2_objective(values, grid):
    # min over c of ||u - c w_xi||^2 by quadrature, w_xi the normalized extremal
    w = grid.weights
    uu = float(np.dot(w, values * values))
    pts = grid.points
    n = grid.n

    def f(xi):
        r2 = float(xi @ xi)
        if r2 >= 1:
            return math.inf
        v = (math.sqrt(1 - r2) / (1 - pts @ xi)) ** (n / 2)
        uv = float(np.dot(w, values * v))
        vv = float(np.dot(w, v * v))
        return max(uu - uv * uv / vv, 0.0)

    return f


def l2_grid_search(u, radius=0.95, coarse=13, band=96):
    """dist(u, M) by a coarse lattice over |xi| <= radius, then a simplex
    refinement of the quadrature objective from the best lattice points.

    Returns (d, xi).
    """
    grid = SphereGrid.for_band_limit(u.n, band, 1)
    values = evaluate(u, grid.points)
    f = _l2_objective(values, grid)
    axis = np.linspace(-radius, radius, coarse)
    lattice = [np.array(p) for p in itertools.product(axis, repeat=u.n + 1) if np.linalg.norm(p) <= radius]
    scored = sorted(((f(p), tuple(p)) for p in lattice))[:4]
    best = (math.inf, None)
    for _, p in scored:
        res = minimize(f, np.array(p), method="Nelder-Mead", options={"xatol": 1e-11, "fatol": 1e-18, "maxiter": 4000})
        if res.fun < best[0]:
            best = (float(res.fun), res.x)
    return math.sqrt(best[0]), best[1]


def d0_double_integral(func, n_outer=24, n_theta=48, n_phi=24):
    """iint_{S^2 x S^2} |f(w) - f(e)|^2 / |w - e|^2 for f invariant about the z-axis.

    The inner integral is written in geodesic polar coordinates around w;
    the integrand |f(w) - f(e)|^2 sin(t) / (2 - 2 cos t) is smooth in t.
    """
    tg, wg = np.polynomial.legendre.leggauss(n_outer)
    th, wt = np.polynomial.legendre.leggauss(n_theta)
    th = (th + 1) * math.pi / 2
    wt = wt * math.pi / 2
    phis = 2 * math.pi * np.arange(n_phi) / n_phi
    total = 0.0
    for t_out, w_out in zip(tg, wg):
        s_out = math.sqrt(1 - t_out * t_out)
        w = np.array([s_out, 0.0, t_out])
        e1 = np.array([t_out, 0.0, -s_out])
        e2 = np.array([0.0, 1.0, 0.0])
        fw = func(w[None, :])[0]
        inner = 0.0
        for t, wtt in zip(th, wt):
            ring = (
                math.cos(t) * w[None, :]
                + math.sin(t) * (np.cos(phis)[:, None] * e1[None, :] + np.sin(phis)[:, None] * e2[None, :])
            )
            diff2 = (fw - func(ring)) ** 2
            inner += wtt * math.sin(t) / (2 - 2 * math.cos(t)) * diff2.mean() * 2 * math.pi
        total += w_out * 2 * math.pi * inner
    return total
