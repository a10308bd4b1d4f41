"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from oracles import l2_grid_search

from spherestab.conformal import (
    extremal,
    harmonic_tangent_basis,
    jacobian,
    pullback,
    tangent_basis,
)
from spherestab.functionals import (
    l2_distance_to_M,
    ls_deficit,
    mo_deficit,
    sharp_constant,
)
from spherestab.harmonics import SpectralFunction, SphereGrid, analysis, sphere_area, synthesis
from spherestab.operators import H, apply_multiplier, multiplier_H, pv_H_zonal_oracle
from spherestab.specfun import gegenbauer_eval
from spherestab.stability import (
    degree_one_degeneracy,
    fit_exponent,
    koenig_gap_probe,
    local_constant_sweep,
    scaling_counterexample,
)

Y = SpectralFunction.harmonic
EPS = (0.2, 0.1, 0.05, 0.025, 0.0125)


def ball_point(n, r, seed):
    v = np.random.default_rng(seed).standard_normal(n + 1)
    return r * v / np.linalg.norm(v)


def random_positive(n, L, rng, zonal=False):
    # 1 + band-limited noise with coefficients N(0, (0.1 / l)^2)
    u = SpectralFunction.zeros(n, L, zonal=zonal)
    c = rng.standard_normal(u.coeffs.size) * 0.1 / np.maximum(u.degrees, 1)
    c[0] = 0.0
    return SpectralFunction(n, L, c, zonal) + 1.0


def dist(u):
    return l2_distance_to_M(u, residual=False).d


def test_criterion_1_eigenvalues(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 3, 4):
        for l in range(1, 7):
            g = lambda t: gegenbauer_eval(n, l, t) / gegenbauer_eval(n, l, 1.0)
            worst = max(worst, abs(pv_H_zonal_oracle(n, g, 64) / multiplier_H(n, l) - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-7 and elapsed < 1.0
    assert criterion(1, ok, f"max rel err {worst:.2e}, {elapsed:.2f} s")


def test_criterion_2_local_ls_constant(criterion):
    out = []
    ok = True
    for n, zonal, target in ((2, False, 2 * math.pi), (4, True, 4 * math.pi**2 / 3)):
        assert 8 * math.pi ** (n / 2) / (math.gamma(n / 2) * (n + 2)) == pytest.approx(target, rel=1e-14)
        t0 = time.perf_counter()
        res = local_constant_sweep("LS", Y(n, 16, 2, 0, zonal=zonal), EPS)
        elapsed = time.perf_counter() - t0
        rel = abs(res.limit / target - 1)
        ok &= rel < 1e-2 and elapsed < 30
        out.append(f"n={n}: {res.limit:.7f} rel {rel:.1e} in {elapsed:.1f} s")
    assert criterion(2, ok, "; ".join(out))


def test_criterion_3_local_mo_constant(criterion):
    t0 = time.perf_counter()
    res = local_constant_sweep("MO", Y(2, 16, 2, 0), EPS)
    elapsed = time.perf_counter() - t0
    rel = abs(res.limit * math.pi - 1)
    ok = rel < 1e-2 and elapsed < 30
    assert criterion(3, ok, f"{res.limit:.7f} vs 1/pi, rel {rel:.1e} in {elapsed:.1f} s")


def test_criterion_4_koenig_gap(criterion):
    # moments by quadrature, independent of the Gamma formula
    grid = SphereGrid.for_band_limit(2, 12, 2)
    w = grid.points
    m4 = grid.integrate(w[:, 0] ** 2 * w[:, 1] ** 2)
    m6 = grid.integrate((w[:, 0] * w[:, 1] * w[:, 2]) ** 2)
    moments_ok = abs(m4 - 4 * math.pi / 15) < 1e-10 and abs(m6 - 4 * math.pi / 105) < 1e-10
    predicted = -2 / 3 * sharp_constant(2) * (6 * m6) / (3 * m4) ** 1.5
    res = koenig_gap_probe()
    x = res.extra
    rel = abs(x["slope"] / predicted - 1)
    dip = 2 * math.pi - x["ratio_at_favourable"]
    ok = moments_ok and rel < 2e-2 and x["favourable_eps"] == 0.05 and dip > 10 * x["quadrature_budget"]
    detail = (
        f"slope {x['slope']:.6f} vs {predicted:.6f} (rel {rel:.1e}); "
        f"ratio(0.05) = 2pi - {dip:.4f}, budget {x['quadrature_budget']:.1e}"
    )
    assert criterion(4, ok, detail)


@pytest.mark.xfail(
    strict=True,
    reason=(
        "d_0(1 + eps Y_1, M) = 0 for every eps: v_{c, delta e} - c tends to a multiple of Y_1 in d_0 "
        "as delta -> 0, so the ratio is LS / (optimizer floor) and not monotone"
    ),
)
def test_criterion_5_d0_instability(criterion):
    res = degree_one_degeneracy((0.2, 0.1, 0.05, 0.025), n=2, mode="d0", L=8)
    r = res.ratios
    decreasing = all(b < a for a, b in zip(r, r[1:]))
    halved = r[-1] < 0.5 * r[0]
    identity = abs(multiplier_H(2, 1) - sharp_constant(2)) < 1e-12
    attained = not any(res.extra["at_boundary"])
    ok = decreasing and halved and identity and attained
    detail = (
        f"ratios {', '.join(f'{v:.2e}' for v in r)}; decreasing={decreasing}, halved={halved}, "
        f"H_1 = C_n: {identity}, minimizers interior: {attained}"
    )
    assert criterion(5, ok, detail)


def test_criterion_6_mo_scaling(criterion):
    u = 1 + 0.1 * Y(2, 4, 2, 0)
    res = scaling_counterexample(lambda v: mo_deficit(v).deficit, dist, u, 2.0, (1, 2, 4, 8, 16))
    ok = abs(res.exponent + 2) < 1e-3
    assert criterion(6, ok, f"fitted exponent {res.exponent:.10f}")


def test_criterion_7_homogeneity_transfer(criterion):
    u = 1 + 0.1 * Y(2, 4, 2, 0) + 0.05 * Y(2, 4, 3, 1)
    ratios = []
    for m in range(1, 17):
        v = u / m
        ratios.append(ls_deficit(v).deficit / dist(v) ** 2)
    spread = max(abs(r / ratios[0] - 1) for r in ratios)
    assert criterion(7, spread < 1e-6, f"max rel spread {spread:.1e} over m = 1..16")


def _invariance_error(rng):
    worst = 0.0
    grid = SphereGrid.for_band_limit(2, 64, 2)
    for _ in range(3):
        u = random_positive(2, 4, rng)
        xi = ball_point(2, 0.5 * rng.uniform(0.2, 1.0), int(rng.integers(1 << 30)))
        pu = pullback(u, xi, grid)
        ls0, ls1 = ls_deficit(u).deficit, ls_deficit(pu).deficit
        mo0, mo1 = mo_deficit(u, f_band=64).deficit, mo_deficit(pu).deficit
        worst = max(worst, abs(ls1 - ls0) / (1 + abs(ls0)), abs(mo1 - mo0) / (1 + abs(mo0)))
    return worst


def _covariance_residual():
    rng = np.random.default_rng(4)
    u = SpectralFunction(2, 5, rng.standard_normal(36))
    xi = ball_point(2, 0.5, 9)
    grid = SphereGrid.for_band_limit(2, 80, 4)
    pu = pullback(u, xi, grid)
    lhs = synthesis(apply_multiplier(analysis(pu, 80), H(2)), grid).values
    rhs = pullback(apply_multiplier(u, H(2)), xi, grid).values
    rhs = rhs + sharp_constant(2) * pu.values * 0.5 * np.log(jacobian(xi, grid.points))
    return math.sqrt(grid.integrate((lhs - rhs) ** 2)) / u.norm()


def test_criterion_8_structural_invariants(criterion):
    rng = np.random.default_rng(2024)
    checks = {}
    # Parseval round trip
    u = SpectralFunction(2, 12, rng.standard_normal(169))
    grid = SphereGrid.for_band_limit(2, 12, 2)
    back = analysis(synthesis(u, grid), 12)
    checks["parseval"] = max(float(np.abs(back.coeffs - u.coeffs).max()), abs(synthesis(u, grid).norm() / u.norm() - 1))
    checks["invariance"] = _invariance_error(rng)
    big = SphereGrid.for_band_limit(2, 120, 1)
    checks["jacobian"] = max(
        abs(big.integrate(jacobian(ball_point(2, r, 5), big.points)) / sphere_area(2) - 1) for r in (0.1, 0.5, 0.9)
    )
    checks["covariance"] = _covariance_residual()
    tg = SphereGrid.for_band_limit(2, 60, 2)
    xi = ball_point(2, 0.4, 21)
    checks["tangent"] = float(tangent_basis(1.7, xi, tg.L, grid=tg).angles(harmonic_tangent_basis(xi, tg)).max())
    fine = SphereGrid.for_band_limit(2, 90, 2)
    checks["isometry"] = abs(pullback(u.padded(12), ball_point(2, 0.3, 2), fine).norm() / u.norm() - 1)
    worst_def = math.inf
    for seed in range(100):
        r = np.random.default_rng(seed)
        v = random_positive(2, 1 + seed % 6, r)
        worst_def = min(worst_def, ls_deficit(v).deficit, mo_deficit(v, f_band=64).deficit)
    checks["min_deficit"] = worst_def
    limits = {
        "parseval": 1e-10, "invariance": 1e-7, "jacobian": 1e-10,
        "covariance": 1e-6, "tangent": 1e-6, "isometry": 1e-10,
    }
    ok = all(checks[k] < v for k, v in limits.items()) and worst_def >= -1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in checks.items())
    assert criterion(8, ok, detail)


def test_criterion_9_distance(criterion):
    errs = {}
    errs["d(1+eps Y2)"] = max(abs(dist(1 + e * Y(2, 4, 2, 0)) / e - 1) for e in (0.01, 0.005, 0.001))
    worst_rec = 0.0
    grid = SphereGrid.for_band_limit(2, 96, 2)
    for c, xi in ((1.0, (0.0, 0.0, 0.3)), (2.5, (0.2, -0.3, 0.1)), (0.7, (-0.4, 0.1, 0.35))):
        xi = np.array(xi)
        u = analysis(extremal(c, xi, grid=grid), 24)
        res = l2_distance_to_M(u, residual=False)
        worst_rec = max(worst_rec, abs(res.c_star / c - 1), float(np.abs(np.array(res.xi_star) - xi).max()))
    errs["recovery"] = worst_rec
    bumped = analysis(extremal(1.0, np.array([0.1, -0.2, 0.25]), grid=grid), 24) + 0.05 * Y(2, 24, 3, 2)
    inputs = [
        1 + 0.3 * Y(2, 4, 1, 0),
        1 + 0.2 * Y(2, 4, 1, 1) + 0.1 * Y(2, 4, 2, 3),
        bumped,
    ]
    worst_oracle = 0.0
    for u in inputs:
        d_ref, _ = l2_grid_search(u)
        worst_oracle = max(worst_oracle, abs(dist(u) / d_ref - 1))
    errs["grid oracle"] = worst_oracle
    ok = errs["d(1+eps Y2)"] < 1e-6 and worst_rec < 1e-6 and worst_oracle < 1e-5
    assert criterion(9, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
