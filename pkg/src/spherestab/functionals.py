"""Sharp log-Sobolev and Moser-Onofri deficits and distances to M.

The log-Sobolev (LS) deficit of u on S^n is

    LS(u) = iint |u(w) - u(e)|^2 / |w - e|^n dw de - C_n int u^2 ln(u^2 |S^n| / ||u||^2),

with C_n = (4/n) pi^(n/2) / Gamma(n/2). The double integral equals
2 <u, H u> = 2 sum H_l |u_{l,m}|^2 and is evaluated spectrally; the entropy
is evaluated by quadrature.
The Moser-Onofri (MO) deficit of a positive u with f = ln u^2 is

    MO(u) = (1 / (2 n!)) mean(f A_n f) + mean(f) - ln mean(u^2).

Distances to M are minimized over the conformal parameter xi with the
amplitude c eliminated in closed form. Objectives are spectral: the
coefficients of v_{1,xi} are known exactly through their zonal profile, so
no grid is involved in the search.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from spherestab.conformal import extremal_spectrum, tangent_basis
from spherestab.errors import DomainError, MembershipError, QuadratureFailure, ResolutionError
from spherestab.harmonics import (
    GridFunction,
    SpectralFunction,
    SphereGrid,
    analysis,
    degree_index,
    sphere_area,
    synthesis,
)
from spherestab.operators import multiplier_An, multiplier_H

__all__ = [
    "sharp_constant",
    "DeficitReport",
    "DistanceResult",
    "ls_deficit",
    "ls_quadratic_term",
    "mo_deficit",
    "l2_distance_to_M",
    "d0_metric",
    "d0_distance_to_M",
    "R_MAX",
    "XATOL",
    "MAXITER",
]

# Largest |xi| reachable by the optimizer chart.
R_MAX = 0.999
# Simplex diameter (in the chart) and iteration cap for Nelder-Mead.
XATOL = 1e-10
MAXITER = 400


def sharp_constant(n: int) -> float:
    """C_n = (4/n) pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {n}")
    return 4 / n * math.pi ** (n / 2) / math.gamma(n / 2)


def _finite(x: float) -> float:
    if not math.isfinite(x):
        raise QuadratureFailure(f"non-finite intermediate value {x}")
    return float(x)


@dataclass(frozen=True)
class DeficitReport:
    """Value of a deficit functional and its two parts.

    ``deficit = quadratic_term - entropy_or_log_term`` for both functionals;
    for MO the log term is ln mean(u^2) - mean(ln u^2).
    """

    functional: str
    n: int
    L: int
    quadratic_term: float
    entropy_or_log_term: float
    deficit: float
    grid_size: tuple
    d2: float | None = None
    minimizer: dict | None = None
    ratio: float | None = None
    optimality_residual: float | None = None

    def with_distance(self, dist: DistanceResult) -> DeficitReport:
        """Attach d^2, the minimizer and deficit / d^2 from a distance result."""
        d2 = dist.d**2
        return replace(
            self,
            d2=d2,
            minimizer={"c": dist.c_star, "xi": list(dist.xi_star)},
            ratio=self.deficit / d2 if d2 > 0 else None,
            optimality_residual=(
                dist.optimality_residual if math.isfinite(dist.optimality_residual) else None
            ),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid_size"] = list(self.grid_size)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class DistanceResult:
    """Outcome of a distance-to-M minimization."""

    metric: str
    d: float
    c_star: float
    xi_star: tuple
    converged: bool
    starts_used: int
    optimality_residual: float = float("nan")
    at_boundary: bool = False
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["xi_star"] = list(self.xi_star)
        d["history"] = [list(h) for h in self.history]
        if not math.isfinite(self.optimality_residual):
            d["optimality_residual"] = None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --------------------------------------------------------------------------
# LS


def ls_quadratic_term(u: SpectralFunction) -> float:
    """iint |u(w) - u(e)|^2 / |w - e|^n = 2 <u, H u> = 2 sum_l H_l sum_m u_{l,m}^2."""
    H = multiplier_H(u.n, np.arange(u.L + 1))
    return 2 * float(np.sum(H[u.degrees] * u.coeffs**2))


def _entropy(values: np.ndarray, grid: SphereGrid) -> float:
    """int u^2 ln(u^2 |S| / ||u||^2) by quadrature.

    Written as (||u||^2 / |S|) int (rho ln rho - rho + 1) with rho the
    normalized density; the integrand is nonnegative and O((rho - 1)^2), so
    nearly constant u lose no digits to cancellation.
    """
    w = grid.weights
    u2 = values * values
    norm2 = float(np.dot(w, u2))
    if not norm2 > 0:
        raise DomainError("the entropy of the zero function is undefined")
    area = sphere_area(grid.n)
    rho = u2 * (area / norm2)
    x = rho - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(u2 < 1e-300, 1.0, (1 + x) * np.log1p(x) - x)
    # sum w (rho - 1) is zero up to the rounding of sum(w) = |S|
    total = float(np.dot(w, integrand)) + (area - float(w.sum()))
    return _finite(norm2 / area * total)


def ls_deficit(u, oversample: int = 4) -> DeficitReport:
    """LS deficit of a SpectralFunction or GridFunction.

    A SpectralFunction is sampled on a grid ``oversample`` times its band
    limit for the entropy. A GridFunction is used as given, with the
    quadratic term taken from its expansion to the grid's band limit.
    """
    if isinstance(u, SpectralFunction):
        spec = u
        grid = SphereGrid.for_band_limit(u.n, u.L, oversample, zonal=u.zonal)
        values = synthesis(u, grid).values
    elif isinstance(u, GridFunction):
        grid = u.grid
        spec = analysis(u, grid.L)
        values = u.values
    else:
        raise TypeError(f"ls_deficit takes a SpectralFunction or GridFunction, not {type(u).__name__}")
    if not np.all(np.isfinite(values)):
        raise QuadratureFailure("non-finite samples")
    quad = _finite(ls_quadratic_term(spec))
    ent = sharp_constant(u.n) * _entropy(values, grid)
    return DeficitReport("LS", u.n, spec.L, quad, ent, quad - ent, (grid.k_t, grid.k_phi))


# --------------------------------------------------------------------------
# MO


def mo_deficit(
    u,
    positivity_check: bool = True,
    f_band: int | None = None,
    oversample: int = 2,
    tail_tol: float = 1e-12,
) -> DeficitReport:
    """MO deficit of a positive SpectralFunction or GridFunction.

    f = ln u^2 is expanded to degree ``f_band`` (default 4L for spectral
    input, the grid's band limit for grid input). The energy of f above
    f_band / 2 must be below ``tail_tol`` of the total, otherwise the A_n
    quadratic form is not resolved and ResolutionError is raised.
    """
    if isinstance(u, SpectralFunction):
        L_f = 4 * max(u.L, 1) if f_band is None else f_band
        grid = SphereGrid.for_band_limit(u.n, L_f, oversample, zonal=u.zonal)
        values = synthesis(u, grid).values
        L_u = u.L
    elif isinstance(u, GridFunction):
        grid = u.grid
        L_f = grid.L if f_band is None else f_band
        values = u.values
        L_u = grid.L
    else:
        raise TypeError(f"mo_deficit takes a SpectralFunction or GridFunction, not {type(u).__name__}")
    n = u.n
    vmax = float(np.max(np.abs(values)))
    vmin = float(np.min(values))
    if positivity_check and not vmin > 1e-8 * vmax:
        raise MembershipError(f"u is not positive: min {vmin:.3e}, max {vmax:.3e}")
    if not np.all(values != 0):
        raise MembershipError("u vanishes at a grid node; ln u^2 is undefined")
    f = 2 * np.log(np.abs(values))
    fs = analysis(GridFunction(grid, f), L_f)
    deg = fs.degrees
    energy = float(np.sum(fs.coeffs**2))
    tail = float(np.sum(fs.coeffs[deg > L_f // 2] ** 2))
    if tail > tail_tol * energy and energy > 1e-300:
        raise ResolutionError(
            f"ln u^2 has relative energy {tail / energy:.2e} above degree {L_f // 2}; raise f_band"
        )
    area = sphere_area(n)
    A = multiplier_An(n, np.arange(L_f + 1))
    quad = float(np.sum(A[deg] * fs.coeffs**2)) / (2 * math.gamma(n + 1) * area)
    w = grid.weights
    mean_f = float(np.dot(w, f)) / area
    mean_u2 = float(np.dot(w, values * values)) / area
    log_term = _finite(math.log(mean_u2) - mean_f)
    return DeficitReport("MO", n, L_u, _finite(quad), log_term, quad - log_term, (grid.k_t, grid.k_phi))


# --------------------------------------------------------------------------
# distances


def _chart(z: np.ndarray, n: int, zonal: bool) -> np.ndarray:
    """Map R^k onto the open ball of radius R_MAX (k = 1 on the zonal axis)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    rad = float(np.linalg.norm(z))
    v = z if rad == 0 else z * (math.tanh(rad) / rad)
    v = R_MAX * v
    if zonal:
        xi = np.zeros(n + 1)
        xi[-1] = v[0]
        return xi
    return v


def _chart_inverse(xi: np.ndarray, zonal: bool) -> np.ndarray:
    v = np.array([xi[-1]]) if zonal else np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(v))
    if r == 0:
        return np.zeros_like(v)
    r = min(r, R_MAX * (1 - 1e-9))
    return v / np.linalg.norm(v) * math.atanh(r / R_MAX)


class _Objective:
    """Spectral distance objective xi -> min_c d(u, v_{c,xi})^2."""

    def __init__(self, u: SpectralFunction, metric: str):
        self.u = u
        self.metric = metric
        deg = degree_index(u.n, u.L, u.zonal)
        self.weight = multiplier_H(u.n, deg) if metric == "d0" else np.ones(len(deg))
        self.area = sphere_area(u.n)

    def _tail(self, profile: np.ndarray) -> float:
        # degree-l energy of v_{1,xi} is profile_l^2 whatever the direction of xi
        rest = profile[self.u.L + 1 :]
        if rest.size == 0:
            return 0.0
        if self.metric == "d0":
            rest = rest * np.sqrt(multiplier_H(self.u.n, np.arange(self.u.L + 1, self.u.L + 1 + rest.size)))
        return float(np.sum(rest**2))

    def __call__(self, xi: np.ndarray) -> tuple:
        head, profile = extremal_spectrum(self.u.n, xi, self.u.L, self.u.zonal)
        tail = self._tail(profile)
        a = self.u.coeffs
        num = float(np.sum(self.weight * a * head))
        den = float(np.sum(self.weight * head * head)) + tail
        # d0 at xi = 0: v is constant, invisible to H, and c drops out
        c = num / den if den > 0 else 0.0
        resid = float(np.sum(self.weight * (a - c * head) ** 2)) + c * c * tail
        if self.metric == "d0":
            resid *= 2
        return max(resid, 0.0), c


def _moment_start(u: SpectralFunction) -> np.ndarray:
    """xi proportional to the centre of mass of u^2, capped at |xi| = 0.8."""
    grid = SphereGrid.for_band_limit(u.n, u.L, 2, zonal=u.zonal)
    v2 = synthesis(u, grid).values ** 2
    mass = grid.integrate(v2)
    if mass <= 0:
        return np.zeros(u.n + 1)
    pts = grid.points
    com = np.array([grid.integrate(v2 * pts[:, i]) for i in range(u.n + 1)]) / mass
    if u.zonal:
        com[:-1] = 0.0
    xi = (u.n + 1) / u.n * com
    r = float(np.linalg.norm(xi))
    return xi if r <= 0.8 else xi * (0.8 / r)


def _minimize(obj: _Objective, starts: list, zonal: bool) -> list:
    n = obj.u.n
    runs = []
    for xi0 in starts:
        z0 = _chart_inverse(np.asarray(xi0, dtype=float), zonal)
        k = len(z0)
        simplex = np.vstack([z0] + [z0 + 0.1 * np.eye(k)[i] for i in range(k)])
        res = minimize(
            lambda z: obj(_chart(z, n, zonal))[0],
            z0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": XATOL,
                "fatol": np.inf,
                "maxiter": MAXITER,
                "maxfev": 4 * MAXITER,
            },
        )
        xi = _chart(res.x, n, zonal)
        f, c = obj(xi)
        runs.append((f, float(np.linalg.norm(xi)), xi, c, bool(res.status == 0)))
    return runs


def _distance(u, metric: str, starts, residual: bool) -> DistanceResult:
    if isinstance(u, GridFunction):
        u = analysis(u, u.grid.L)
    if not isinstance(u, SpectralFunction):
        raise TypeError("distance_to_M takes a SpectralFunction or GridFunction")
    n = u.n
    zonal = u.zonal
    scale = u.norm()
    if not scale > 0:
        raise DomainError("distance to M of the zero function")
    u = u / scale
    candidates = [np.zeros(n + 1), _moment_start(u)]
    for s in starts:
        s = np.asarray(s, dtype=float)
        if s.shape != (n + 1,) or not np.linalg.norm(s) < 1:
            raise DomainError(f"start {s} is not a point of the open unit ball in R^{n + 1}")
        if zonal and np.any(s[:-1] != 0):
            raise DomainError("zonal inputs take starts on the axis only")
        candidates.append(s)
    obj = _Objective(u, metric)
    runs = _minimize(obj, candidates, zonal)
    # lowest objective wins; near-ties go to the smaller |xi|
    fbest = min(r[0] for r in runs)
    tol = 1e-12 * max(fbest, obj.area * 1e-300) + 1e-300
    best = min((r for r in runs if r[0] <= fbest + tol), key=lambda r: (r[1], r[0]))
    f, r, xi, c, conv = best
    # d0 runs off to xi -> 0 with c ~ 1/|xi| when u has a degree-one part
    at_boundary = r > R_MAX * (1 - 1e-6) or (metric == "d0" and r < 1e-4 and abs(c) * r > 1e-3)
    resid = float("nan")
    if residual and not at_boundary:
        resid = _optimality_residual(u, c, xi, metric)
    return DistanceResult(
        metric=metric,
        d=math.sqrt(f) * scale,
        c_star=float(c) * scale,
        xi_star=tuple(float(x) for x in xi),
        converged=conv,
        starts_used=len(candidates),
        optimality_residual=resid,
        at_boundary=bool(at_boundary),
        history=tuple((float(rr[0]) * scale**2, float(rr[1])) for rr in runs),
    )


def _optimality_residual(u: SpectralFunction, c: float, xi: np.ndarray, metric: str) -> float:
    """Largest normalized pairing of u - v_{c,xi} with the tangent space at (c, xi).

    L2 uses the L^2 pairing; d0 pairs through H (the Hessian-free first
    variation of the d0 objective).
    """
    L = max(u.L, 24)
    grid = SphereGrid.for_band_limit(u.n, L, 4, zonal=u.zonal)
    basis = tangent_basis(c, xi, grid.L, grid=grid)
    vals = synthesis(u.padded(L), grid).values
    resid = vals - c * basis.values[0]
    if metric == "l2":
        g = basis.values @ (grid.weights * resid)
        norms = np.sqrt(basis.values**2 @ grid.weights)
        scale = math.sqrt(float(np.dot(grid.weights, vals * vals)))
    else:
        H = multiplier_H(u.n, np.arange(grid.L + 1))
        rs = analysis(GridFunction(grid, resid), grid.L)
        g = []
        norms = []
        for v in basis.values:
            vs = analysis(GridFunction(grid, v), grid.L)
            g.append(2 * float(np.sum(H[vs.degrees] * vs.coeffs * rs.coeffs)))
            norms.append(math.sqrt(2 * float(np.sum(H[vs.degrees] * vs.coeffs**2))) + 1e-300)
        g, norms = np.array(g), np.array(norms)
        us = u.padded(L)
        scale = math.sqrt(2 * float(np.sum(H[us.degrees] * us.coeffs**2)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(g) / (norms * scale)))


def l2_distance_to_M(u, starts=(), residual: bool = True) -> DistanceResult:
    """dist(u, M) in L^2(S^n), minimized over xi from 0, a centre-of-mass
    start and any user ``starts``."""
    return _distance(u, "l2", starts, residual)


def d0_metric(u: SpectralFunction, v: SpectralFunction) -> float:
    """d_0(u, v) = sqrt(2 <u - v, H (u - v)>); constants are invisible to it."""
    diff = u - v
    return math.sqrt(max(ls_quadratic_term(diff), 0.0))


def d0_distance_to_M(u, starts=(), residual: bool = True) -> DistanceResult:
    """inf over M of d_0(u, v).

    The infimum need not be attained: as xi -> 0 with c |xi| fixed,
    v_{c,xi} - c converges in d_0 to a degree-one harmonic, so inputs with a
    degree-one component are approached by the boundary xi = 0. Such results
    carry ``at_boundary=True``.
    """
    return _distance(u, "d0", starts, residual)
