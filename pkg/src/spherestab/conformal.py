"""The extremal manifold M and the conformal group acting on S^n.

M consists of the functions

    v_{c,xi}(w) = c (sqrt(1 - |xi|^2) / (1 - xi . w))^(n/2),   |xi| < 1,

(normalized parametrization; the unnormalized family c (1 - xi . w)^(-n/2)
is the same set). Each v_{1,xi} is J^(1/2) for the Moebius map ``mobius(xi)``,
so M is the orbit of the constants under u -> J^(1/2) u o Phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import subspace_angles

from spherestab.errors import DomainError, ResolutionError
from spherestab.harmonics import (
    GridFunction,
    SpectralFunction,
    SphereGrid,
    analysis,
    assoc_legendre,
    degree_index,
    dim_harmonic,
    evaluate,
    sphere_area,
)
from spherestab.specfun import gauss_jacobi, zonal_table

__all__ = [
    "ConformalParameter",
    "extremal",
    "mobius",
    "jacobian",
    "pullback",
    "pulled_back",
    "TangentBasis",
    "tangent_basis",
    "harmonic_tangent_basis",
    "extremal_profile_coefficients",
    "extremal_spectrum",
    "basis_at",
]


def _as_xi(xi) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if not np.linalg.norm(xi) < 1:
        raise DomainError(f"conformal parameter must lie in the open unit ball, |xi|={np.linalg.norm(xi)}")
    return xi


@dataclass(frozen=True)
class ConformalParameter:
    """Point (c, xi) of R x B^{n+1} indexing v_{c,xi} in M."""

    c: float
    xi: tuple

    def __post_init__(self):
        xi = _as_xi(self.xi)
        object.__setattr__(self, "xi", tuple(float(x) for x in xi))

    @property
    def n(self) -> int:
        return len(self.xi) - 1

    def to_dict(self) -> dict:
        return {"c": float(self.c), "xi": list(self.xi)}


# --------------------------------------------------------------------------
# pointwise maps


def jacobian(xi, omega) -> np.ndarray:
    """Jacobian J(w) = (sqrt(1 - |xi|^2) / (1 - xi . w))^n of ``mobius(xi)``."""
    xi = _as_xi(xi)
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1] - 1
    return (math.sqrt(1 - xi @ xi) / (1 - omega @ xi)) ** n


def mobius(xi, omega) -> np.ndarray:
    """Conformal map of S^n whose Jacobian is ``jacobian(xi, .)``.

    With e = xi/|xi|, r = |xi| and s = w . e,

        Phi(w) = (sqrt(1 - r^2) (w - s e) + (s - r) e) / (1 - r s).

    This is stereographic projection from -e, dilation by sqrt((1+r)/(1-r)),
    and projection back; Phi(e) = e and the inverse map is mobius(-xi).
    """
    xi = _as_xi(xi)
    omega = np.asarray(omega, dtype=float)
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        return omega.copy()
    e = xi / r
    s = omega @ e
    perp = omega - s[..., None] * e
    num = math.sqrt(1 - r * r) * perp + (s - r)[..., None] * e
    return num / (1 - r * s)[..., None]


def extremal(c: float, xi, normalized: bool = True, grid: SphereGrid | None = None):
    """v_{c,xi} as a callable on points, or as a GridFunction when ``grid`` is given."""
    xi = _as_xi(xi)
    scale = (1 - xi @ xi) ** 0.25 if normalized else 1.0

    def v(points):
        points = np.asarray(points, dtype=float)
        n = points.shape[-1] - 1
        return c * (scale / np.sqrt(1 - points @ xi)) ** n

    if grid is None:
        return v
    _check_axis(grid, xi)
    return GridFunction(grid, v(grid.points))


def _check_axis(grid: SphereGrid, xi: np.ndarray) -> None:
    if len(xi) != grid.n + 1:
        raise DomainError(f"xi has {len(xi)} components; S^{grid.n} needs {grid.n + 1}")
    if grid.zonal and np.any(np.abs(xi[:-1]) > 0):
        raise DomainError("a zonal grid only supports xi along the last axis")


def pulled_back(u, xi) -> Callable:
    """The function J^(1/2) (u o Phi) as a callable on points."""
    xi = _as_xi(xi)
    f = _pointwise(u)

    def g(points):
        points = np.asarray(points, dtype=float)
        return np.sqrt(jacobian(xi, points)) * f(mobius(xi, points))

    return g


def _pointwise(u) -> Callable:
    if isinstance(u, SpectralFunction):
        return lambda p: evaluate(u, p)
    if isinstance(u, GridFunction):
        spec = analysis(u, u.grid.L)
        return lambda p: evaluate(spec, p)
    if callable(u):
        return u
    raise TypeError(f"cannot evaluate {type(u).__name__} pointwise")


def pullback(u, xi, grid: SphereGrid | None = None) -> GridFunction:
    """u_Phi = J^(1/2) (u o Phi) sampled on ``grid``.

    ``u`` may be a SpectralFunction, a GridFunction (re-expanded to its grid's
    band limit before composition) or a callable on points. The grid defaults
    to the GridFunction's own grid, or a 4x oversampled grid for the band
    limit of a SpectralFunction.
    """
    xi = _as_xi(xi)
    if grid is None:
        if isinstance(u, GridFunction):
            grid = u.grid
        elif isinstance(u, SpectralFunction):
            grid = SphereGrid.for_band_limit(u.n, u.L, 4, zonal=u.zonal)
        else:
            raise DomainError("pullback of a callable needs an explicit grid")
    _check_axis(grid, xi)
    return GridFunction(grid, pulled_back(u, xi)(grid.points))


# --------------------------------------------------------------------------
# spectra of extremals


_TIERS = (32, 64, 128, 256, 512, 1024)


@lru_cache(maxsize=64)
def _profile_rule(n: int, lmax: int):
    rule = gauss_jacobi(lmax + 48, (n - 2) / 2)
    table = zonal_table(n, lmax, rule.nodes) * (rule.weights * sphere_area(n - 1))
    return rule.nodes, table


def _needed_degree(r: float, tol: float = 1e-18) -> int:
    if r == 0.0:
        return 0
    q = r / (1 + math.sqrt(1 - r * r))
    return int(math.ceil(math.log(tol) / math.log(q))) + 4


def extremal_profile_coefficients(n: int, r: float, lmax: int | None = None) -> np.ndarray:
    """Coefficients of v_{1, r e} against the normalized zonal harmonics Z_l(e . w).

    The coefficients decay like q^l with q = r / (1 + sqrt(1 - r^2)); by
    default degrees are returned until q^l drops below 1e-18. Each
    coefficient carries an absolute rounding error of a few ulps of
    sqrt(|S^n|), so deep-tail values are only meaningful in that sense.
    """
    if not 0 <= r < 1:
        raise DomainError(f"need 0 <= r < 1, got {r}")
    need = _needed_degree(r) if lmax is None else lmax
    tier = next((t for t in _TIERS if t >= need), None)
    if tier is None:
        raise ResolutionError(f"|xi|={r} needs degree {need}, beyond {_TIERS[-1]}")
    nodes, table = _profile_rule(n, tier)
    # integrate profile - 1 so that small-|xi| coefficients keep relative accuracy
    excess = np.expm1(n / 4 * math.log1p(-r * r) - n / 2 * np.log1p(-r * nodes))
    coef = table @ excess
    coef[0] += math.sqrt(sphere_area(n))
    return coef if lmax is None else coef[: lmax + 1]


def basis_at(n: int, L: int, point, zonal: bool) -> np.ndarray:
    """Values of all layout basis functions Y_{l,m} at one point of S^n."""
    point = np.asarray(point, dtype=float)
    if zonal:
        return zonal_table(n, L, point[-1:])[:, 0]
    if n == 1:
        phi = math.atan2(point[0], point[1])
        out = np.empty(2 * L + 1)
        out[0] = 1 / math.sqrt(2 * math.pi)
        for l in range(1, L + 1):
            out[2 * l - 1] = math.cos(l * phi) / math.sqrt(math.pi)
            out[2 * l] = math.sin(l * phi) / math.sqrt(math.pi)
        return out
    P = assoc_legendre(L, np.clip(point[2], -1, 1))[..., 0]
    phi = math.atan2(point[1], point[0])
    out = np.empty((L + 1) ** 2)
    for l in range(L + 1):
        blk = np.empty(2 * l + 1)
        blk[0] = P[l, 0]
        m = np.arange(1, l + 1)
        blk[1::2] = math.sqrt(2) * P[l, 1 : l + 1] * np.cos(m * phi)
        blk[2::2] = math.sqrt(2) * P[l, 1 : l + 1] * np.sin(m * phi)
        out[l * l : (l + 1) ** 2] = blk
    return out


def extremal_spectrum(n: int, xi, L: int, zonal: bool):
    """Harmonic coefficients of v_{1,xi} through degree L and the discarded tail.

    Returns ``(head, profile)`` where ``head`` is the flat coefficient vector
    in the chosen layout and ``profile`` the zonal coefficients around
    xi/|xi| for every degree (so degree-wise tails are ``profile[L+1:]``).
    By the addition theorem the coefficient of Y_{l,m} is
    profile_l sqrt(|S^n| / N(n,l)) Y_{l,m}(xi/|xi|).
    """
    xi = _as_xi(xi)
    if len(xi) != n + 1:
        raise DomainError(f"xi has {len(xi)} components; S^{n} needs {n + 1}")
    r = float(np.linalg.norm(xi))
    profile = extremal_profile_coefficients(n, r)
    if len(profile) < L + 1:
        profile = np.concatenate([profile, np.zeros(L + 1 - len(profile))])
    if r == 0.0:
        e = np.zeros(n + 1)
        e[-1] = 1.0
    else:
        e = xi / r
    if zonal and np.any(np.abs(e[:-1]) > 0):
        raise DomainError("zonal layout only supports xi along the last axis")
    Y = basis_at(n, L, e, zonal)
    if zonal:
        # Z_l(e . w) with e = -axis equals (-1)^l Z_l(axis . w)
        head = profile[: L + 1] * Y / zonal_table(n, L, np.array([1.0]))[:, 0]
    else:
        deg = degree_index(n, L, False)
        dims = np.array([dim_harmonic(n, l) for l in range(L + 1)])
        head = profile[deg] * np.sqrt(sphere_area(n) / dims)[deg] * Y
    return head, profile


# --------------------------------------------------------------------------
# tangent spaces


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Functions spanning the tangent space of M, sampled on a grid."""

    grid: SphereGrid
    values: np.ndarray
    labels: tuple

    def gram(self) -> np.ndarray:
        W = self.values * self.grid.weights
        return W @ self.values.T

    def weighted(self) -> np.ndarray:
        """Columns scaled by sqrt(weights); Euclidean geometry equals L^2 geometry."""
        return (self.values * np.sqrt(self.grid.weights)).T

    def spectral(self, L: int) -> list:
        return [analysis(GridFunction(self.grid, v), L) for v in self.values]

    def angles(self, other: TangentBasis) -> np.ndarray:
        """Principal angles between the two spans."""
        if other.grid != self.grid:
            raise DomainError("tangent bases live on different grids")
        return subspace_angles(self.weighted(), other.weighted())

    def residual(self, f) -> float:
        """Relative L^2 residual of the best approximation of ``f`` from the span."""
        fv = f.values if isinstance(f, GridFunction) else np.asarray(f)
        A = self.weighted()
        b = fv * np.sqrt(self.grid.weights)
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        return float(np.linalg.norm(A @ coef - b) / np.linalg.norm(b))


def _axes(grid: SphereGrid) -> list:
    return [grid.n] if grid.zonal else list(range(grid.n + 1))


def tangent_basis(c0: float, xi0, L: int, oversample: int = 4, grid: SphereGrid | None = None):
    """v_{1,xi0} and the analytic partials d/dxi_i v_{c,xi} at (c0, xi0).

    On a zonal grid only the partial along the axis is zonal, so the basis
    has two members there instead of n + 2.
    """
    xi0 = _as_xi(xi0)
    n = len(xi0) - 1
    if grid is None:
        grid = SphereGrid.for_band_limit(n, L, oversample, zonal=n not in (1, 2))
    _check_axis(grid, xi0)
    pts = grid.points
    rho2 = float(xi0 @ xi0)
    w = extremal(1.0, xi0)(pts)
    denom = 1 - pts @ xi0
    vals = [w]
    labels = ["v"]
    for i in _axes(grid):
        d = w * (n / 2) * (pts[:, i] / denom - xi0[i] / (1 - rho2))
        vals.append(c0 * d)
        labels.append(f"dxi{i}")
    basis = TangentBasis(grid, np.array(vals), tuple(labels))
    if L < grid.L:
        lost = max(
            1 - np.linalg.norm(s.coeffs) ** 2 / GridFunction(grid, v).norm() ** 2
            for s, v in zip(basis.spectral(L), basis.values)
        )
        if lost > 1e-10:
            raise ResolutionError(f"band limit {L} loses {lost:.2e} of the tangent energy")
    return basis


def harmonic_tangent_basis(xi0, grid: SphereGrid) -> TangentBasis:
    """J^(1/2) and J^(1/2) (Y_{1,i} o Phi): degree 0 and 1 harmonics moved by Phi."""
    xi0 = _as_xi(xi0)
    _check_axis(grid, xi0)
    pts = grid.points
    half_j = np.sqrt(jacobian(xi0, pts))
    image = mobius(xi0, pts)
    vals = [half_j] + [half_j * image[:, i] for i in _axes(grid)]
    labels = ["Y0"] + [f"Y1_{i}" for i in _axes(grid)]
    return TangentBasis(grid, np.array(vals), tuple(labels))
