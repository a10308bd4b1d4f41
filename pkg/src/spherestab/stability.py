"""Stability experiments for the LS and MO deficits.

Each engine evaluates deficit / distance^2 along a one-parameter family and
reduces it to a number: an extrapolated epsilon -> 0 limit (local constants),
a fitted exponent in lambda (scaling behaviour), or an epsilon-slope at 0
(the third-order gap below the local constant).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from spherestab.errors import DomainError
from spherestab.functionals import (
    d0_distance_to_M,
    l2_distance_to_M,
    ls_deficit,
    mo_deficit,
    sharp_constant,
)
from spherestab.harmonics import GridFunction, SpectralFunction, SphereGrid, analysis, synthesis
from spherestab.operators import multiplier_H

__all__ = [
    "DEFAULT_EPS",
    "SweepResult",
    "HomogeneityProbe",
    "richardson",
    "estimate_homogeneity",
    "scaling_counterexample",
    "local_constant_sweep",
    "degree_one_degeneracy",
    "koenig_gap_probe",
    "koenig_direction",
    "sphere_moment",
    "fit_exponent",
]

DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025, 0.0125)
CSV_COLUMNS = ("experiment", "n", "L", "param", "deficit", "d2", "ratio")


@dataclass
class SweepResult:
    """Per-parameter deficits, squared distances and ratios plus their reduction."""

    experiment: str
    n: int
    L: int
    params: list
    deficits: list
    d2: list
    ratios: list
    limit: float | None = None
    order: int = 0
    error: float | None = None
    exponent: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.params, dtype=float)
        if len(p) > 1:
            step = np.diff(p)
            if not (np.all(step > 0) or np.all(step < 0)):
                raise DomainError("sweep parameters must be strictly monotone")

    def records(self) -> list:
        return [
            {"experiment": self.experiment, "n": self.n, "L": self.L, "param": p, "deficit": a, "d2": b, "ratio": r}
            for p, a, b, r in zip(self.params, self.deficits, self.d2, self.ratios)
        ]

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def to_jsonl(self) -> str:
        lines = [json.dumps(_clean(r), sort_keys=True) for r in self.records()]
        summary = {k: v for k, v in self.to_dict().items() if k not in ("deficits", "d2", "ratios")}
        lines.append(json.dumps({"summary": summary}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if header:
            writer.writeheader()
        for r in self.records():
            writer.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()


@dataclass(frozen=True)
class HomogeneityProbe:
    """Estimated homogeneity degree p of a functional and the fit residual."""

    functional: str
    p_hat: float
    residual: float
    method: str

    def to_dict(self) -> dict:
        return _clean(asdict(self))


def _clean(obj):
    # JSON has no inf/nan; numpy scalars become floats
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


# --------------------------------------------------------------------------
# extrapolation and fits


def richardson(values: Sequence[float], ratio: float = 2.0, powers: Sequence[int] = (1, 2)):
    """Repeated Richardson extrapolation on a geometric grid.

    ``values`` are samples at h, h/ratio, h/ratio^2, ... of a quantity with
    expansion a0 + a_p1 h^p1 + a_p2 h^p2 + ...; each level removes one power.
    Returns (limit, error) with error = |last - previous| on the final level.
    """
    level = np.asarray(values, dtype=float)
    for p in powers:
        if len(level) < 2:
            raise DomainError("not enough samples for the requested extrapolation order")
        f = ratio**p
        level = (f * level[1:] - level[:-1]) / (f - 1)
    err = abs(level[-1] - level[-2]) if len(level) > 1 else float("nan")
    return float(level[-1]), float(err)


def fit_exponent(x: Sequence[float], y: Sequence[float]):
    """Least-squares slope of ln y against ln x and the largest fit residual."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + icpt))))
    return float(slope), resid


def _check_geometric(eps: Sequence[float]) -> float:
    eps = np.asarray(eps, dtype=float)
    q = eps[:-1] / eps[1:]
    if len(eps) < 3 or not np.allclose(q, q[0], rtol=1e-12):
        raise DomainError("extrapolation needs at least three geometrically spaced parameters")
    return float(q[0])


# --------------------------------------------------------------------------
# homogeneity


def estimate_homogeneity(F: Callable, u: SpectralFunction, lam_grid=(1, 2, 4, 8, 16), name: str = "F"):
    """Degree p with F(lambda u) = lambda^p F(u), from a log-log fit.

    Exactly constant values give p = 0. If F is not positive everywhere on the
    grid the integer p in 0..4 with the smallest relative misfit of
    F(lambda u) against lambda^p F(u) is reported instead.
    """
    lam = np.asarray(lam_grid, dtype=float)
    vals = np.array([float(F(u * float(l))) for l in lam])
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"{name} is not finite on the lambda grid")
    spread = np.max(np.abs(vals - vals[0])) / max(abs(vals[0]), 1e-300)
    if spread < 1e-12:
        return HomogeneityProbe(name, 0.0, float(spread), "constant")
    if np.all(vals > 0):
        p, resid = fit_exponent(lam, vals)
        return HomogeneityProbe(name, p, resid, "loglog")
    scale = max(abs(vals[0]), 1e-300)
    misfit = [np.max(np.abs(vals - (lam / lam[0]) ** p * vals[0])) / scale for p in range(5)]
    p = int(np.argmin(misfit))
    return HomogeneityProbe(name, float(p), float(misfit[p]), "ratio")


def scaling_counterexample(
    deficit: Callable,
    distance: Callable,
    u: SpectralFunction,
    q: float = 2.0,
    lam_grid=(1, 2, 4, 8, 16),
    name: str = "scaling",
) -> SweepResult:
    """deficit(lambda u) / d(lambda u, M)^q along lambda; fitted exponent p - q."""
    d_u = distance(u)
    if not d_u > 1e-8:
        raise DomainError(f"scaling probe needs d(u, M) > 1e-8, got {d_u:.3e}")
    defs, d2s, ratios = [], [], []
    for lam in lam_grid:
        v = u * float(lam)
        a = float(deficit(v))
        d = float(distance(v))
        defs.append(a)
        d2s.append(d * d)
        ratios.append(a / d**q)
    r = np.asarray(ratios)
    if np.all(r > 0):
        expo, resid = fit_exponent(lam_grid, r)
    else:
        expo, resid = float("nan"), float("nan")
    return SweepResult(
        name, u.n, u.L, [float(x) for x in lam_grid], defs, d2s, ratios,
        exponent=expo, extra={"q": q, "fit_residual": resid},
    )


# --------------------------------------------------------------------------
# local constants


def _deficit_handle(functional):
    if callable(functional):
        return functional
    if functional == "LS":
        return lambda u: ls_deficit(u).deficit
    if functional == "MO":
        return lambda u: mo_deficit(u).deficit
    raise DomainError(f"unknown functional {functional!r}")


def _check_direction(v: SpectralFunction, tol: float = 1e-10) -> None:
    if abs(v.norm() - 1) > tol:
        raise DomainError(f"direction must have unit L^2 norm, got {v.norm()}")
    low = np.abs(v.coeffs[v.degrees <= 1])
    if low.size and low.max() > tol:
        raise DomainError("direction is not orthogonal to the degree 0 and 1 harmonics")


def local_constant_sweep(
    functional,
    v: SpectralFunction,
    eps_grid=DEFAULT_EPS,
    distance: str = "l2",
    name: str | None = None,
) -> SweepResult:
    """deficit(1 + eps v) / d^2(1 + eps v, M) and its eps -> 0 limit.

    The tangent space of M at the constant 1 is spanned by the degree 0 and 1
    harmonics, so ``v`` must be a unit vector orthogonal to them. The limit
    comes from two Richardson levels (powers eps and eps^2).
    """
    _check_direction(v)
    eps = [float(e) for e in eps_grid]
    ratio = _check_geometric(eps)
    F = _deficit_handle(functional)
    dist = l2_distance_to_M if distance == "l2" else d0_distance_to_M
    defs, d2s, ratios = [], [], []
    for e in eps:
        u = 1.0 + e * v
        a = float(F(u))
        d = dist(u, residual=False).d
        if d == 0:
            raise DomainError(f"distance to M vanished at eps={e}")
        defs.append(a)
        d2s.append(d * d)
        ratios.append(a / (d * d))
    limit, err = richardson(ratios, ratio, (1, 2))
    label = name or f"{functional if isinstance(functional, str) else 'custom'}-local"
    return SweepResult(label, v.n, v.L, eps, defs, d2s, ratios, limit, 2, err)


def degree_one_degeneracy(eps_grid=(0.2, 0.1, 0.05, 0.025), n: int = 2, mode: str = "d0", L: int = 8):
    """LS along 1 + eps Y_1 with Y_1 the degree-one zonal harmonic.

    mode ``d0`` reports LS / d_0^2(., M); mode ``l2`` reports LS / eps^2 and
    LS / d^2(., M). The spectral reason for the degeneracy, H_1 = C_n, is
    recorded in ``extra``.
    """
    if mode not in ("l2", "d0"):
        raise DomainError(f"mode must be l2 or d0, got {mode!r}")
    zonal = n not in (1, 2)
    y1 = SpectralFunction.harmonic(n, L, 1, 0, zonal=zonal)
    eps = [float(e) for e in eps_grid]
    defs, d2s, ratios, flags, over_eps2 = [], [], [], [], []
    for e in eps:
        u = 1.0 + e * y1
        a = ls_deficit(u).deficit
        res = d0_distance_to_M(u, residual=False) if mode == "d0" else l2_distance_to_M(u, residual=False)
        d2 = res.d**2
        defs.append(a)
        d2s.append(d2)
        ratios.append(a / d2 if d2 > 0 else float("inf"))
        flags.append(res.at_boundary)
        over_eps2.append(a / e**2)
    r = np.asarray(ratios)
    expo = fit_exponent(eps, r)[0] if np.all(np.isfinite(r)) and np.all(r > 0) else float("nan")
    extra = {
        "mode": mode,
        "H1_minus_Cn": multiplier_H(n, 1) - sharp_constant(n),
        "deficit_over_eps2": over_eps2,
        "at_boundary": flags,
    }
    return SweepResult(f"degree-one-{mode}", n, L, eps, defs, d2s, ratios, exponent=expo, extra=extra)


# --------------------------------------------------------------------------
# third-order gap


def sphere_moment(alpha: Sequence[int], n: int) -> float:
    """int_{S^n} w_1^a_1 ... w_{n+1}^a_{n+1} dw (zero unless every a_i is even)."""
    a = list(alpha) + [0] * (n + 1 - len(alpha))
    if any(k % 2 for k in a):
        return 0.0
    b = [(k + 1) / 2 for k in a]
    lg = sum(math.lgamma(x) for x in b) - math.lgamma(sum(b))
    return 2 * math.exp(lg)


def koenig_direction(L: int = 2) -> SpectralFunction:
    """y_2 = (w1 w2 + w2 w3 + w3 w1) / norm on S^2, a unit degree-two harmonic."""
    grid = SphereGrid.for_band_limit(2, max(L, 2), 2, zonal=False)
    p = grid.points
    f = p[:, 0] * p[:, 1] + p[:, 1] * p[:, 2] + p[:, 2] * p[:, 0]
    y = analysis(GridFunction(grid, f), max(L, 2))
    return y / y.norm()


def koenig_gap_probe(eps_grid=(0.1, 0.05, 0.025, 0.0125), L: int = 8, oversample: int = 4) -> SweepResult:
    """Slope at eps = 0 of LS(1 + eps y_2) / d^2 and the dip below the local constant.

    The slope is the Richardson limit (in eps^2) of the symmetric quotients
    (ratio(eps) - ratio(-eps)) / (2 eps). The prediction is
    -(2/3) C_2 int y_2^3 with the cube integral taken by quadrature.
    Parameters in the result run over -eps_max .. eps_max.
    """
    n = 2
    eps = [float(e) for e in eps_grid]
    ratio = _check_geometric(eps)
    y = koenig_direction(L)
    C = sharp_constant(n)

    def point(e, over):
        u = 1.0 + e * y
        a = ls_deficit(u, oversample=over).deficit
        d = l2_distance_to_M(u, residual=False).d
        return a, d * d, a / (d * d)

    rows = {}
    for e in eps:
        for s in (e, -e):
            rows[s] = point(s, oversample)
    slopes = [(rows[e][2] - rows[-e][2]) / (2 * e) for e in eps]
    slope, err = richardson(slopes, ratio, (2,)) if len(eps) >= 3 else (slopes[-1], float("nan"))
    grid = SphereGrid.for_band_limit(n, 3 * L, 2, zonal=False)
    yv = synthesis(y.padded(3 * L), grid).values
    cube = grid.integrate(yv**3)
    predicted = -2 / 3 * C * cube
    # ratio at the favourable sign of the smallest |eps| >= 0.05 (or the largest probed)
    e0 = 0.05 if 0.05 in eps else eps[0]
    fav = e0 if predicted < 0 else -e0
    r_lo = rows[fav][2]
    r_hi = point(fav, 2 * oversample)[2]
    budget = abs(r_hi - r_lo) + 1e-12 * abs(r_lo)
    local = 8 * math.pi ** (n / 2) / (math.gamma(n / 2) * (n + 2))
    params = sorted(rows)
    out = SweepResult(
        "ls-gap", n, L, params,
        [rows[p][0] for p in params], [rows[p][1] for p in params], [rows[p][2] for p in params],
        limit=slope, order=1, error=err,
        extra={
            "slope": slope,
            "predicted_slope": predicted,
            "cube_integral": cube,
            "symmetric_quotients": slopes,
            "favourable_eps": fav,
            "ratio_at_favourable": r_lo,
            "local_constant": local,
            "gap": local - r_lo,
            "quadrature_budget": budget,
            "sign_test": bool(rows[e0][2] < rows[-e0][2]) if cube > 0 else bool(rows[e0][2] > rows[-e0][2]),
            "observed_infimum": float(min(rows[p][2] for p in params)),
            "moment_w1w2": sphere_moment((2, 2), 2),
            "moment_w1w2w3": sphere_moment((2, 2, 2), 2),
        },
    )
    return out
