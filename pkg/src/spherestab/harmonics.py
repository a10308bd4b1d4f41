"""Spherical-harmonic data model, grids and transforms on S^n.

Two coefficient layouts are supported:

``full``  (n = 1 and n = 2 only)
    Every real orthonormal harmonic. Within degree l the order is the zonal
    function first, then cosine/sine pairs by increasing azimuthal order m.
    On S^2 the entry (l, k) sits at flat index l*l + k with k = 0 for m = 0,
    k = 2m - 1 for cos(m phi) and k = 2m for sin(m phi). On S^1 degree l >= 1
    holds cos(l phi)/sqrt(pi), sin(l phi)/sqrt(pi).

``zonal`` (any n >= 1)
    One coefficient per degree, against the normalized zonal profile
    Z_l(w . e) around the last coordinate axis e = e_{n+1}.

All harmonics are orthonormal for the unnormalized surface measure dw, whose
total mass is |S^n|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from spherestab.errors import DomainError, ResolutionError
from spherestab.specfun import gauss_jacobi, gauss_legendre, zonal_table

__all__ = [
    "dim_harmonic",
    "sphere_area",
    "SphereGrid",
    "SpectralFunction",
    "GridFunction",
    "synthesis",
    "analysis",
    "evaluate",
    "sobolev_norm",
    "assoc_legendre",
]


def dim_harmonic(n: int, l: int) -> int:
    """Dimension N(n, l) of the space of degree-l harmonics on S^n."""
    if n < 1 or l < 0:
        raise DomainError(f"need n >= 1 and l >= 0, got n={n}, l={l}")
    if l == 0:
        return 1
    # (2l + n - 1) (l + n - 2)! / (l! (n - 1)!)
    return (2 * l + n - 1) * math.comb(l + n - 2, l) // (n - 1) if n > 1 else 2


def sphere_area(n: int) -> float:
    """Surface measure |S^n| = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    if n < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {n}")
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def _n_coeffs(n: int, L: int, zonal: bool) -> int:
    if zonal:
        return L + 1
    if n == 1:
        return 2 * L + 1
    return (L + 1) ** 2


def _check_layout(n: int, zonal: bool) -> None:
    if n < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {n}")
    if not zonal and n not in (1, 2):
        raise DomainError(f"full harmonic layout exists only for n in (1, 2), got n={n}")


def degree_slice(n: int, l: int, zonal: bool) -> slice:
    """Slice of the flat coefficient vector holding degree ``l``."""
    if zonal:
        return slice(l, l + 1)
    if n == 1:
        return slice(0, 1) if l == 0 else slice(2 * l - 1, 2 * l + 1)
    return slice(l * l, (l + 1) * (l + 1))


def degree_index(n: int, L: int, zonal: bool) -> np.ndarray:
    """Degree of every entry of the flat coefficient vector."""
    if zonal:
        return np.arange(L + 1)
    if n == 1:
        return np.concatenate([[0], np.repeat(np.arange(1, L + 1), 2)])
    return np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature grid on S^n.

    ``kind`` is ``"s2"`` (Gauss-Legendre colatitudes times uniform longitudes),
    ``"s1"`` (uniform angles) or ``"zonal"`` (Gauss-Jacobi nodes in t = w . e
    with weights scaled by |S^{n-1}|; the nodes are represented by the
    meridian points (sqrt(1 - t^2), 0, ..., 0, t)).
    """

    n: int
    kind: str
    k_t: int
    k_phi: int = 1

    def __post_init__(self):
        if self.kind not in ("s1", "s2", "zonal"):
            raise DomainError(f"unknown grid kind {self.kind!r}")
        if self.kind == "s2" and self.n != 2 or self.kind == "s1" and self.n != 1:
            raise DomainError(f"grid kind {self.kind} does not live on S^{self.n}")
        if self.k_t < 1 or self.k_phi < 1:
            raise DomainError("grid sizes must be positive")

    @classmethod
    def for_band_limit(cls, n: int, L: int, oversample: int = 4, zonal: bool | None = None):
        """Grid whose exactness band limit is at least ``oversample * (L + 1) - 1``."""
        if oversample < 1:
            raise DomainError("oversample must be >= 1")
        if zonal is None:
            zonal = n not in (1, 2)
        _check_layout(n, zonal)
        k = oversample * (L + 1)
        if zonal:
            return cls(n, "zonal", k)
        if n == 1:
            return cls(1, "s1", 2 * k)
        return cls(2, "s2", k, 2 * k)

    @property
    def zonal(self) -> bool:
        return self.kind == "zonal"

    @property
    def L(self) -> int:
        """Largest band limit for which analysis of band-limited data is exact."""
        if self.kind == "zonal":
            return self.k_t - 1
        if self.kind == "s1":
            return (self.k_t - 1) // 2
        return min(self.k_t - 1, (self.k_phi - 1) // 2)

    @property
    def size(self) -> int:
        return self.k_t * self.k_phi

    @cached_property
    def _rule(self):
        if self.kind == "s2":
            return gauss_legendre(self.k_t)
        if self.kind == "zonal":
            return gauss_jacobi(self.k_t, (self.n - 2) / 2)
        return None

    @cached_property
    def t(self) -> np.ndarray:
        """Cosine of the angle to the axis for each latitude (or zonal node)."""
        if self.kind == "s1":
            return np.cos(self.phi)
        return self._rule.nodes

    @cached_property
    def phi(self) -> np.ndarray:
        if self.kind == "zonal":
            return np.zeros(1)
        k = self.k_phi if self.kind == "s2" else self.k_t
        return 2 * np.pi * np.arange(k) / k

    @cached_property
    def weights(self) -> np.ndarray:
        if self.kind == "s1":
            return np.full(self.k_t, 2 * np.pi / self.k_t)
        if self.kind == "zonal":
            return self._rule.weights * sphere_area(self.n - 1)
        return np.outer(self._rule.weights, np.full(self.k_phi, 2 * np.pi / self.k_phi)).ravel()

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates in R^{n+1}, shape (size, n + 1)."""
        if self.kind == "s1":
            return np.stack([np.sin(self.phi), np.cos(self.phi)], axis=1)
        if self.kind == "zonal":
            pts = np.zeros((self.k_t, self.n + 1))
            pts[:, 0] = np.sqrt(np.clip(1 - self.t**2, 0, None))
            pts[:, -1] = self.t
            return pts
        s = np.sqrt(1 - self.t**2)
        x = np.outer(s, np.cos(self.phi)).ravel()
        y = np.outer(s, np.sin(self.phi)).ravel()
        z = np.repeat(self.t, self.k_phi)
        return np.stack([x, y, z], axis=1)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values).ravel()))

    def to_dict(self) -> dict:
        return {"n": self.n, "kind": self.kind, "k_t": self.k_t, "k_phi": self.k_phi}


# --------------------------------------------------------------------------
# values


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Band-limited real function on S^n stored by harmonic coefficients."""

    n: int
    L: int
    coeffs: np.ndarray
    zonal: bool = False

    def __post_init__(self):
        _check_layout(self.n, self.zonal)
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (_n_coeffs(self.n, self.L, self.zonal),):
            raise DomainError(
                f"expected {_n_coeffs(self.n, self.L, self.zonal)} coefficients for "
                f"n={self.n}, L={self.L}, zonal={self.zonal}; got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # constructors
    @classmethod
    def zeros(cls, n: int, L: int, zonal: bool | None = None) -> SpectralFunction:
        zonal = n not in (1, 2) if zonal is None else zonal
        return cls(n, L, np.zeros(_n_coeffs(n, L, zonal)), zonal)

    @classmethod
    def harmonic(cls, n: int, L: int, l: int, k: int = 0, zonal: bool | None = None):
        """Unit coefficient on the k-th harmonic of degree l (k = 0 is zonal)."""
        zonal = n not in (1, 2) if zonal is None else zonal
        if l > L:
            raise DomainError(f"degree {l} exceeds band limit {L}")
        sl = degree_slice(n, l, zonal)
        if not 0 <= k < sl.stop - sl.start:
            raise DomainError(f"harmonic index {k} out of range for degree {l}")
        c = np.zeros(_n_coeffs(n, L, zonal))
        c[sl.start + k] = 1.0
        return cls(n, L, c, zonal)

    @classmethod
    def constant(cls, n: int, L: int, value: float = 1.0, zonal: bool | None = None):
        u = cls.harmonic(n, L, 0, 0, zonal)
        return u * (value * math.sqrt(sphere_area(n)))

    # structure
    @property
    def degrees(self) -> np.ndarray:
        return degree_index(self.n, self.L, self.zonal)

    def degree(self, l: int) -> np.ndarray:
        if l > self.L:
            return np.zeros(0)
        return self.coeffs[degree_slice(self.n, l, self.zonal)]

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.coeffs, self.coeffs)))

    def mean(self) -> float:
        """Average over S^n."""
        return float(self.coeffs[0] / math.sqrt(sphere_area(self.n)))

    def padded(self, L: int) -> SpectralFunction:
        """Same function with band limit raised (or truncated) to ``L``."""
        if L == self.L:
            return self
        out = np.zeros(_n_coeffs(self.n, L, self.zonal))
        m = min(len(out), len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return SpectralFunction(self.n, L, out, self.zonal)

    def to_full(self) -> SpectralFunction:
        """Embed a zonal function into the full layout (n = 1, 2)."""
        if not self.zonal:
            return self
        _check_layout(self.n, False)
        out = np.zeros(_n_coeffs(self.n, self.L, False))
        for l in range(self.L + 1):
            out[degree_slice(self.n, l, False).start] = self.coeffs[l]
        return SpectralFunction(self.n, self.L, out, False)

    def _align(self, other: SpectralFunction):
        if self.n != other.n:
            raise DomainError(f"dimension mismatch: S^{self.n} vs S^{other.n}")
        a, b = self, other
        if a.zonal != b.zonal:
            a, b = a.to_full(), b.to_full()
        L = max(a.L, b.L)
        return a.padded(L), b.padded(L)

    def inner(self, other: SpectralFunction) -> float:
        a, b = self._align(other)
        return float(np.dot(a.coeffs, b.coeffs))

    # arithmetic
    def __add__(self, other):
        if isinstance(other, (int, float)):
            return self + SpectralFunction.constant(self.n, self.L, other, self.zonal)
        a, b = self._align(other)
        return SpectralFunction(a.n, a.L, a.coeffs + b.coeffs, a.zonal)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, s):
        if not isinstance(s, (int, float, np.floating)):
            return NotImplemented
        return SpectralFunction(self.n, self.L, self.coeffs * float(s), self.zonal)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    def __neg__(self):
        return self * -1.0

    # serialization
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "layout": "zonal" if self.zonal else "full",
            "data": [float(x) for x in self.coeffs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> SpectralFunction:
        if d.get("layout") not in ("zonal", "full"):
            raise DomainError(f"unknown spectral layout {d.get('layout')!r}")
        data = np.asarray(d["data"], dtype=float)
        if not np.all(np.isfinite(data)):
            raise DomainError("non-finite coefficient in serialized SpectralFunction")
        return cls(int(d["n"]), int(d["L"]), data, d["layout"] == "zonal")

    @classmethod
    def from_json(cls, s: str) -> SpectralFunction:
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Point values of a function on the nodes of a ``SphereGrid``."""

    grid: SphereGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.shape != (self.grid.size,):
            raise DomainError(f"expected {self.grid.size} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def L(self) -> int:
        return self.grid.L

    def integrate(self) -> float:
        return self.grid.integrate(self.values)

    def norm(self) -> float:
        return math.sqrt(self.grid.integrate(self.values**2))

    def inner(self, other: GridFunction) -> float:
        if other.grid != self.grid:
            raise DomainError("grid mismatch")
        return self.grid.integrate(self.values * other.values)

    def map(self, fn) -> GridFunction:
        return GridFunction(self.grid, fn(self.values))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "layout": f"grid-{self.grid.kind}",
            "grid": self.grid.to_dict(),
            "data": [float(x) for x in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> GridFunction:
        g = d.get("grid") or {}
        grid = SphereGrid(int(g["n"]), g["kind"], int(g["k_t"]), int(g.get("k_phi", 1)))
        if d.get("layout") != f"grid-{grid.kind}" or int(d["n"]) != grid.n:
            raise DomainError("grid function header does not match its grid")
        if abs(grid.weights.sum() - sphere_area(grid.n)) > 1e-12 * sphere_area(grid.n):
            raise DomainError("grid weights do not sum to |S^n|")
        data = np.asarray(d["data"], dtype=float)
        if not np.all(np.isfinite(data)):
            raise DomainError("non-finite value in serialized GridFunction")
        return cls(grid, data)

    @classmethod
    def from_json(cls, s: str) -> GridFunction:
        return cls.from_dict(json.loads(s))


# --------------------------------------------------------------------------
# associated Legendre functions on S^2


def assoc_legendre(L: int, t) -> np.ndarray:
    """Normalized associated Legendre values P[l, m, j] for 0 <= m <= l <= L.

    With this normalization Y = P[l, 0] and Y = sqrt(2) P[l, m] cos(m phi),
    sqrt(2) P[l, m] sin(m phi) are orthonormal on S^2. Computed upward in l,
    all orders at once; no Condon-Shortley phase.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.sqrt(np.clip(1 - t * t, 0, None))
    P = np.zeros((L + 1, L + 1) + t.shape)
    pmm = np.full(t.shape, 1 / math.sqrt(4 * math.pi))
    for m in range(L + 1):
        if m > 0:
            pmm = pmm * s * math.sqrt((2 * m + 1) / (2 * m))
        P[m, m] = pmm
        if m + 1 <= L:
            P[m + 1, m] = math.sqrt(2 * m + 3) * t * pmm
    A, B = _legendre_coefs(L)
    extra = (slice(None),) + (None,) * t.ndim
    for l in range(2, L + 1):
        k = l - 1  # orders 0 .. l-2 follow the three-term recurrence
        P[l, :k] = A[l, :k][extra] * (t * P[l - 1, :k] - B[l, :k][extra] * P[l - 2, :k])
    return P


@lru_cache(maxsize=16)
def _legendre_coefs(L: int):
    l = np.arange(L + 1, dtype=float)[:, None]
    m = np.arange(L + 1, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.sqrt((4 * l * l - 1) / (l * l - m * m))
        B = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
    return A, B


def _s2_split(u: SpectralFunction):
    """Flat S^2 coefficients -> cosine and sine tables indexed [l, m]."""
    L = u.L
    C = np.zeros((L + 1, L + 1))
    S = np.zeros((L + 1, L + 1))
    for l in range(L + 1):
        blk = u.degree(l)
        C[l, 0] = blk[0]
        C[l, 1 : l + 1] = blk[1::2]
        S[l, 1 : l + 1] = blk[2::2]
    return C, S


def _s2_merge(C: np.ndarray, S: np.ndarray, L: int) -> np.ndarray:
    out = np.zeros((L + 1) ** 2)
    for l in range(L + 1):
        blk = np.empty(2 * l + 1)
        blk[0] = C[l, 0]
        blk[1::2] = C[l, 1 : l + 1]
        blk[2::2] = S[l, 1 : l + 1]
        out[l * l : (l + 1) ** 2] = blk
    return out


def _check_grid(u_n: int, grid: SphereGrid, zonal: bool):
    if grid.n != u_n:
        raise DomainError(f"dimension mismatch: function on S^{u_n}, grid on S^{grid.n}")
    if grid.zonal and not zonal:
        raise DomainError("a non-zonal function cannot live on a zonal grid")


def synthesis(u: SpectralFunction, grid: SphereGrid) -> GridFunction:
    """Evaluate sum_{l,m} u_{l,m} Y_{l,m} at the grid nodes."""
    _check_grid(u.n, grid, u.zonal)
    if u.L > grid.L:
        raise ResolutionError(f"grid resolves band limit {grid.L} < {u.L}")
    if grid.zonal:
        return GridFunction(grid, zonal_table(u.n, u.L, grid.t).T @ u.coeffs)
    if u.zonal:
        u = u.to_full()
    if grid.kind == "s1":
        return GridFunction(grid, _s1_eval(u, grid.phi))
    C, S = _s2_split(u)
    P = assoc_legendre(u.L, grid.t)
    m = np.arange(u.L + 1)
    fac = np.where(m > 0, math.sqrt(2), 1.0)
    A = np.einsum("lmj,lm->mj", P, C) * fac[:, None]
    B = np.einsum("lmj,lm->mj", P, S) * fac[:, None]
    ang = np.outer(m, grid.phi)
    vals = A.T @ np.cos(ang) + B.T @ np.sin(ang)
    return GridFunction(grid, vals)


def _s1_eval(u: SpectralFunction, phi: np.ndarray) -> np.ndarray:
    c = u.coeffs
    out = np.full(phi.shape, c[0] / math.sqrt(2 * math.pi))
    for l in range(1, u.L + 1):
        out += (c[2 * l - 1] * np.cos(l * phi) + c[2 * l] * np.sin(l * phi)) / math.sqrt(math.pi)
    return out


def analysis(f: GridFunction, L: int, zonal: bool | None = None) -> SpectralFunction:
    """Harmonic coefficients u_{l,m} = int f Y_{l,m} dw up to degree ``L``.

    On a full grid ``zonal=True`` keeps only the zonal coefficients.
    """
    grid = f.grid
    if L > grid.L:
        raise ResolutionError(f"grid resolves band limit {grid.L} < {L}")
    if zonal is None:
        zonal = grid.zonal
    if grid.zonal:
        if not zonal:
            raise DomainError("zonal grid data only supports zonal analysis")
        return SpectralFunction(
            grid.n, L, zonal_table(grid.n, L, grid.t) @ (grid.weights * f.values), True
        )
    if grid.kind == "s1":
        w = grid.weights * f.values
        c = np.empty(2 * L + 1)
        c[0] = w.sum() / math.sqrt(2 * math.pi)
        for l in range(1, L + 1):
            c[2 * l - 1] = np.dot(w, np.cos(l * grid.phi)) / math.sqrt(math.pi)
            c[2 * l] = np.dot(w, np.sin(l * grid.phi)) / math.sqrt(math.pi)
        out = SpectralFunction(1, L, c, False)
    else:
        V = f.values.reshape(grid.k_t, grid.k_phi)
        m = np.arange(L + 1)
        ang = np.outer(grid.phi, m)
        dphi = 2 * np.pi / grid.k_phi
        a = (V @ np.cos(ang)) * dphi  # (k_t, m)
        b = (V @ np.sin(ang)) * dphi
        fac = np.where(m > 0, math.sqrt(2), 1.0)
        P = assoc_legendre(L, grid.t) * grid._rule.weights  # (l, m, j)
        C = np.einsum("lmj,jm->lm", P, a) * fac
        S = np.einsum("lmj,jm->lm", P, b) * fac
        C[np.triu_indices(L + 1, 1)] = 0.0
        S[np.triu_indices(L + 1, 1)] = 0.0
        S[:, 0] = 0.0
        out = SpectralFunction(2, L, _s2_merge(C, S, L), False)
    if zonal:
        return SpectralFunction(
            out.n, L, np.array([out.degree(l)[0] for l in range(L + 1)]), True
        )
    return out


def evaluate(u: SpectralFunction, points) -> np.ndarray:
    """Evaluate ``u`` at arbitrary points of S^n given as (N, n + 1) coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != u.n + 1:
        raise DomainError(f"points must have {u.n + 1} coordinates")
    t = np.clip(pts[:, -1], -1.0, 1.0)
    if u.zonal:
        return zonal_table(u.n, u.L, t).T @ u.coeffs
    if u.n == 1:
        return _s1_eval(u, np.arctan2(pts[:, 0], pts[:, 1]))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    C, S = _s2_split(u)
    out = np.empty(len(pts))
    m = np.arange(u.L + 1)
    fac = np.where(m > 0, math.sqrt(2), 1.0)
    for start in range(0, len(pts), 4096):
        sl = slice(start, start + 4096)
        P = assoc_legendre(u.L, t[sl])
        A = np.einsum("lmj,lm->mj", P, C) * fac[:, None]
        B = np.einsum("lmj,lm->mj", P, S) * fac[:, None]
        ang = np.outer(m, phi[sl])
        out[sl] = (A * np.cos(ang) + B * np.sin(ang)).sum(axis=0)
    return out


def sobolev_norm(u: SpectralFunction, s: float) -> float:
    """H^s(S^n) norm sqrt(sum (1 + l(l + n - 1))^s |u_{l,m}|^2)."""
    if s < 0:
        raise DomainError("Sobolev order must be >= 0")
    l = u.degrees
    return float(np.sqrt(np.sum((1.0 + l * (l + u.n - 1)) ** s * u.coeffs**2)))
