"""Funk-Hecke diagonal operators on S^n.

Every operator here is rotation invariant, so it acts on degree-l harmonics
by a scalar. The singular integral

    H u(w) = P.V. int (u(w) - u(e)) / |w - e|^n de

has symbol (2 pi^(n/2) / Gamma(n/2)) (psi(n/2 + l) - psi(n/2)). A
quadrature evaluation of the integral itself for zonal profiles is kept as
an independent check on that symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from spherestab.errors import DomainError, ResolutionError
from spherestab.harmonics import SpectralFunction, sphere_area
from spherestab.specfun import digamma, gauss_jacobi

__all__ = [
    "Multiplier",
    "multiplier_H",
    "eigenvalue_lambda",
    "multiplier_P2s",
    "multiplier_A2s",
    "multiplier_An",
    "multiplier_B",
    "apply_multiplier",
    "pv_H_zonal_oracle",
    "H",
    "P2s",
    "A2s",
    "An",
    "B",
]


def _h_prefactor(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def multiplier_H(n: int, l):
    """Symbol of H on degree-l harmonics of S^n."""
    if n < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {n}")
    l_arr = np.asarray(l, dtype=float)
    if np.any(l_arr < 0):
        raise DomainError("degree must be >= 0")
    val = _h_prefactor(n) * (digamma(n / 2 + l_arr) - digamma(n / 2))
    return float(val) if np.ndim(val) == 0 else val


def eigenvalue_lambda(n: int, l: int) -> float:
    """lambda_l = (n/2)(psi(n/2 + l) - psi(n/2)), the eigenvalue of H / C_n
    on mean-zero degree-l harmonics."""
    if l < 1:
        raise DomainError("eigenvalues are indexed by l >= 1 (constants are projected out)")
    return n / 2 * (digamma(n / 2 + l) - digamma(n / 2))


def _log_gamma_ratio(a, b):
    return gammaln(a) - gammaln(b)


def multiplier_P2s(n: int, s: float, l):
    """Gamma(l + n/2 - s) / Gamma(l + n/2 + s), the symbol of the Riesz
    potential normalized as the inverse of A_2s."""
    if not 0 < s < n / 2:
        raise DomainError(f"need 0 < s < n/2, got s={s} for n={n}")
    l = np.asarray(l, dtype=float)
    val = np.exp(_log_gamma_ratio(l + n / 2 - s, l + n / 2 + s))
    return float(val) if val.ndim == 0 else val


def multiplier_A2s(n: int, s: float, l):
    """Gamma(l + n/2 + s) / Gamma(l + n/2 - s)."""
    if not 0 < s < n / 2:
        raise DomainError(f"need 0 < s < n/2, got s={s} for n={n}")
    l = np.asarray(l, dtype=float)
    val = np.exp(_log_gamma_ratio(l + n / 2 + s, l + n / 2 - s))
    return float(val) if val.ndim == 0 else val


def multiplier_B(n: int, l):
    """Symbol l + (n - 1)/2 of B = sqrt(-Laplacian + (n - 1)^2 / 4)."""
    l = np.asarray(l, dtype=float)
    val = l + (n - 1) / 2
    return float(val) if val.ndim == 0 else val


def multiplier_An(n: int, l):
    """Gamma(l + n) / Gamma(l) = l (l + 1) ... (l + n - 1); zero on constants."""
    l_arr = np.asarray(l, dtype=float)
    if np.any(l_arr < 0):
        raise DomainError("degree must be >= 0")
    val = np.where(l_arr > 0, np.exp(_log_gamma_ratio(l_arr + n, np.maximum(l_arr, 1))), 0.0)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class Multiplier:
    """A diagonal operator l -> value on S^n."""

    n: int
    label: str
    symbol: Callable[[np.ndarray], np.ndarray]

    def __call__(self, l):
        return self.symbol(l)

    def then(self, other: Multiplier) -> Multiplier:
        if other.n != self.n:
            raise DomainError("dimension mismatch")
        return Multiplier(self.n, f"{other.label}*{self.label}", lambda l: self(l) * other(l))


def H(n: int) -> Multiplier:
    return Multiplier(n, "H", lambda l: multiplier_H(n, l))


def P2s(n: int, s: float) -> Multiplier:
    multiplier_P2s(n, s, 0)
    return Multiplier(n, f"P2s({s:g})", lambda l: multiplier_P2s(n, s, l))


def A2s(n: int, s: float) -> Multiplier:
    multiplier_A2s(n, s, 0)
    return Multiplier(n, f"A2s({s:g})", lambda l: multiplier_A2s(n, s, l))


def An(n: int) -> Multiplier:
    return Multiplier(n, "An", lambda l: multiplier_An(n, l))


def B(n: int) -> Multiplier:
    return Multiplier(n, "B", lambda l: multiplier_B(n, l))


def apply_multiplier(u: SpectralFunction, M: Multiplier) -> SpectralFunction:
    """Scale every degree-l coefficient of ``u`` by M(l)."""
    if M.n != u.n:
        raise DomainError(f"multiplier on S^{M.n} applied to a function on S^{u.n}")
    scale = np.asarray(M(np.arange(u.L + 1)), dtype=float)
    return SpectralFunction(u.n, u.L, u.coeffs * scale[u.degrees], u.zonal)


def pv_H_zonal_oracle(n: int, g: Callable, quad_size: int = 64) -> float:
    """(H u)(north pole) for the zonal function u(w) = g(w . e), by quadrature.

    After zonal reduction the principal value disappears for smooth g:

        |S^{n-1}| int_{-1}^{1} (g(1) - g(t)) / (2 (1 - t))^(n/2) (1 - t^2)^((n-2)/2) dt
          = |S^{n-1}| 2^(-n/2) int (g(1) - g(t)) / (1 - t) (1 + t)^((n-2)/2) dt,

    which a Gauss-Jacobi rule for (1 + t)^((n-2)/2) integrates directly.
    """
    if quad_size < 8:
        raise ResolutionError("pv_H_zonal_oracle needs at least 8 quadrature nodes")
    rule = gauss_jacobi(quad_size, 0.0, (n - 2) / 2)
    t = rule.nodes
    g1 = float(g(np.array([1.0]))[0])
    q = (g1 - np.asarray(g(t), dtype=float)) / (1 - t)
    return sphere_area(n - 1) * 2 ** (-n / 2) * float(np.dot(rule.weights, q))
