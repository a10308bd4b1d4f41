"""Special functions and Gauss quadrature rules.

Everything spectral in the package rests on three ingredients collected
here: log-gamma and digamma (the multipliers are gamma ratios and digamma
differences), Gauss rules on [-1, 1] for the zonal reduction of sphere
integrals, and the orthonormal zonal harmonic profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from spherestab.errors import DomainError

__all__ = [
    "QuadratureRule",
    "ln_gamma",
    "digamma",
    "gauss_legendre",
    "gauss_jacobi",
    "jacobi_mass",
    "gegenbauer_eval",
    "zonal_table",
]

# Bernoulli numbers B_2 .. B_14 for the asymptotic digamma series.
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)
_DIGAMMA_SHIFT = 10.0


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule on [-1, 1] for the weight (1 - t)^alpha (1 + t)^beta."""

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def kind(self) -> str:
        if self.alpha == 0.0 and self.beta == 0.0:
            return "legendre"
        return f"jacobi({self.alpha:g},{self.beta:g})"

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        """Integrate ``f`` (callable or node values) against the rule's weight."""
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return float(np.dot(self.weights, vals))


def ln_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def digamma(x):
    """Digamma function psi = Gamma'/Gamma for positive real arguments.

    Shifts the argument above 10 with psi(x) = psi(x + 1) - 1/x and then
    sums the asymptotic series through the B_14 term. Accepts scalars or
    arrays.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("digamma needs x > 0")
    acc = np.zeros_like(x)
    y = x.copy()
    small = y < _DIGAMMA_SHIFT
    while np.any(small):
        acc[small] -= 1.0 / y[small]
        y[small] += 1.0
        small = y < _DIGAMMA_SHIFT
    inv2 = 1.0 / (y * y)
    series = np.zeros_like(y)
    power = inv2.copy()
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * power
        power = power * inv2
    out = acc + np.log(y) - 0.5 / y - series
    return float(out) if out.ndim == 0 else out


def gauss_legendre(k: int) -> QuadratureRule:
    """k-point Gauss-Legendre rule, exact through degree 2k - 1."""
    if k < 1:
        raise DomainError(f"need at least one node, got k={k}")
    x, w = leggauss(k)
    return QuadratureRule(x, w)


def gauss_jacobi(k: int, alpha: float, beta: float | None = None) -> QuadratureRule:
    """k-point Gauss-Jacobi rule for the weight (1 - t)^alpha (1 + t)^beta.

    ``beta`` defaults to ``alpha`` (the symmetric weight (1 - t^2)^alpha that
    appears in the zonal reduction of sphere integrals).
    """
    if beta is None:
        beta = alpha
    if k < 1:
        raise DomainError(f"need at least one node, got k={k}")
    if alpha <= -1 or beta <= -1:
        raise DomainError(f"Jacobi exponents must exceed -1, got ({alpha}, {beta})")
    if alpha == 0 and beta == 0:
        return gauss_legendre(k)
    x, w = roots_jacobi(k, alpha, beta)
    return QuadratureRule(np.asarray(x), np.asarray(w), float(alpha), float(beta))


def jacobi_mass(alpha: float, beta: float | None = None) -> float:
    """Total mass of (1 - t)^alpha (1 + t)^beta on [-1, 1]."""
    if beta is None:
        beta = alpha
    return math.exp(
        (alpha + beta + 1) * math.log(2.0)
        + math.lgamma(alpha + 1)
        + math.lgamma(beta + 1)
        - math.lgamma(alpha + beta + 2)
    )


def _sphere_area(n: int) -> float:
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def zonal_table(n: int, L: int, t) -> np.ndarray:
    """Normalized zonal profiles Z_0..Z_L of S^n at the points ``t``.

    Row l holds Z_l(t); Z_l(e . w) has unit norm in L^2(S^n, dw). The rows
    come from the three-term recurrence of the polynomials orthonormal for
    (1 - t^2)^((n-2)/2), divided by sqrt|S^{n-1}|.
    """
    if n < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {n}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = (n - 2) / 2
    out = np.empty((L + 1,) + t.shape)
    out[0] = 1.0 / math.sqrt(jacobi_mass(a))
    if L >= 1:
        out[1] = t * out[0] / math.sqrt(_beta_coef(a, 1))
    for l in range(1, L):
        out[l + 1] = (t * out[l] - math.sqrt(_beta_coef(a, l)) * out[l - 1]) / math.sqrt(
            _beta_coef(a, l + 1)
        )
    return out / math.sqrt(_sphere_area(n - 1))


def _beta_coef(a: float, l: int) -> float:
    # monic recurrence coefficient for the weight (1 - t^2)^a
    if a == -0.5 and l == 1:
        return 0.5
    return l * (l + 2 * a) / ((2 * l + 2 * a + 1) * (2 * l + 2 * a - 1))


def gegenbauer_eval(n: int, l: int, t):
    """Degree-l zonal harmonic profile of S^n with unit L^2(S^n) norm."""
    if l < 0:
        raise DomainError(f"degree must be >= 0, got {l}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > 1 + 1e-14):
        raise DomainError("gegenbauer_eval needs |t| <= 1")
    val = zonal_table(n, l, t_arr)[l]
    return float(val[0]) if t_arr.ndim == 0 else val.reshape(t_arr.shape)
