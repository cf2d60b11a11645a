"""Explicit pinching and convexity constants.

Most constants here are astronomically large or small (``C0``, ``C1``), so
every record also carries the natural logarithm; the float field saturates to
``inf`` or ``0.0`` rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.optimize import minimize_scalar

from .errors import InvalidDimension, InvalidInput, PinchingTooWeak


def _check_n(n):
    if int(n) != n or n < 2:
        raise InvalidDimension(f"need integer n >= 2, got {n}")


def cn_exact(n: int) -> Fraction:
    """``min{4/(3n), 3(n+1)/(2n(n+2))}`` as an exact rational."""
    _check_n(n)
    return min(Fraction(4, 3 * n), Fraction(3 * (n + 1), 2 * n * (n + 2)))


def compute_cn(n: int) -> float:
    return float(cn_exact(n))


def _safe_exp(x):
    return math.exp(x) if x < 709.0 else math.inf


@dataclass(frozen=True)
class PlanarityConstants:
    n: int
    eps0: float
    c_n: float
    c0: float
    delta: float
    sigma: float
    log_C0: float
    extended: bool  # n < 5: the n = 5..7 formulas are extended downward

    @property
    def C0(self) -> float:
        return _safe_exp(self.log_C0)


def planarity_constants(n: int, eps0: float) -> PlanarityConstants:
    """Working pinching constant, exponent and bound of the planarity estimate."""
    _check_n(n)
    c_n = compute_cn(n)
    if not 0 < eps0 < c_n:
        raise PinchingTooWeak(f"need 0 < eps0 < c_n = {c_n}, got {eps0}")
    if n <= 7:
        c0 = c_n - 0.5 * eps0
        if n * c0 <= 1:
            raise PinchingTooWeak(
                f"eps0 = {eps0} pushes c0 = c_n - eps0/2 to 1/n or below; "
                f"need eps0 < {2 * (c_n - 1 / n)}"
            )
        delta = min(0.5, n * (n + 2) / (3 * (n - 1)) * eps0)
    else:
        c0 = c_n
        delta = 1.0 / (5 * n - 8)
    sigma = delta / 2
    log_C0 = (
        -math.log(sigma)
        + math.log((n * c0 - 1) / 2)
        + (1 - 1 / sigma) * math.log(eps0 / (2 * c0))
    )
    return PlanarityConstants(
        n=n, eps0=eps0, c_n=c_n, c0=c0, delta=delta, sigma=sigma, log_C0=log_C0,
        extended=n < 5,
    )


def simons_constant(n, L):
    """Crude bound ``|C| <= c H^3`` for the Simons commutator when ``|A| <= L H``."""
    return 4 * n * L**3


def poincare_constant(delta, n, L, eps_bar):
    """Explicit choice of the weighted Poincare constant ``P_delta``.

    ``K = 2 c / alpha`` collects the Simons bound; the Young weights ``a = b``
    are then chosen as large as the ``delta`` budget allows.
    """
    alpha = eps_bar**2 / (L**2 * n**4)
    K = 2 * simons_constant(n, L) / alpha
    a = min(delta / (2 * K), 4 * delta / (n * K))
    return K * (1 + 1 / (2 * a))


@dataclass(frozen=True)
class ConvexityConstants:
    n: int
    L: float
    eps: float
    Lambda: float
    gamma0: float
    gamma: float
    p_min: float
    p: float
    sigma: float
    alpha: float
    P_delta: float
    log_C1: float

    @property
    def C1(self) -> float:
        return _safe_exp(self.log_C1)

    @property
    def eps_bar(self) -> float:
        return self.eps * self.L


def convexity_constants(n, L, eps, Lambda=1.0, p=None, P_delta=None) -> ConvexityConstants:
    """Constants of the convexity estimate for ``|A| <= L H`` and ``eps in (0, 1/L)``.

    ``p`` defaults to the smallest admissible exponent above both ``p_min`` and
    ``P_{1/8} / gamma``; an explicit ``p`` below ``p_min`` is rejected.
    """
    _check_n(n)
    if L <= 0 or not 0 < eps < 1 / L:
        raise InvalidInput(f"need L > 0 and 0 < eps < 1/L, got L={L}, eps={eps}")
    if Lambda <= 0:
        raise InvalidInput("entropy bound Lambda must be positive")
    gamma0 = eps**3 / (8 * n**2 * L**2)
    gamma = gamma0 / 2
    p_min = 2 + 2 * n / gamma
    eps_bar = eps * L
    alpha = eps_bar**2 / (L**2 * n**4)
    if P_delta is None:
        P_delta = poincare_constant(0.125, n, L, eps_bar)
    if p is None:
        p = max(p_min, P_delta / gamma + 1.0)
    elif p < p_min or gamma * p <= P_delta:
        raise InvalidInput(f"p = {p} must satisfy p >= {p_min} and gamma p > P_delta = {P_delta}")
    log_C1 = -math.log(2 * n * Lambda**4) - 4 * p * math.log(L)
    return ConvexityConstants(
        n=n, L=L, eps=eps, Lambda=Lambda, gamma0=gamma0, gamma=gamma, p_min=p_min,
        p=p, sigma=1 / (2 * p), alpha=alpha, P_delta=P_delta, log_C1=log_C1,
    )


def young_F(a2, a3):
    return min(a2, 2 * (1 - a2) / (1 + a3), a3 / (1 + a3))


def _bounded_max(fn, lo, hi, tol=1e-12):
    r = minimize_scalar(lambda x: -fn(x), bounds=(lo, hi), method="bounded",
                        options={"xatol": tol})
    return float(r.x), fn(float(r.x))


def young_optimizer(grid: int = 81):
    """Maximize ``F(a2, a3)`` over ``(0, 1) x (0, 4)``.

    A coarse grid seeds nested bounded scalar searches; ``F`` is a minimum of
    monotone pieces, so both the inner and the outer profile are unimodal.
    """
    best = max(
        ((young_F(a2, a3), a2, a3)
         for a2 in [(i + 0.5) / grid for i in range(grid)]
         for a3 in [4 * (j + 0.5) / grid for j in range(grid)]),
    )
    _, a2g, a3g = best
    lo3, hi3 = max(1e-9, a3g - 8 / grid), min(4.0, a3g + 8 / grid)

    def inner(a3):
        return _bounded_max(lambda a2: young_F(a2, a3), 1e-12, 1 - 1e-12)

    a3, val = _bounded_max(lambda a3: inner(a3)[1], lo3, hi3)
    a2, val = inner(a3)
    return a2, a3, val


def admissibility_constraints(n, c0, a1=1.0, a2=0.5, a3=1.0) -> dict:
    """Every sign condition on ``c0`` from the planarity reaction and gradient terms.

    Each value must be ``>= 0``.
    """
    k = n * c0 - 1
    C0, Cn = c0 - 1 / n, (n - 1) / (n * (n + 2))
    return {
        "reaction_xy": n * c0 / k - 4,
        "reaction_y2": 1 / k - 1.5,
        "reaction_3_over_n_plus_2": 3 / (n + 2) - c0,
        "grad_Ahat2": (4 * n - 1) / ((n + 2) * k) - n * c0 / k - 1 / a1,
        "grad_last_line": 3 / (n + 2) - c0,
        "young_a2_a3": 2 * (1 - a2) / (1 + a3) - C0 / Cn,
        "young_a2": a2 - C0 / Cn,
        "young_a3": a3 / (1 + a3) - C0 / Cn,
    }


def max_admissible_c0(n: int, tol: float = 1e-13) -> float:
    """Largest ``c0`` satisfying every admissibility constraint, by bisection."""
    _check_n(n)
    a2, a3, _ = young_optimizer()

    def ok(c0):
        return all(v >= 0 for v in admissibility_constraints(n, c0, 1.0, a2, a3).values())

    lo, hi = 1 / n + 1e-15, 1.0
    if not ok(lo):
        return 1 / n
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
