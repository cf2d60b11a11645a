"""Closed-form homogeneous solutions: spheres, generalized cylinders, sphere products.

Every family here is a product ``S^{m_1}(r_1) x ... x S^{m_j}(r_j) x R^k``
embedded in ``R^{m_1+1} x ... x R^{m_j+1} x R^k``; each sphere factor carries
one normal direction, so the codimension equals the number of sphere factors.
With the inward unit normal ``nu_a = -x_a / r_a`` of factor ``a`` the second
fundamental form is ``(1/r_a) Id`` on that factor's tangent block, the mean
curvature vector points inward and ``|H|^2 = sum (m_a / r_a)^2``.

Under the flow each radius obeys ``d(r_a^2)/dt = -2 m_a``; the self-similar
(shrinking) branch is ``r_a^2 = -2 m_a t`` for ``t < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .constants import cn_exact
from .errors import InvalidInput
from .frame_algebra import Decomposition, decompose, norm2


@dataclass(frozen=True)
class HomogeneousSolution:
    """A product of round spheres with a flat factor, at one instant."""

    kind: str
    sphere_dims: tuple
    radii: tuple
    flat: int = 0
    t: float | None = None

    def __post_init__(self):
        if len(self.sphere_dims) != len(self.radii):
            raise InvalidInput("one radius per sphere factor")
        if any(m < 1 for m in self.sphere_dims) or self.flat < 0:
            raise InvalidInput("sphere factors need dimension >= 1 and flat part >= 0")
        if any(not r > 0 for r in self.radii):
            raise InvalidInput(f"radii must be positive, got {self.radii}")
        object.__setattr__(self, "sphere_dims", tuple(int(m) for m in self.sphere_dims))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))

    @property
    def n(self) -> int:
        return sum(self.sphere_dims) + self.flat

    @property
    def codim(self) -> int:
        return max(len(self.sphere_dims), 1)

    def with_radii(self, radii, t=None) -> "HomogeneousSolution":
        return HomogeneousSolution(self.kind, self.sphere_dims, tuple(radii), self.flat, t)

    def self_similar(self, t: float) -> "HomogeneousSolution":
        """The member of the shrinking branch that becomes singular at time 0."""
        if t >= 0:
            raise InvalidInput("self-similar branch needs t < 0")
        return self.with_radii([math.sqrt(-2 * m * t) for m in self.sphere_dims], t)

    def evolve(self, dt: float) -> "HomogeneousSolution":
        """Exact flow by ``dt``; raises when a factor collapses."""
        r2 = [r * r - 2 * m * dt for m, r in zip(self.sphere_dims, self.radii)]
        if min(r2, default=1.0) <= 0:
            raise InvalidInput("a sphere factor collapses within dt")
        t = None if self.t is None else self.t + dt
        return self.with_radii([math.sqrt(v) for v in r2], t)

    def collapse_time(self) -> float:
        """Time (relative to now) at which the first sphere factor vanishes."""
        return min((r * r / (2 * m) for m, r in zip(self.sphere_dims, self.radii)), default=math.inf)

    def sff(self) -> np.ndarray:
        """Second fundamental form ``(n, n, codim)`` in a block-adapted frame."""
        A = np.zeros((self.n, self.n, self.codim))
        start = 0
        for a, (m, r) in enumerate(zip(self.sphere_dims, self.radii)):
            idx = np.arange(start, start + m)
            A[idx, idx, a] = 1.0 / r
            start += m
        return A

    def ratio_exact(self) -> Fraction | None:
        """``|A|^2 / |H|^2`` as a rational when it does not depend on the radii."""
        dims = self.sphere_dims
        if not dims:
            return None
        if len(dims) == 1:
            return Fraction(1, dims[0])
        return None


def sphere(n: int, r: float) -> HomogeneousSolution:
    return HomogeneousSolution("sphere", (n,), (r,), 0)


def cylinder(n: int, k: int, r: float) -> HomogeneousSolution:
    if not 0 <= k <= n - 1:
        raise InvalidInput(f"cylinder needs 0 <= k <= n-1, got n={n}, k={k}")
    return HomogeneousSolution("cylinder", (n - k,), (r,), k)


def sphere_product(p: int, q: int, a: float, b: float) -> HomogeneousSolution:
    return HomogeneousSolution("sphere_product", (p, q), (a, b), 0)


def plane(n: int) -> HomogeneousSolution:
    return HomogeneousSolution("plane", (), (), n)


def balanced_sphere_product(p: int, q: int, lam: float = 1.0) -> HomogeneousSolution:
    return sphere_product(p, q, math.sqrt(lam * p), math.sqrt(lam * q))


# ------------------------------------------------------------------ invariants


@dataclass(frozen=True)
class SolutionInvariants:
    decomposition: Decomposition
    A2: float
    H2: float
    Ahat2: float
    ratio: float
    planarity_ratio: float  # |Ahat|^2 / |H|^2
    lambda1: float


def invariants_of(sol: HomogeneousSolution, c0: float = 0.0) -> SolutionInvariants:
    d = decompose(sol.sff(), c0)
    A2 = float(d.A2)
    H2 = float(d.H2)
    Ahat2 = float(d.Ahat2)
    return SolutionInvariants(
        decomposition=d, A2=A2, H2=H2, Ahat2=Ahat2, ratio=A2 / H2,
        planarity_ratio=Ahat2 / H2, lambda1=float(d.lambda1),
    )


# ------------------------------------------------------------------- shrinkers


def sphere_points(m: int, count: int = 64, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform points on the unit sphere ``S^m``, shape ``(count, m+1)``."""
    u = qmc.Sobol(d=m + 1, scramble=True, seed=seed).random(count)
    z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def embedded_points(sol: HomogeneousSolution, count: int = 64, seed: int = 0):
    """Ambient positions and unit outward radial directions per sphere factor.

    Returns ``(x, thetas)`` where ``x`` has shape ``(count, N)`` and
    ``thetas[a]`` is ``(count, N)``, supported on factor ``a``'s block.
    """
    dims = sol.sphere_dims
    N = sum(m + 1 for m in dims) + sol.flat
    rng = np.random.default_rng(seed)
    x = np.zeros((count, N))
    thetas = []
    start = 0
    for a, (m, r) in enumerate(zip(dims, sol.radii)):
        th = np.zeros((count, N))
        th[:, start:start + m + 1] = sphere_points(m, count, seed + a)
        x += r * th
        thetas.append(th)
        start += m + 1
    if sol.flat:
        x[:, start:] = rng.uniform(-3.0, 3.0, (count, sol.flat))
    return x, thetas


def shrinker_residual(sol: HomogeneousSolution, t: float, count: int = 64) -> float:
    """``max |H + x_perp / (-2t)|`` over sample points of the embedded solution."""
    if t >= 0:
        raise InvalidInput("shrinker residual is defined for t < 0")
    x, thetas = embedded_points(sol, count)
    res = np.zeros_like(x)
    for (m, r), th in zip(zip(sol.sphere_dims, sol.radii), thetas):
        res -= (m / r) * th  # mean curvature vector, pointing inward
        res += np.sum(x * th, axis=1, keepdims=True) * th / (-2 * t)
    return float(np.linalg.norm(res, axis=1).max())


# -------------------------------------------------------------- classification


@dataclass(frozen=True)
class PinchingReport:
    n: int
    ratio: float
    c_n: float
    status: str  # "pinched" (ratio < c_n), "boundary" (=), "unpinched" (>)
    exact: bool


def pinching_classification(sol: HomogeneousSolution, rtol: float = 1e-12) -> PinchingReport:
    n = sol.n
    cn = cn_exact(n)
    exact = sol.ratio_exact()
    if exact is not None:
        status = "pinched" if exact < cn else "boundary" if exact == cn else "unpinched"
        return PinchingReport(n, float(exact), float(cn), status, True)
    ratio = invariants_of(sol).ratio
    if abs(ratio - float(cn)) <= rtol * float(cn):
        status = "boundary"
    else:
        status = "pinched" if ratio < float(cn) else "unpinched"
    return PinchingReport(n, ratio, float(cn), status, False)


def df_dt_closed_form(sol: HomogeneousSolution, c0: float) -> float:
    """``d/dt (c0 |H|^2 - |A|^2)`` from ``d(1/r^2)/dt = 2m / r^4``."""
    return sum(2 * (c0 * m**3 - m**2) / r**4 for m, r in zip(sol.sphere_dims, sol.radii))


def sff_norm2(sol: HomogeneousSolution) -> float:
    return float(norm2(sol.sff(), 3))
