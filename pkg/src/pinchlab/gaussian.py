"""Gaussian-weighted integrals, monotone functionals and comparison ODEs.

Surfaces are represented by :class:`SurfaceSample`: quadrature nodes with
their area weights and squared distance to the origin.  Every surface here
is invariant under rotations that preserve ``|x|``, so a node may stand for
a whole orbit, with the orbit's area folded into its weight.

Functionals whose integrands overflow a double (``u^(1/sigma)``, ``G^p``)
are accumulated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import EntropyBoundViolated, InvalidInput, NonFiniteQuantity


def log_sphere_area(m: int) -> float:
    """log of the area of the unit sphere ``S^m``."""
    return math.log(2.0) + (m + 1) / 2 * math.log(math.pi) - gammaln((m + 1) / 2)


@dataclass(frozen=True)
class GaussianWeight:
    """Backward heat kernel centered at the space-time origin, or forward-centered at ``T``.

    ``backward``: ``(-4 pi t)^(-n/2) exp(|x|^2 / (4t))`` for ``t < 0``;
    ``forward``: ``(4 pi (T-t))^(-n/2) exp(-|x|^2 / (4 (T-t)))`` for ``t < T``.
    """

    mode: str
    t: float
    T: float = 0.0

    def __post_init__(self):
        if self.mode not in ("backward", "forward"):
            raise InvalidInput(f"unknown weight mode {self.mode!r}")
        if self.tau <= 0:
            raise InvalidInput("Gaussian weight needs positive time scale")

    @property
    def tau(self) -> float:
        return -self.t if self.mode == "backward" else self.T - self.t

    def log_phi(self, x2, n):
        return -n / 2 * math.log(4 * math.pi * self.tau) - np.asarray(x2) / (4 * self.tau)

    def phi(self, x2, n):
        return np.exp(self.log_phi(x2, n))

    def truncation_radius(self, tail: float = 1e-14) -> float:
        return math.sqrt(4 * self.tau * math.log(1 / tail))


def backward(t):
    return GaussianWeight("backward", t)


def forward(T, t):
    return GaussianWeight("forward", t, T)


@dataclass(frozen=True)
class SurfaceSample:
    """Orbit-representative quadrature of an ``n``-dimensional surface."""

    n: int
    x2: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        x2 = np.atleast_1d(np.asarray(self.x2, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if x2.shape != w.shape:
            raise InvalidInput("x2 and weights must have the same shape")
        if np.any(w < 0):
            raise InvalidInput("quadrature weights must be nonnegative")
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "weights", w)
        if self.log_weights is None:
            with np.errstate(divide="ignore"):
                object.__setattr__(self, "log_weights", np.log(w))


def _check_finite(q):
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise NonFiniteQuantity("quantity field has non-finite values")
    return q


def weighted_integral(sample: SurfaceSample, quantity, w: GaussianWeight) -> float:
    """``sum quantity * Phi * areaWeight`` over the sample nodes."""
    q = _check_finite(np.broadcast_to(quantity, sample.x2.shape))
    terms = q * np.exp(w.log_phi(sample.x2, sample.n) + sample.log_weights)
    return math.fsum(terms.tolist())


def log_weighted_integral(sample: SurfaceSample, log_quantity, w: GaussianWeight) -> float:
    """log of ``sum exp(log_quantity) * Phi * areaWeight``; ``-inf`` if the integrand vanishes."""
    lq = np.broadcast_to(np.asarray(log_quantity, dtype=float), sample.x2.shape)
    if np.any(np.isnan(lq)) or np.any(lq == np.inf):
        raise NonFiniteQuantity("log-quantity field has nan or +inf values")
    terms = lq + w.log_phi(sample.x2, sample.n) + sample.log_weights
    if np.all(terms == -np.inf):
        return -math.inf
    return float(logsumexp(terms))


# ----------------------------------------------------------- sample builders


def sample_homogeneous(sol, tau: float, tail: float = 1e-14, nodes: int = 256) -> SurfaceSample:
    """Quadrature of a sphere product times ``R^k`` for Gaussians of scale ``tau``.

    Sphere factors contribute their total area at a single ``|x|^2``; the flat
    factor is integrated radially with Gauss-Legendre nodes on
    ``[0, sqrt(4 tau ln(1/tail))]``.
    """
    base_x2 = sum(r * r for r in sol.radii)
    log_area = sum(log_sphere_area(m) + m * math.log(r) for m, r in zip(sol.sphere_dims, sol.radii))
    k = sol.flat
    if k == 0:
        return SurfaceSample(sol.n, np.array([base_x2]), np.array([math.exp(log_area)]),
                             np.array([log_area]))
    R = math.sqrt(4 * tau * math.log(1 / tail))
    z, wz = np.polynomial.legendre.leggauss(nodes)
    rho = 0.5 * R * (z + 1)
    log_w = (log_area + log_sphere_area(k - 1) + (k - 1) * np.log(rho)
             + np.log(0.5 * R * wz))
    return SurfaceSample(sol.n, base_x2 + rho**2, np.exp(log_w), log_w)


def trapezoid_weights(M: int, dx: float, periodic: bool) -> np.ndarray:
    w = np.full(M, dx)
    if not periodic:
        w[0] = w[-1] = 0.5 * dx
    return w


def sample_profile(state) -> SurfaceSample:
    """Quadrature of a rotational hypersurface ``{(x, r(x) theta)}``.

    Uses ``dV = |S^(n-1)| r^(n-2) sqrt(4w + w_x^2) / 2 dx`` with ``w = r^2``,
    restricted to active nodes (``w > 0``).
    """
    from .flow import profile_derivatives

    n = state.n
    w, wx, _ = profile_derivatives(state)
    act = state.active
    quad = trapezoid_weights(len(w), state.dx, state.bc == "periodic")
    if state.bc == "free":
        idx = np.flatnonzero(act)
        quad = np.zeros(len(w))
        quad[idx] = state.dx
        quad[idx[0]] = quad[idx[-1]] = 0.5 * state.dx
    wa, wxa, qa = w[act], wx[act], quad[act]
    with np.errstate(divide="ignore"):
        log_w = (log_sphere_area(n - 1) + (n - 2) / 2 * np.log(wa)
                 + 0.5 * np.log(4 * wa + wxa**2) - math.log(2) + np.log(qa))
    return SurfaceSample(n, state.x[act] ** 2 + wa, np.exp(log_w), log_w)


# ------------------------------------------------------------ monotonicity


def monotonicity_check(times, samples, weight_at) -> np.ndarray:
    """Finite-difference ``d/dt`` of ``int Phi dV`` along a trajectory.

    ``weight_at(t)`` returns the Gaussian weight for time ``t``; centered
    differences inside, one-sided at the ends.
    """
    times = np.asarray(times, dtype=float)
    vals = np.array([weighted_integral(s, 1.0, weight_at(t)) for t, s in zip(times, samples)])
    if len(times) < 2:
        return np.zeros_like(vals)
    return np.gradient(vals, times)


# ------------------------------------------------------------------ functionals


@dataclass(frozen=True)
class OdeTrajectory:
    kind: str
    t: np.ndarray
    log_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)


@dataclass(frozen=True)
class FResult:
    trajectory: OdeTrajectory
    violated: bool
    entropy: np.ndarray  # int Phi_T dV per step


def F_functional(times, samples, log_utilde_fields, log_C0, Lambda, T, tol=1e-6) -> FResult:
    """``F(t) = int utilde Phi_T dV / (C0 Lambda)`` along a window starting at ``t = 0``.

    ``log_utilde_fields[i]`` holds ``log(t u^(1/sigma))`` per node (``-inf`` where
    ``u = 0``).  ``F <= 1`` is the same statement as
    ``int u^(1/sigma) Phi_T dV <= C0 Lambda / t``.  Raises
    :class:`EntropyBoundViolated` if ``int Phi_T dV > Lambda``.
    """
    logF, ent = [], []
    for t, s, lu in zip(times, samples, log_utilde_fields):
        w = forward(T, t)
        e = weighted_integral(s, 1.0, w)
        if e > Lambda:
            raise EntropyBoundViolated(f"int Phi_T dV = {e} exceeds Lambda = {Lambda} at t = {t}")
        ent.append(e)
        li = log_weighted_integral(s, lu, w)
        logF.append(li - log_C0 - math.log(Lambda))
    logF = np.array(logF)
    violated = bool(np.any(logF > math.log1p(tol)))
    return FResult(OdeTrajectory("PlanarityF", np.asarray(times, float), logF), violated,
                   np.array(ent))


def J_functional(times, samples, log_G_fields, p) -> OdeTrajectory:
    """``J(t) = (-t)^(-1/8) int G^p Phi dV`` with the backward weight; ``t < 0``.

    ``log_G_fields[i]`` holds ``log G`` per node (``-inf`` where ``G = 0``).
    """
    out = []
    for t, s, lg in zip(times, samples, log_G_fields):
        if t >= 0:
            raise InvalidInput("J is defined for t < 0")
        lg = np.asarray(lg, dtype=float)
        with np.errstate(invalid="ignore"):
            lq = np.where(lg == -np.inf, -np.inf, p * lg)
        li = log_weighted_integral(s, lq, backward(t))
        out.append(li - math.log(-t) / 8)
    return OdeTrajectory("ConvexityJ", np.asarray(times, float), np.array(out))


def logistic_comparison(F0=0.5, t0=0.1, T=10.0, steps=20000):
    """RK4 for ``F' = (F/t)(1 - F)``; returns ``(t, F)``."""
    ts = np.geomspace(t0, T, steps + 1)
    F = np.empty_like(ts)
    F[0] = F0

    def rhs(t, y):
        return y / t * (1 - y)

    for i in range(steps):
        t, h, y = ts[i], ts[i + 1] - ts[i], F[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        F[i + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return ts, F


def logistic_exact(t, F0=0.5, t0=0.1):
    """Closed form ``F = c t / (1 + c t)`` with ``c = F0 / ((1 - F0) t0)``."""
    c = F0 / ((1 - F0) * t0)
    t = np.asarray(t, dtype=float)
    return c * t / (1 + c * t)


# ------------------------------------------------------- ancient ODE rigidity


@dataclass(frozen=True)
class RigidityResult:
    t_min: float  # earliest time allowed by the integrated inequality
    t_blow_exact: float  # blow-up time of the equality ODE, closed form
    t_blow_numeric: float  # same, by backward RK4 with blow-up detection
    extent_ratio: float  # (t0 - t_blow_exact) / (t0 - t_min), at most 1


def _check_ode_inputs(C1, t0, J0):
    if not (C1 > 0 and J0 > 0 and t0 < 0):
        raise InvalidInput(f"need C1 > 0, J0 > 0, t0 < 0; got C1={C1}, t0={t0}, J0={J0}")


def ode_t_min(C1, t0, J0):
    _check_ode_inputs(C1, t0, J0)
    return t0 - J0 ** -4 / (4 * C1 * abs(t0) ** 0.5)


def ode_blowup_exact(C1, t0, J0):
    """Backward blow-up time of ``J' = -C1 (-t)^(1/2) J^5`` through ``(t0, J0)``."""
    _check_ode_inputs(C1, t0, J0)
    s0 = -t0
    return -((s0**1.5 + 3 / (8 * C1 * J0**4)) ** (2 / 3))


def ode_blowup_numeric(C1, t0, J0, growth=1e3, rel_step=0.01, max_steps=200000):
    """Integrate ``dJ/ds = C1 s^(1/2) J^5`` in ``s = -t`` until ``J > growth * J0``.

    Steps are capped so ``J`` grows by at most ``rel_step`` per step and ``s``
    by at most ``rel_step`` relative; the detection threshold leaves an unresolved extent of order ``growth^-4``
    relative to the total.
    """
    _check_ode_inputs(C1, t0, J0)

    def rhs(s, J):
        return C1 * math.sqrt(s) * J**5

    s, J = -t0, J0
    for _ in range(max_steps):
        if J > growth * J0:
            return -s
        h = rel_step * min(J / rhs(s, J), s)
        k1 = rhs(s, J)
        k2 = rhs(s + h / 2, J + h / 2 * k1)
        k3 = rhs(s + h / 2, J + h / 2 * k2)
        k4 = rhs(s + h, J + h * k3)
        J = J + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    raise RuntimeError("backward integration did not blow up within max_steps")


def ancient_ode_rigidity(C1, t0, J0) -> RigidityResult:
    t_min = ode_t_min(C1, t0, J0)
    t_blow = ode_blowup_exact(C1, t0, J0)
    # both extents in closed form, free of cancellation: t0 - t_blow = s0 ((1 + z)^(2/3) - 1)
    s0 = -t0
    z = 3 / (8 * C1 * J0**4 * s0**1.5)
    extent = s0 * math.expm1(2 / 3 * math.log1p(z))
    bound = J0**-4 / (4 * C1 * math.sqrt(s0))
    return RigidityResult(t_min, t_blow, ode_blowup_numeric(C1, t0, J0), extent / bound)


# --------------------------------------------------------- divergence identity


@dataclass(frozen=True)
class DivergenceCheck:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def divergence_identity_check(state, u, t: float) -> DivergenceCheck:
    """Integrated divergence identity for ``u^2 Phi x`` on a rotational hypersurface.

    ``lhs = int (n u^2 + 2u <x^T, grad u> + u^2 |x^T|^2 / (2t)) Phi dV`` and
    ``rhs = -int u^2 <H, x_perp> Phi dV``; they agree when ``u^2 Phi x`` has no
    flux through the ends of the grid.  ``u`` is given on the full grid.
    """
    from .flow import profile_curvatures, profile_derivatives

    if t >= 0:
        raise InvalidInput("backward weight needs t < 0")
    n = state.n
    u = np.asarray(u, dtype=float)
    w, wx, _ = profile_derivatives(state)
    ux = _grid_gradient(u, state.dx, state.bc)
    act = state.active
    lam_ax, lam_sph, H = profile_curvatures(state)
    x = state.x[act]
    w, wx, u, ux = w[act], wx[act], u[act], ux[act]
    r = np.sqrt(w)
    rrx = wx / 2
    s2 = (4 * w + wx**2) / (4 * w)  # 1 + r_x^2
    xT_norm = (x + rrx) / np.sqrt(s2)
    xT_grad_u = (x + rrx) * ux / s2
    H_xperp = -H * (r - x * rrx / r) / np.sqrt(s2)
    smp = sample_profile(state)
    wt = backward(t)
    lhs = weighted_integral(smp, n * u**2 + 2 * u * xT_grad_u + u**2 * xT_norm**2 / (2 * t), wt)
    rhs = weighted_integral(smp, -(u**2) * H_xperp, wt)
    return DivergenceCheck(lhs, rhs)


def _grid_gradient(u, dx, bc):
    if bc == "periodic":
        return (np.roll(u, -1) - np.roll(u, 1)) / (2 * dx)
    return np.gradient(u, dx, edge_order=2)
