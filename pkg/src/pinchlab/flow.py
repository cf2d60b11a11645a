"""Reduced mean curvature flows and per-step estimate monitors.

Two reductions are provided:

* products of round spheres, where each radius obeys ``r' = -m / r``;
* rotationally symmetric hypersurfaces ``{(x, r(x) theta)}`` in ``R^(n+1)``.

The profile PDE is evolved in ``w = r^2``::

    w_t = 2 (2 w w_xx - w_x^2) / (4 w + w_x^2) - 2 (n - 1)

which is regular where the profile meets the axis and keeps spheres
(``w = R^2 - x^2``) and cylinders (``w = const``) exact under centered
differences and explicit Euler.  Principal curvatures with respect to the
inward normal are::

    lambda_axial  = -2 (2 w w_xx - w_x^2) / (4 w + w_x^2)^(3/2)
    lambda_sphere = 2 / sqrt(4 w + w_x^2)        (multiplicity n - 1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import ConvexityConstants, PlanarityConstants
from .errors import (
    CflViolation,
    InvalidInput,
    MeanConvexityLost,
    PinchingLost,
    ProfilePinchoff,
    StepSizeUnderflow,
)
from .exact import HomogeneousSolution, df_dt_closed_form, sphere_product
from .frame_algebra import decompose, norm2, reaction_raw

R_STOP = 1e-6


# ---------------------------------------------------------------- product flow


@dataclass(frozen=True)
class ProductFlowState:
    p: int
    q: int
    a: float
    b: float
    t: float

    def solution(self) -> HomogeneousSolution:
        return sphere_product(self.p, self.q, self.a, self.b)


def _rk4(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + h / 2 * k1)
    k3 = rhs(y + h / 2 * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def product_flow_solve(p, q, a0, b0, t0, t1, dt, r_stop=R_STOP, max_steps=10_000_000):
    """RK4 for ``a' = -p/a, b' = -q/b`` from ``t0`` to ``t1``.

    The step is halved whenever it exceeds 2% of the collapse time scale
    ``min(r^2 / m)``; integration stops once ``min(a, b) < r_stop``.
    """
    if not (a0 > 0 and b0 > 0 and dt > 0 and t1 >= t0):
        raise InvalidInput("need a0, b0 > 0, dt > 0 and t1 >= t0")
    m = np.array([p, q], dtype=float)

    def rhs(r):
        return -m / r

    y = np.array([a0, b0], dtype=float)
    t = float(t0)
    traj = [ProductFlowState(p, q, a0, b0, t)]
    for _ in range(max_steps):
        if t >= t1 or y.min() < r_stop:
            break
        h = min(dt, t1 - t)
        while h > 0.02 * np.min(y**2 / m):
            h /= 2
        if h <= 1e-15 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step {h} underflows at t = {t}")
        y = _rk4(rhs, y, h)
        if t1 - (t + h) <= 1e-14 * max(1.0, abs(t1)):
            t = float(t1)
        else:
            t = t + h
        if not np.all(y > 0):
            break
        traj.append(ProductFlowState(p, q, float(y[0]), float(y[1]), t))
    return traj


# ---------------------------------------------------------------- profile flow

BOUNDARY_TAGS = ("periodic", "neumann", "free")


@dataclass(frozen=True)
class ProfileFlowState:
    """Profile ``w = r^2`` of a rotational hypersurface on a uniform grid.

    ``bc``: ``periodic`` (grid excludes the right endpoint), ``neumann``
    (reflecting ends) or ``free`` (profile meets the axis; nodes with
    ``w <= 0`` are off the surface and hold a quadratic extrapolation).
    """

    n: int
    x: np.ndarray
    w: np.ndarray
    t: float
    bc: str

    def __post_init__(self):
        if self.bc not in BOUNDARY_TAGS:
            raise InvalidInput(f"unknown boundary tag {self.bc!r}")
        if self.n < 2:
            raise InvalidInput("rotational profiles need n >= 2")
        x = np.asarray(self.x, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if x.shape != w.shape or x.ndim != 1 or len(x) < 5:
            raise InvalidInput("x and w must be matching 1-d arrays with at least 5 nodes")
        d = np.diff(x)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise InvalidInput("grid must be uniform")
        if self.bc != "free" and np.any(w <= 0):
            raise InvalidInput("profile radius must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def r(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.w, 0.0))

    @property
    def active(self) -> np.ndarray:
        return self.w > 0


def periodic_profile(n, r_func, length, M, t=0.0):
    x = np.arange(M) * (length / M)
    return ProfileFlowState(n, x, np.asarray(r_func(x), float) ** 2, t, "periodic")


def neumann_profile(n, r_func, x0, x1, M, t=0.0):
    x = np.linspace(x0, x1, M)
    return ProfileFlowState(n, x, np.asarray(r_func(x), float) ** 2, t, "neumann")


def sphere_profile(n, R, M, t=0.0):
    """Round sphere of radius ``R`` on ``[-R, R]`` (``M`` nodes, poles inactive)."""
    x = np.linspace(-R, R, M)
    return ProfileFlowState(n, x, R * R - x * x, t, "free")


def _padded(state):
    w = state.w
    if state.bc == "periodic":
        return np.concatenate([w[-1:], w, w[:1]])
    if state.bc == "neumann":
        return np.concatenate([w[1:2], w, w[-2:-1]])
    left = 3 * w[0] - 3 * w[1] + w[2]
    right = 3 * w[-1] - 3 * w[-2] + w[-3]
    return np.concatenate([[left], w, [right]])


def profile_derivatives(state):
    """``(w, w_x, w_xx)`` by centered differences with boundary ghosts."""
    wp = _padded(state)
    dx = state.dx
    wx = (wp[2:] - wp[:-2]) / (2 * dx)
    wxx = (wp[2:] - 2 * wp[1:-1] + wp[:-2]) / dx**2
    return state.w, wx, wxx


def profile_curvatures(state):
    """``(lambda_axial, lambda_sphere, H)`` at the active nodes."""
    w, wx, wxx = profile_derivatives(state)
    act = state.active
    w, wx, wxx = w[act], wx[act], wxx[act]
    s = 4 * w + wx**2
    lam_ax = -2 * (2 * w * wxx - wx**2) / s**1.5
    lam_sph = 2 / np.sqrt(s)
    return lam_ax, lam_sph, lam_ax + (state.n - 1) * lam_sph


def profile_sff(state) -> np.ndarray:
    """Codimension-one shape data ``(points, n, n, 1)`` at the active nodes."""
    lam_ax, lam_sph, _ = profile_curvatures(state)
    n = state.n
    A = np.zeros((len(lam_ax), n, n, 1))
    A[:, 0, 0, 0] = lam_ax
    idx = np.arange(1, n)
    A[:, idx, idx, 0] = lam_sph[:, None]
    return A


def max_stable_dt(state) -> float:
    """``0.25 dx^2 (1 + min r_x^2)``: explicit Euler bound for the diffusion ``w_xx / (1 + r_x^2)``."""
    w, wx, _ = profile_derivatives(state)
    act = state.active
    rx2 = wx[act] ** 2 / (4 * w[act])
    return 0.25 * state.dx**2 * (1 + rx2.min())


def _refill_free(w_new, state):
    act = w_new > 0
    idx = np.flatnonzero(act)
    if len(idx) < 3:
        raise ProfilePinchoff("profile extinct: fewer than three nodes off the axis", state)
    if idx[-1] - idx[0] + 1 != len(idx):
        raise ProfilePinchoff("profile pinched off: active set split", state)
    i0, i1 = idx[0], idx[-1]
    j = np.arange(len(w_new))
    for sl, base in ((j < i0, i0), (j > i1, i1 - 2)):
        if np.any(sl):
            y0, y1, y2 = w_new[base], w_new[base + 1], w_new[base + 2]
            s = j[sl] - base
            w_new[sl] = y0 + s * (y1 - y0) + s * (s - 1) / 2 * (y2 - 2 * y1 + y0)
    return w_new


def profile_flow_step(state: ProfileFlowState, dt: float, r_stop: float = R_STOP) -> ProfileFlowState:
    """One explicit Euler step; raises :class:`ProfilePinchoff` at the neck singularity."""
    limit = max_stable_dt(state)
    if dt > limit * (1 + 1e-12):
        raise CflViolation(f"dt = {dt} exceeds stability limit {limit}")
    w, wx, wxx = profile_derivatives(state)
    act = state.active
    rhs = np.zeros_like(w)
    s = 4 * w[act] + wx[act] ** 2
    rhs[act] = 2 * (2 * w[act] * wxx[act] - wx[act] ** 2) / s - 2 * (state.n - 1)
    w_new = w + dt * rhs
    new = None
    if state.bc == "free":
        w_new = _refill_free(w_new, state)
    elif w_new.min() < r_stop**2:
        raise ProfilePinchoff(f"neck radius below {r_stop} at t = {state.t + dt}", state)
    new = replace(state, w=w_new, t=state.t + dt)
    return new


def profile_flow_solve(state, t1, dt=None, cfl=0.9, every=1, r_stop=R_STOP, max_steps=10_000_000):
    """March to ``t1`` or pinch-off; returns ``(snapshots, reason)``.

    ``dt=None`` takes ``cfl`` times the stability limit at every step.
    ``reason`` is ``"t1"`` or the pinch-off message; the last pre-singular
    state is always included.
    """
    states = [state]
    reason = "t1"
    k = 0
    for _ in range(max_steps):
        if state.t >= t1 - 1e-14 * max(1.0, abs(t1)):
            break
        h = cfl * max_stable_dt(state) if dt is None else dt
        h = min(h, t1 - state.t)
        try:
            state = profile_flow_step(state, h, r_stop)
        except ProfilePinchoff as exc:
            reason = str(exc)
            break
        k += 1
        if k % every == 0:
            states.append(state)
    if states[-1] is not state:
        states.append(state)
    return states, reason


# ------------------------------------------------------------------- snapshots


@dataclass(frozen=True)
class Snapshot:
    """Curvature data of a flow at one time: ``A`` per node, optional quadrature."""

    t: float
    A: np.ndarray
    sample: object = None


def snapshot_of(state, tau=None) -> Snapshot:
    """Snapshot of a product or profile state; ``tau`` sizes the flat-factor quadrature."""
    from .gaussian import sample_homogeneous, sample_profile

    if isinstance(state, ProfileFlowState):
        return Snapshot(state.t, profile_sff(state), sample_profile(state))
    sol = state.solution() if isinstance(state, ProductFlowState) else state
    t = state.t if state.t is not None else 0.0
    smp = sample_homogeneous(sol, tau if tau is not None else max(-t, 1.0))
    return Snapshot(t, sol.sff()[None], smp)


# ----------------------------------------------------------------- diagnostics

COLUMNS = (
    "t", "min_f", "max_u", "max_utilde", "log_max_utilde", "max_Geps", "max_G",
    "min_lambda1_over_H", "ratio_min", "ratio_max", "weighted_area", "F", "J",
)


@dataclass
class DiagnosticRecord:
    t: float
    min_f: float = math.nan
    max_u: float = math.nan
    max_utilde: float = math.nan
    log_max_utilde: float = math.nan
    max_Geps: float = math.nan
    max_G: float = math.nan
    min_lambda1_over_H: float = math.nan
    ratio_min: float = math.nan
    ratio_max: float = math.nan
    weighted_area: float = math.nan
    F: float = math.nan
    J: float = math.nan

    def row(self):
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class DiagnosticSeries:
    records: list = field(default_factory=list)
    status: str = "ok"
    violations: list = field(default_factory=list)
    # per-step node fields kept for the Gaussian functionals
    log_utilde_fields: list = field(default_factory=list)
    log_G_fields: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")


def _ratio(A2, H2):
    return float(np.min(A2 / H2)), float(np.max(A2 / H2))


def monitor_planarity(snapshots, constants: PlanarityConstants, strict: bool = True) -> DiagnosticSeries:
    """Track ``u = |Ahat|^2 / f^(1-sigma)`` and ``utilde = t u^(1/sigma)`` per step.

    Times are re-indexed so the window starts at ``t = 0``.  A step where
    ``max utilde > C0`` is recorded as a violation.  If ``f <= 0`` anywhere
    the series stops with status ``pinching_lost``; with ``strict`` a
    :class:`PinchingLost` carrying the partial series is raised.
    """
    series = DiagnosticSeries()
    if not snapshots:
        return series
    c0, sigma = constants.c0, constants.sigma
    t_start = snapshots[0].t
    for snap in snapshots:
        t_rel = snap.t - t_start
        rec = DiagnosticRecord(t=t_rel)
        A = np.asarray(snap.A)
        if not np.any(A):
            rec.min_f = rec.max_u = rec.max_utilde = 0.0
            rec.log_max_utilde = -math.inf
            series.records.append(rec)
            series.log_utilde_fields.append(np.full(A.shape[0], -np.inf))
            continue
        d = decompose(A, c0)
        f = np.atleast_1d(d.f)
        rec.min_f = float(f.min())
        rec.ratio_min, rec.ratio_max = _ratio(np.atleast_1d(d.A2), np.atleast_1d(d.H2))
        rec.min_lambda1_over_H = float(np.min(d.lambda1 / d.normH))
        if np.any(f <= 0):
            series.records.append(rec)
            series.status = "pinching_lost"
            if strict:
                raise PinchingLost(f"f <= 0 at t = {snap.t}", series)
            return series
        Ahat2 = np.atleast_1d(d.Ahat2)
        with np.errstate(divide="ignore"):
            log_u = np.log(Ahat2) - (1 - sigma) * np.log(f)
            log_ut = np.where(Ahat2 > 0, (math.log(t_rel) if t_rel > 0 else -np.inf) + log_u / sigma,
                              -np.inf)
        rec.max_u = float(np.exp(log_u.max()))
        rec.log_max_utilde = float(log_ut.max())
        rec.max_utilde = float(np.exp(min(rec.log_max_utilde, 709.0)))
        if rec.log_max_utilde > constants.log_C0 + 1e-12:
            series.violations.append({
                "operation": "monitor_planarity", "t": snap.t,
                "log_utilde": rec.log_max_utilde, "log_C0": constants.log_C0,
            })
        series.records.append(rec)
        series.log_utilde_fields.append(log_ut)
    return series


def monitor_convexity(snapshots, constants: ConvexityConstants, eps: float | None = None,
                      strict: bool = True) -> DiagnosticSeries:
    """Track ``G_eps = max(-lambda_1 - eps (2 L H - |A|), 0)`` and ``G = G_eps / H^(1-sigma)``.

    Steps where the data are convex (``lambda_1 >= 0``) but ``G_eps > 0``
    are recorded as violations.  ``H <= 0`` stops the series with status
    ``mean_convexity_lost``.
    """
    eps = constants.eps if eps is None else eps
    L, sigma = constants.L, constants.sigma
    series = DiagnosticSeries()
    for snap in snapshots:
        rec = DiagnosticRecord(t=snap.t)
        A = np.asarray(snap.A)
        if A.shape[-1] != 1:
            raise InvalidInput("convexity monitor needs codimension-one data")
        lam = np.linalg.eigvalsh(A[..., 0])
        H = lam.sum(axis=-1)
        if np.any(H <= 0):
            series.records.append(rec)
            series.status = "mean_convexity_lost"
            if strict:
                raise MeanConvexityLost(f"H <= 0 at t = {snap.t}", series)
            return series
        normA = np.sqrt(np.sum(lam**2, axis=-1))
        geps = np.maximum(-lam[:, 0] - eps * (2 * L * H - normA), 0.0)
        with np.errstate(divide="ignore"):
            log_G = np.where(geps > 0, np.log(geps) - (1 - sigma) * np.log(H), -np.inf)
        rec.max_Geps = float(geps.max())
        rec.max_G = float(np.exp(log_G.max()))
        rec.min_lambda1_over_H = float(np.min(lam[:, 0] / H))
        rec.ratio_min, rec.ratio_max = _ratio(normA**2, H**2)
        if np.any((lam[:, 0] >= 0) & (geps > 0)):
            series.violations.append({"operation": "monitor_convexity", "t": snap.t,
                                      "max_Geps": rec.max_Geps})
        series.records.append(rec)
        series.log_G_fields.append(log_G)
    return series


def attach_weighted_area(series: DiagnosticSeries, snapshots, weight_at):
    """Fill ``weighted_area`` with ``int Phi dV`` using ``weight_at(snapshot_time)``."""
    from .gaussian import weighted_integral

    for rec, snap in zip(series.records, snapshots):
        if snap.sample is not None:
            rec.weighted_area = weighted_integral(snap.sample, 1.0, weight_at(snap.t))
    return series


# ---------------------------------------------------------- evolution residual


def evolution_residual_f(sol: HomogeneousSolution, c0: float) -> float:
    """Relative mismatch of ``d/dt f = 2 (c0|<A,H>|^2 - |<A,A>|^2 - |R_perp|^2)``.

    On a spatially homogeneous solution the Laplacian and gradient terms of
    the evolution of ``f`` vanish; ``d/dt f`` comes from the radius ODE in
    closed form and the right side from raw contractions of ``A``.
    """
    A = sol.sff()
    if not sol.sphere_dims:
        return 0.0
    lhs = df_dt_closed_form(sol, c0)
    rhs = 2 * float(reaction_raw(A, c0))
    scale = max(abs(lhs), abs(rhs), float(norm2(A, 3)) ** 2)
    return abs(lhs - rhs) / scale
