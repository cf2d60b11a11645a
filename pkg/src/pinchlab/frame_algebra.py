"""Pointwise curvature algebra for submanifolds of Euclidean space.

All data live in an orthonormal tangent/normal frame at one point, so the
metric is the identity and no index raising is needed.  Arrays may carry
leading batch dimensions; every function contracts only the trailing
geometric axes.

Index conventions
-----------------
* second fundamental form ``A[..., i, j, alpha]`` with shape ``(..., n, n, m)``
* covariant derivative ``G[..., k, i, j, alpha]`` = nabla_k A_ij^alpha, the
  derivative index first; flat ambient space makes it fully symmetric in
  ``(k, i, j)`` (Codazzi)
* the mean curvature vector is the trace, ``H = sum_i A_ii``

Codimension one and the shape-operator convention
-------------------------------------------------
The convexity machinery works with a scalar *shape matrix* ``W`` whose
eigenvalues are the principal curvatures, with ``H = tr W >= 0`` on mean
convex data (a round sphere has ``W = Id / r``).  Hypersurface texts often
write the scalar second fundamental form as ``-W`` with ``H = -tr``;
:func:`shape_from_sff` is the single conversion point.  Every quantity used
below is even in ``W`` except the eigenvalues themselves, so the sign only
matters for ``lambda_1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CodazziViolation,
    ConvexPoint,
    InvalidPinchingConstant,
    MeanCurvatureVanishes,
    PinchingViolated,
    PreconditionViolated,
    ZeroSff,
)

# |H| below REL_TOL_H * |A| is treated as vanishing mean curvature.
REL_TOL_H = 1e-12
CODAZZI_TOL = 1e-10
INEQ_SLACK = 1e-9
IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class Dimensions:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")

    @property
    def N(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class SffTensor:
    """Vector-valued second fundamental form at one (or a batch of) point(s)."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim < 3 or a.shape[-2] != a.shape[-3]:
            raise ValueError(f"expected shape (..., n, n, m), got {a.shape}")
        scale = max(np.abs(a).max(initial=0.0), 1.0)
        if not np.allclose(a, np.swapaxes(a, -2, -3), rtol=0, atol=1e-12 * scale):
            raise ValueError("second fundamental form is not symmetric in (i, j)")
        object.__setattr__(self, "a", a)

    @property
    def dims(self) -> Dimensions:
        return Dimensions(self.a.shape[-2], self.a.shape[-1])

    @classmethod
    def from_shape(cls, W, codim: int = 1) -> "SffTensor":
        """Embed a scalar shape matrix as the first normal component."""
        W = np.asarray(W, dtype=float)
        a = np.zeros(W.shape + (codim,))
        a[..., 0] = W
        return cls(a)


@dataclass(frozen=True)
class GradSffTensor:
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim < 4 or not (g.shape[-4] == g.shape[-3] == g.shape[-2]):
            raise ValueError(f"expected shape (..., n, n, n, m), got {g.shape}")
        object.__setattr__(self, "g", g)

    def codazzi_defect(self) -> np.ndarray:
        return codazzi_defect(self.g)


def _arr(x, ndim_min):
    if isinstance(x, SffTensor):
        return x.a
    if isinstance(x, GradSffTensor):
        return x.g
    x = np.asarray(x, dtype=float)
    if x.ndim < ndim_min:
        raise ValueError(f"expected at least {ndim_min} dims, got shape {x.shape}")
    return x


def sym3(g):
    """Full symmetrization over the three tangent slots of ``g[..., k, i, j, a]``."""
    g = np.asarray(g, dtype=float)
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    nb = g.ndim - 4
    base = list(range(nb))
    out = np.zeros_like(g)
    for p in perms:
        out += np.transpose(g, base + [nb + q for q in p] + [nb + 3])
    return out / 6.0


def codazzi_defect(g) -> np.ndarray:
    """Max deviation from full (k, i, j) symmetry, per batch element."""
    g = np.asarray(g, dtype=float)
    d = np.abs(g - sym3(g))
    return d.reshape(g.shape[:-4] + (-1,)).max(axis=-1)


def _check_codazzi(G, tol=CODAZZI_TOL):
    scale = np.sqrt(np.sum(G**2, axis=(-4, -3, -2, -1)))
    if np.any(codazzi_defect(G) > tol * np.maximum(scale, 1.0)):
        raise CodazziViolation("gradient tensor is not fully symmetric in (k, i, j)")


def _check_c0(n, c0):
    if np.any(n * np.asarray(c0) <= 1.0):
        raise InvalidPinchingConstant(f"need n*c0 > 1, got n={n}, c0={c0}")


def norm2(x, naxes):
    """Squared Frobenius norm over the trailing ``naxes`` axes."""
    return np.sum(np.asarray(x) ** 2, axis=tuple(range(-naxes, 0)))


# ---------------------------------------------------------------- decomposition


@dataclass(frozen=True)
class Decomposition:
    """Principal-normal splitting ``A = h nu1 + Ahat`` and derived invariants.

    Array fields carry the same batch shape as the input tensor.
    """

    A: np.ndarray
    c0: float
    H: np.ndarray
    normH: np.ndarray
    nu1: np.ndarray
    h: np.ndarray
    mring: np.ndarray
    Ahat: np.ndarray
    lambda1: np.ndarray
    f: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[-2]

    @property
    def m(self) -> int:
        return self.A.shape[-1]

    @property
    def A2(self):
        return norm2(self.A, 3)

    @property
    def h2(self):
        return norm2(self.h, 2)

    @property
    def mring2(self):
        return norm2(self.mring, 2)

    @property
    def Ahat2(self):
        return norm2(self.Ahat, 3)

    @property
    def H2(self):
        return self.normH**2

    @property
    def u(self):
        """Planarity ratio |Ahat|^2 / f (undefined where f <= 0)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.Ahat2 / self.f

    def reconstruction_residual(self):
        rec = self.h[..., None] * self.nu1[..., None, None, :] + self.Ahat
        return np.sqrt(norm2(rec - self.A, 3))


def mean_curvature(A):
    A = _arr(A, 3)
    return np.einsum("...iia->...a", A)


def decompose(A, c0: float = 0.0) -> Decomposition:
    """Split ``A`` along the principal normal ``nu1 = H / |H|``.

    Raises :class:`MeanCurvatureVanishes` when ``|H| <= 1e-12 |A|`` anywhere
    in the batch; the flat branch is the caller's business.
    """
    A = _arr(A, 3)
    n = A.shape[-2]
    H = mean_curvature(A)
    normH = np.linalg.norm(H, axis=-1)
    normA = np.sqrt(norm2(A, 3))
    if np.any(normH <= REL_TOL_H * normA) or np.any(normH == 0.0):
        raise MeanCurvatureVanishes("|H| vanishes; principal normal undefined")
    nu1 = H / normH[..., None]
    h = np.einsum("...ija,...a->...ij", A, nu1)
    Ahat = A - h[..., None] * nu1[..., None, None, :]
    eye = np.eye(n)
    mring = h - (normH / n)[..., None, None] * eye
    lambda1 = np.linalg.eigvalsh(h)[..., 0]
    f = c0 * normH**2 - normA**2
    return Decomposition(
        A=A, c0=c0, H=H, normH=normH, nu1=nu1, h=h, mring=mring, Ahat=Ahat,
        lambda1=lambda1, f=f,
    )


def shape_from_sff(A) -> np.ndarray:
    """Scalar shape matrix of codimension-one data, oriented so that tr >= 0."""
    A = _arr(A, 3)
    if A.shape[-1] != 1:
        raise ValueError("shape matrix is only defined in codimension one")
    W = A[..., 0]
    sign = np.where(np.trace(W, axis1=-2, axis2=-1) < 0, -1.0, 1.0)
    return W * sign[..., None, None]


# ------------------------------------------------------------ normal curvature


@dataclass(frozen=True)
class NormalCurvature:
    Rperp_nu1: np.ndarray  # (..., n, n, m)
    Rhat: np.ndarray  # (..., n, n, m, m)

    @property
    def Rperp_nu1_norm2(self):
        return norm2(self.Rperp_nu1, 3)

    @property
    def Rhat_norm2(self):
        return norm2(self.Rhat, 4)

    @property
    def Rperp_norm2(self):
        # R(nu1, e_b) and R(e_b, nu1) both appear in the full normal curvature.
        return 2.0 * self.Rperp_nu1_norm2 + self.Rhat_norm2


def normal_curvature(d: Decomposition) -> NormalCurvature:
    R1 = np.einsum("...ik,...jka->...ija", d.mring, d.Ahat)
    R1 = R1 - np.swapaxes(R1, -2, -3)
    Rh = np.einsum("...ika,...jkb->...ijab", d.Ahat, d.Ahat)
    Rh = Rh - np.swapaxes(Rh, -3, -4)
    return NormalCurvature(Rperp_nu1=R1, Rhat=Rh)


def full_normal_curvature(A) -> np.ndarray:
    """R_ij^{ab} = sum_k A_ik^a A_jk^b - A_jk^a A_ik^b by direct contraction."""
    A = _arr(A, 3)
    R = np.einsum("...ika,...jkb->...ijab", A, A)
    return R - np.swapaxes(R, -3, -4)


# ----------------------------------------------------------- reaction algebra


def reaction_raw(A, c0):
    """c0 |<A,H>|^2 - |<A,A>|^2 - |R_perp|^2 from direct contractions."""
    A = _arr(A, 3)
    H = mean_curvature(A)
    AH = np.einsum("...ija,...a->...ij", A, H)
    AA = np.einsum("...ija,...kla->...ijkl", A, A)
    R = full_normal_curvature(A)
    return c0 * norm2(AH, 2) - norm2(AA, 4) - norm2(R, 4)


@dataclass(frozen=True)
class ReactionPieces:
    """Scalar building blocks of the reaction expansions."""

    x: np.ndarray  # |mring|^2
    y: np.ndarray  # |Ahat|^2
    f: np.ndarray
    mA2: np.ndarray  # |mring_ij Ahat_ij|^2
    AhAh2: np.ndarray  # |<Ahat, Ahat>|^2
    R1: np.ndarray  # |R_perp(nu1)|^2
    Rh: np.ndarray  # |Rhat_perp|^2

    @property
    def r2(self):
        return 2 * self.x * self.y - self.mA2 - self.R1

    @property
    def r3(self):
        return 1.5 * self.y**2 - self.AhAh2 - self.Rh


def reaction_pieces(d: Decomposition) -> ReactionPieces:
    nc = normal_curvature(d)
    mA = np.einsum("...ij,...ija->...a", d.mring, d.Ahat)
    gram = np.einsum("...ija,...ijb->...ab", d.Ahat, d.Ahat)
    return ReactionPieces(
        x=d.mring2, y=d.Ahat2, f=d.f, mA2=norm2(mA, 1), AhAh2=norm2(gram, 2),
        R1=nc.Rperp_nu1_norm2, Rh=nc.Rhat_norm2,
    )


def _f_terms(p: ReactionPieces, n, c0):
    k = n * c0 - 1
    return 2 / k * p.y * p.f + n * c0 / k * p.x * p.f + p.f**2 / k


def reaction_expansion(p: ReactionPieces, n, c0):
    k = n * c0 - 1
    return (
        _f_terms(p, n, c0)
        + 2 * p.r2
        + p.r3
        + (1 / k - 1.5) * p.y**2
        + (n * c0 / k - 4) * p.x * p.y
    )


def reaction_identity_f(A, c0):
    """Both sides of the principal-normal expansion of the reaction term of f.

    Returns ``(lhs, rhs)``; ``lhs`` is the raw contraction
    ``c0|<A,H>|^2 - |<A,A>|^2 - |R_perp|^2`` and ``rhs`` its expansion in
    ``|Ahat|^2, |mring|^2, f`` plus the three Andrews-Baker type remainders.
    """
    A = _arr(A, 3)
    n = A.shape[-2]
    _check_c0(n, c0)
    d = decompose(A, c0)
    return reaction_raw(A, c0), reaction_expansion(reaction_pieces(d), n, c0)


def reaction_remainder(A, c0):
    """Reaction term minus its f-proportional part; nonnegative iff c0 <= 4/(3n)."""
    A = _arr(A, 3)
    n = A.shape[-2]
    _check_c0(n, c0)
    d = decompose(A, c0)
    return reaction_raw(A, c0) - _f_terms(reaction_pieces(d), n, c0)


def reaction_nonnegativity_check(A, c0, tol=None):
    A = _arr(A, 3)
    n = A.shape[-2]
    if np.any(np.asarray(c0) > 4.0 / (3.0 * n) * (1 + 1e-15)):
        raise PreconditionViolated(f"c0 = {c0} exceeds 4/(3n) = {4 / (3 * n)}")
    d = decompose(A, c0)
    if np.any(d.f < 0):
        raise PreconditionViolated("f < 0: data is not c0-pinched")
    rem = reaction_remainder(A, c0)
    if tol is None:
        tol = INEQ_SLACK * d.A2**2
    return rem >= -tol


@dataclass(frozen=True)
class ReactionWitness:
    """Pinched data on which the reaction remainder is negative."""

    A: np.ndarray
    c0: float
    remainder: float
    f: float


def _normal_form(x, n, m, c0):
    """Pinched tensor with ``H = e_1``, diagonal ``h`` and traceless ``Ahat``.

    Every pinched tensor is a rotation and rescaling of one of these.  The raw
    traceless part ``v`` is mapped to radius ``|v|^2 (c0 - 1/n) / (1 + |v|^2)``
    so ``f > 0`` holds on the whole parameter space.
    """
    iu = np.triu_indices(n)
    k = len(iu[0])
    mr = x[:n] - x[:n].mean()
    Ah = np.zeros((n, n, m - 1))
    Ah[iu[0], iu[1], :] = x[n:].reshape(k, m - 1)
    Ah[iu[1], iu[0], :] = x[n:].reshape(k, m - 1)
    Ah -= np.einsum("iia->a", Ah)[None, None, :] / n * np.eye(n)[..., None]
    rho2 = mr @ mr + np.sum(Ah**2)
    scale = np.sqrt((c0 - 1 / n) / (1 + rho2))
    A = np.zeros((n, n, m))
    A[..., 0] = np.eye(n) / n + np.diag(scale * mr)
    A[..., 1:] = scale * Ah
    return A


def find_reaction_violation(n, c0, m=2, seed=0, restarts=8, rtol=1e-10):
    """Search pinched data for a negative reaction remainder.

    Minimizes ``rem / (|A|^2 |Ahat|^2)`` over the normal form of
    :func:`_normal_form` from random starts; the normalization keeps
    ``Ahat -> 0`` from being a trivial minimum.  Returns the first
    :class:`ReactionWitness` with remainder below ``-rtol |A|^4``, else ``None``.
    """
    from scipy.optimize import minimize

    _check_c0(n, c0)
    if m < 2:
        raise ValueError("a planarity part needs codimension m >= 2")
    rng = np.random.default_rng(seed)
    nparam = n + n * (n + 1) // 2 * (m - 1)

    def objective(x):
        A = _normal_form(x, n, m, c0)
        d = decompose(A, c0)
        return float(reaction_remainder(A, c0) / (d.A2 * d.Ahat2 + 1e-300))

    for _ in range(restarts):
        res = minimize(objective, rng.standard_normal(nparam), method="BFGS")
        A = _normal_form(res.x, n, m, c0)
        d = decompose(A, c0)
        rem = float(reaction_remainder(A, c0))
        if d.f >= 0 and rem < -rtol * float(d.A2) ** 2:
            return ReactionWitness(A=A, c0=c0, remainder=rem, f=float(d.f))
    return None


# --------------------------------------------------- Andrews-Baker inequalities


def ab_basic_inequalities(A, G):
    """Residuals r1, r2, r3 of the three algebraic inequalities (all >= 0)."""
    A = _arr(A, 3)
    G = _arr(G, 4)
    _check_codazzi(G)
    n = A.shape[-2]
    gradH = np.einsum("...kiia->...ka", G)
    r1 = (n + 2) / 3 * norm2(G, 4) - norm2(gradH, 2)
    p = reaction_pieces(decompose(A))
    return r1, p.r2, p.r3


def planarity_reaction_identity(A, c0):
    """Both sides of the reaction identity behind the planarity ratio |Ahat|^2/f."""
    A = _arr(A, 3)
    n = A.shape[-2]
    _check_c0(n, c0)
    d = decompose(A, c0)
    if np.any(d.f <= 0):
        raise PinchingViolated("f <= 0: planarity ratio undefined")
    p = reaction_pieces(d)
    u = p.y / p.f
    lhs = u * reaction_raw(A, c0) - p.AhAh2 - p.Rh - p.R1
    k = n * c0 - 1
    rhs = (
        p.f * p.y / k + p.mA2 + 1.5 * p.y**2 + 2 * p.x * p.y
        + (2 * u + 1) * p.r2
        + (u + 1) * p.r3
        + (u + 2) * (1 / k - 1.5) * p.y**2
        + (u + 1) * (n * c0 / k - 4) * p.x * p.y
    )
    return lhs, rhs


# ------------------------------------------------------------ gradient algebra


@dataclass(frozen=True)
class GradDerived:
    """First-order quantities at a point; tangent index order is (k, i, j)."""

    gradH: np.ndarray  # (..., n, m)
    gradNormH: np.ndarray  # (..., n)
    gradNu1: np.ndarray  # (..., n, m)
    gradh: np.ndarray  # (..., n, n, n)
    gradAhat: np.ndarray  # (..., n, n, n, m)
    hatGradAhat: np.ndarray  # (..., n, n, n, m)
    gradAhat_nu1: np.ndarray  # <grad Ahat, nu1>, (..., n, n, n)
    gradAring_nu1: np.ndarray  # <grad Aring, nu1>, (..., n, n, n)
    Q: np.ndarray  # (..., n, n, n)


def grad_derived(d: Decomposition, G) -> GradDerived:
    G = _arr(G, 4)
    n = d.n
    eye = np.eye(n)
    nu = d.nu1
    gradH = np.einsum("...kiia->...ka", G)
    gradNormH = np.einsum("...ka,...a->...k", gradH, nu)
    gradNu1 = (gradH - gradNormH[..., None] * nu[..., None, :]) / d.normH[..., None, None]
    G_nu = np.einsum("...kija,...a->...kij", G, nu)
    # d/dk <A_ij, nu1> = <grad_k A_ij, nu1> + <Ahat_ij, grad_k nu1>
    gradh = G_nu + np.einsum("...ija,...ka->...kij", d.Ahat, gradNu1)
    gradAhat = (
        G
        - gradh[..., None] * nu[..., None, None, None, :]
        - d.h[..., None, :, :, None] * gradNu1[..., :, None, None, :]
    )
    gradAhat_nu1 = np.einsum("...kija,...a->...kij", gradAhat, nu)
    hatGradAhat = gradAhat - gradAhat_nu1[..., None] * nu[..., None, None, None, :]
    gradAring_nu1 = G_nu - eye[..., None, :, :] * gradNormH[..., :, None, None] / n
    Q = (
        gradAring_nu1
        - gradAhat_nu1
        - d.mring[..., None, :, :] * (gradNormH / d.normH[..., None])[..., :, None, None]
    )
    return GradDerived(
        gradH=gradH, gradNormH=gradNormH, gradNu1=gradNu1, gradh=gradh,
        gradAhat=gradAhat, hatGradAhat=hatGradAhat, gradAhat_nu1=gradAhat_nu1,
        gradAring_nu1=gradAring_nu1, Q=Q,
    )


def gradient_reconstruction_residual(d: Decomposition, gd: GradDerived, G):
    G = _arr(G, 4)
    rec = (
        gd.gradh[..., None] * d.nu1[..., None, None, None, :]
        + d.h[..., None, :, :, None] * gd.gradNu1[..., :, None, None, :]
        + gd.gradAhat
    )
    return np.sqrt(norm2(rec - G, 4))


@dataclass(frozen=True)
class GradientIdentities:
    gradAhat_lhs: np.ndarray
    gradAhat_rhs: np.ndarray
    ugrad_lhs: np.ndarray
    ugrad_rhs: np.ndarray
    kato_residual: np.ndarray
    u: np.ndarray


def _grad_setup(A, G, c0):
    A = _arr(A, 3)
    G = _arr(G, 4)
    n = A.shape[-2]
    _check_c0(n, c0)
    _check_codazzi(G)
    d = decompose(A, c0)
    if np.any(d.f <= 0):
        raise PinchingViolated("f <= 0: planarity ratio undefined")
    return A, G, n, d, grad_derived(d, G)


def planarity_gradient_identities(A, G, c0) -> GradientIdentities:
    """Both sides of the two gradient-term identities plus the Kato residual."""
    A, G, n, d, gd = _grad_setup(A, G, c0)
    u = d.Ahat2 / d.f
    x, y, f, H2 = d.mring2, d.Ahat2, d.f, d.H2
    k = n * c0 - 1
    dnu2 = norm2(gd.gradNu1, 2)
    hatA_plus = gd.hatGradAhat + d.mring[..., None, :, :, None] * gd.gradNu1[..., :, None, None, :]
    kappa = (n - 1) / ((n + 2) * k)
    rhs1 = (
        (norm2(gd.hatGradAhat, 4) + x * dnu2 - 0.5 * norm2(hatA_plus, 4))
        + (0.5 * norm2(hatA_plus, 4) - (n - 1) / (n * (n + 2)) * H2 * dnu2)
        + norm2(gd.gradAhat_nu1, 3)
        + kappa * (f + y) * dnu2
        + (kappa - 1) * x * dnu2
    )
    ring2 = norm2(gd.gradAring_nu1, 3)
    gnh2 = norm2(gd.gradNormH, 1)
    hat_h = gd.hatGradAhat + d.h[..., None, :, :, None] * gd.gradNu1[..., :, None, None, :]
    rhs2 = (
        u * (c0 - 1 / n) * (n * (n + 2) / (2 * (n - 1)) * ring2 - gnh2)
        + u * (norm2(hat_h, 4) - 3 / (n + 2) * H2 * dnu2)
        + n / k * (3 / (n + 2) - c0) * (u * y + u * x + y) * dnu2
        + (1 - (n + 2) * k / (2 * (n - 1))) * u * ring2
    )
    lhs2 = u * (norm2(G, 4) - c0 * norm2(gd.gradH, 2))
    kato = n * (n + 2) / (2 * (n - 1)) * ring2 - gnh2
    return GradientIdentities(
        gradAhat_lhs=norm2(gd.gradAhat, 4), gradAhat_rhs=rhs1,
        ugrad_lhs=lhs2, ugrad_rhs=rhs2, kato_residual=kato, u=u,
    )


def gradient_bound_coefficients(n, c0, a1=1.0, a2=0.5, a3=1.0) -> dict:
    """Coefficients of the final lower bound for the planarity gradient terms.

    Each must be >= 0 for the gradient terms to have the right sign.
    """
    k = n * c0 - 1
    kappa = (n - 1) / ((n + 2) * k)
    beta = (n + 2) * k / (2 * (n - 1))
    return {
        "gradAhat_nu1": 1 - a1,
        "Ahat2_dnu2": (4 * n - 1) / ((n + 2) * k) - n * c0 / k - 1 / a1,
        "f_dnu2": kappa - 1 / a2,
        "mring2_dnu2": kappa - 1 - 1 / a3,
        "u_gradAring_nu1": 1 - (1 + a3) * beta - a2,
        "u_Ahat2_mring2_dnu2": n / k * (3 / (n + 2) - c0),
    }


@dataclass(frozen=True)
class GradientBoundChain:
    """Every link of the estimate chain for the planarity gradient terms."""

    left: np.ndarray
    gradAhat2: np.ndarray
    lb_gradAhat: np.ndarray
    ugrad: np.ndarray
    lb_ugrad: np.ndarray
    cross: np.ndarray  # 2 Q_ijk <Ahat_ij, grad_k nu1>
    ub_cross: np.ndarray
    ub_cross_kato: np.ndarray
    final: np.ndarray

    @property
    def residual(self):
        return self.left - self.final

    @property
    def bookkeeping_residual(self):
        return self.lb_gradAhat + self.lb_ugrad - self.ub_cross_kato - self.final


def gradient_bound_chain(A, G, c0, a1=1.0, a2=0.5, a3=1.0) -> GradientBoundChain:
    A, G, n, d, gd = _grad_setup(A, G, c0)
    u = d.Ahat2 / d.f
    x, y, f, H2 = d.mring2, d.Ahat2, d.f, d.H2
    k = n * c0 - 1
    kappa = (n - 1) / ((n + 2) * k)
    beta = (n + 2) * k / (2 * (n - 1))
    dnu2 = norm2(gd.gradNu1, 2)
    hatnu = norm2(gd.gradAhat_nu1, 3)
    ring2 = norm2(gd.gradAring_nu1, 3)
    gnh2 = norm2(gd.gradNormH, 1)

    gradAhat2 = norm2(gd.gradAhat, 4)
    ugrad = u * (norm2(G, 4) - c0 * norm2(gd.gradH, 2))
    cross = 2 * np.einsum("...kij,...ija,...ka->...", gd.Q, d.Ahat, gd.gradNu1)

    lb1 = hatnu + kappa * (f + y) * dnu2 + (kappa - 1) * x * dnu2
    lb2 = n / k * (3 / (n + 2) - c0) * (u * y + u * x + y) * dnu2 + (1 - beta) * u * ring2
    young = (
        a2 * u * ring2 + f * dnu2 / a2 + a1 * hatnu + y * dnu2 / a1
        + a3 * y / H2 * gnh2 + x * dnu2 / a3
    )
    young_kato = young - a3 * y / H2 * gnh2 + a3 * beta * u * ring2
    c = gradient_bound_coefficients(n, c0, a1, a2, a3)
    final = (
        c["gradAhat_nu1"] * hatnu
        + c["Ahat2_dnu2"] * y * dnu2
        + c["f_dnu2"] * f * dnu2
        + c["mring2_dnu2"] * x * dnu2
        + c["u_gradAring_nu1"] * u * ring2
        + c["u_Ahat2_mring2_dnu2"] * (u * y + u * x) * dnu2
    )
    return GradientBoundChain(
        left=gradAhat2 + ugrad - cross, gradAhat2=gradAhat2, lb_gradAhat=lb1,
        ugrad=ugrad, lb_ugrad=lb2, cross=cross, ub_cross=young,
        ub_cross_kato=young_kato, final=final,
    )


def planarity_gradient_bound(A, G, c0, a1=1.0, a2=0.5, a3=1.0):
    """Left side of the gradient terms minus the final coefficient lower bound."""
    return gradient_bound_chain(A, G, c0, a1, a2, a3).residual


# ------------------------------------------------- codimension-one gradient bound


def commutator_terms(W, G):
    """Return ``(|G|^2, |grad|W||^2, |W (x) G - G (x) W|^2, |W|^2)``.

    ``(W (x) G - G (x) W)_{ijkpq} = W_ij G_kpq - G_ijk W_pq``; its squared
    norm is expanded without using any symmetry of ``G``.
    """
    W = np.asarray(W, dtype=float)
    G = np.asarray(G, dtype=float)
    W2 = norm2(W, 2)
    G2 = norm2(G, 3)
    v = np.einsum("...pq,...kpq->...k", W, G)  # sum W_pq grad_k W_pq
    w = np.einsum("...ij,...ijk->...k", W, G)  # sum W_ij grad_i W_jk
    T2 = 2 * W2 * G2 - 2 * np.sum(v * w, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gradnorm2 = np.sum(v**2, axis=-1) / W2
    return G2, gradnorm2, T2, W2


def commutator_identity(W, G):
    """``|grad A|^2 - |grad|A||^2`` and ``|A(x)gradA - gradA(x)A|^2 / (2|A|^2)``."""
    W = np.asarray(W, dtype=float)
    G = np.asarray(G, dtype=float)
    if G.ndim == W.ndim + 2 and G.shape[-1] == 1:
        G = G[..., 0]
    _check_codazzi(G[..., None])
    G2, gn2, T2, W2 = commutator_terms(W, G)
    if np.any(np.sqrt(W2) <= 1e-300) or np.any(W2 == 0):
        raise ZeroSff("|A| = 0: commutator identity undefined")
    return G2 - gn2, T2 / (2 * W2)


@dataclass(frozen=True)
class CommutatorBound:
    lhs: np.ndarray
    rhs: np.ndarray
    claim_residual: np.ndarray
    lambda_n_residual: np.ndarray
    H: np.ndarray
    lambda1: np.ndarray


def commutator_lower_bound(W, G, eps0) -> CommutatorBound:
    """Gradient lower bound in non-convex regions of a hypersurface.

    Requires ``lambda_1 <= -eps0 H < 0``.  ``W`` is diagonalized and ``G`` rotated
    into the principal frame before evaluating the intermediate claim.
    """
    W = np.asarray(W, dtype=float)
    G = np.asarray(G, dtype=float)
    if G.ndim == W.ndim + 2 and G.shape[-1] == 1:
        G = G[..., 0]
    _check_codazzi(G[..., None])
    n = W.shape[-1]
    eps0 = np.asarray(eps0, dtype=float)
    lam, Q = np.linalg.eigh(W)
    H = lam.sum(axis=-1)
    scale = np.sqrt(norm2(W, 2))
    if np.any(H <= 0) or np.any(lam[..., 0] > -eps0 * H + 1e-12 * scale):
        raise ConvexPoint("lambda_1 > -eps0 H: hypothesis of the bound fails")
    G2, gn2, T2, W2 = commutator_terms(W, G)
    lhs = G2 - gn2
    rhs = eps0**2 / (8 * n**2) * G2 * H**2 / W2
    # grad_i A_ii in the principal frame: sum_abc Q_ai Q_bi Q_ci G_abc
    diag_i = np.einsum("...abc,...ci->...abi", G, Q)
    diag_i = np.einsum("...abi,...bi->...ai", diag_i, Q)
    diag_i = np.einsum("...ai,...ai->...i", diag_i, Q)
    claim = T2 - 0.25 * np.sum(lam**2 * (G2[..., None] - diag_i**2), axis=-1)
    return CommutatorBound(
        lhs=lhs, rhs=rhs, claim_residual=claim,
        lambda_n_residual=lam[..., -1] - H / n, H=H, lambda1=lam[..., 0],
    )


# ------------------------------------------------------------- Simons commutator


def simons_commutator(W):
    """``C = A (x) A^2 - A^2 (x) A`` as a 4-index array, and ``|C|^2``."""
    W = np.asarray(W, dtype=float)
    W2m = W @ W
    C = np.einsum("...ij,...kl->...ijkl", W, W2m) - np.einsum("...ij,...kl->...ijkl", W2m, W)
    return C, norm2(C, 4)


def simons_norm2_eigen(W):
    lam = np.linalg.eigvalsh(np.asarray(W, dtype=float))
    li, lj = lam[..., :, None], lam[..., None, :]
    return np.sum(li**2 * lj**2 * (lj - li) ** 2, axis=(-2, -1))


def simons_alpha(eps_bar, L, n):
    return eps_bar**2 / (L**2 * n**4)


def simons_lower_bound(W, eps_bar, L):
    """``(|C|^2, alpha |A|^2 H^4)`` under ``lambda_1 <= -eps_bar H`` and ``|A| <= L H``."""
    W = np.asarray(W, dtype=float)
    n = W.shape[-1]
    lam = np.linalg.eigvalsh(W)
    H = lam.sum(axis=-1)
    A2 = norm2(W, 2)
    scale = np.sqrt(A2)
    if np.any(lam[..., 0] > -np.asarray(eps_bar) * H + 1e-12 * scale):
        raise ConvexPoint("lambda_1 > -eps_bar H")
    if np.any(scale > np.asarray(L) * H * (1 + 1e-12)):
        raise PreconditionViolated("|A| > L H")
    _, C2 = simons_commutator(W)
    return C2, simons_alpha(eps_bar, L, n) * A2 * H**4


def inequality_tol(A, G=None, degree=4, slack=INEQ_SLACK):
    """Homogeneity-scaled slack ``slack * (|A| + |G|^(1/2))^degree``.

    ``A`` has layout ``(..., n, n, m)`` and ``G`` ``(..., n, n, n, m)``; pass
    codimension-one shape matrices as ``W[..., None]``.
    """
    s = np.sqrt(norm2(np.asarray(A, dtype=float), 3))
    if G is not None:
        s = s + norm2(np.asarray(G, dtype=float), 4) ** 0.25
    return slack * s**degree


def relative_residual(lhs, rhs, natural):
    """|lhs - rhs| relative to the larger of |lhs|, |rhs| and a natural scale."""
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    denom = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.asarray(natural))
    return np.abs(lhs - rhs) / denom
