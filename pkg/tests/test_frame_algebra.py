import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import loop_normal_curvature_norm2, loop_reaction_lhs
from pinchlab import frame_algebra as fa
from pinchlab import sampling
from pinchlab.constants import compute_cn
from pinchlab.errors import (
    CodazziViolation,
    ConvexPoint,
    InvalidPinchingConstant,
    MeanCurvatureVanishes,
    PinchingViolated,
    PreconditionViolated,
    ZeroSff,
)


def _pinched(seed, n, m, c0, size=1):
    return sampling.sample_pinched_sff(np.random.default_rng(seed), n, m, c0, size)


def _codazzi(seed, n, m, size=1):
    return sampling.sample_codazzi(np.random.default_rng(seed + 1), n, m, size)


dims = st.tuples(st.integers(2, 6), st.integers(1, 3))
seeds = st.integers(0, 2**31 - 1)


# ------------------------------------------------------------- decomposition


def test_sphere_decomposition_pinching_scalar():
    A = fa.SffTensor.from_shape(np.eye(2))
    d = fa.decompose(A, 9 / 16)
    assert d.f == pytest.approx(0.25, abs=1e-15)
    assert d.mring2 == pytest.approx(0.0, abs=1e-30)
    assert d.Ahat2 == 0.0
    assert d.lambda1 == pytest.approx(1.0)


def test_cylinder_ratio_is_inverse_round_dimension():
    n, k = 5, 1
    W = np.diag([1.0] * (n - k) + [0.0] * k)
    d = fa.decompose(W[..., None])
    assert d.A2 / d.H2 == pytest.approx(1 / (n - k), rel=1e-15)


def test_codimension_one_has_no_planarity_part(rng):
    W = rng.standard_normal((4, 4))
    W = W + W.T + 8 * np.eye(4)
    d = fa.decompose(W[..., None])
    assert d.Ahat2 == 0.0


def test_vanishing_mean_curvature_raises():
    A = np.zeros((3, 3, 2))
    A[0, 0, 0], A[1, 1, 0] = 1.0, -1.0
    with pytest.raises(MeanCurvatureVanishes):
        fa.decompose(A)


def test_sff_tensor_rejects_asymmetric():
    a = np.zeros((2, 2, 1))
    a[0, 1, 0] = 1.0
    with pytest.raises(ValueError):
        fa.SffTensor(a)


@given(dims, seeds)
def test_decomposition_invariants(nm, seed):
    n, m = nm
    A = sampling.sample_sff(np.random.default_rng(seed), n, m, 1)[0]
    A[..., 0] += 3 * np.eye(n)
    d = fa.decompose(A, 0.3)
    scale = d.A2
    assert d.reconstruction_residual() <= 1e-13 * math.sqrt(scale)
    assert np.abs(np.einsum("ija,a->ij", d.Ahat, d.nu1)).max() <= 1e-13 * math.sqrt(scale)
    assert np.abs(np.einsum("iia->a", d.Ahat)).max() <= 1e-13 * math.sqrt(scale)
    assert d.A2 == pytest.approx(d.h2 + d.Ahat2, rel=1e-12)
    assert d.h2 == pytest.approx(d.mring2 + d.H2 / n, rel=1e-12)


# ---------------------------------------------------------- normal curvature


def test_normal_curvature_vanishes_without_planarity_part():
    d = fa.decompose(np.diag([1.0, 2.0, 3.0])[..., None])
    nc = fa.normal_curvature(d)
    assert nc.Rperp_norm2 == 0.0


def test_normal_curvature_principal_part_vanishes_for_umbilic_h():
    A = np.zeros((3, 3, 3))
    A[..., 0] = np.eye(3)
    A[0, 1, 1] = A[1, 0, 1] = 0.7
    A[0, 0, 2], A[1, 1, 2] = 0.5, -0.5
    nc = fa.normal_curvature(fa.decompose(A))
    assert nc.Rperp_nu1_norm2 == pytest.approx(0.0, abs=1e-28)
    assert nc.Rhat_norm2 > 0


def test_normal_curvature_matches_index_loops(rng):
    A = sampling.sample_sff(rng, 3, 2, 1)[0]
    A[..., 0] += 2 * np.eye(3)
    nc = fa.normal_curvature(fa.decompose(A))
    assert nc.Rperp_norm2 == pytest.approx(loop_normal_curvature_norm2(A), rel=1e-12)


@given(dims, seeds)
def test_normal_curvature_antisymmetric(nm, seed):
    n, m = nm
    A = _pinched(seed, n, m, compute_cn(n))[0]
    nc = fa.normal_curvature(fa.decompose(A))
    assert np.allclose(nc.Rperp_nu1, -np.swapaxes(nc.Rperp_nu1, 0, 1), atol=1e-14)
    assert np.allclose(nc.Rhat, -np.swapaxes(nc.Rhat, 0, 1), atol=1e-14)


# ----------------------------------------------------------- reaction terms


def test_reaction_identity_matches_index_loops():
    n, m, c0 = 5, 3, 9 / 35
    A = _pinched(7, n, m, c0)[0]
    lhs, rhs = fa.reaction_identity_f(A, c0)
    oracle = loop_reaction_lhs(A, c0)
    assert lhs == pytest.approx(oracle, rel=1e-12, abs=1e-12 * fa.norm2(A, 3) ** 2)
    assert fa.relative_residual(lhs, rhs, fa.norm2(A, 3) ** 2) <= 1e-12


def test_reaction_identity_codimension_one_is_hypersurface_identity(rng):
    W = np.diag([1.0, 1.3, 0.8, 1.1, 0.9])
    c0 = 9 / 35
    lhs, rhs = fa.reaction_identity_f(W[..., None], c0)
    d = fa.decompose(W[..., None], c0)
    # c0 H^2 |A|^2 - |A|^4 = |A|^2 f
    assert lhs == pytest.approx(d.A2 * d.f, rel=1e-13)
    assert rhs == pytest.approx(lhs, rel=1e-12)


def test_reaction_identity_rejects_small_c0():
    with pytest.raises(InvalidPinchingConstant):
        fa.reaction_identity_f(np.eye(3)[..., None], 1 / 3)


@given(dims, seeds)
def test_reaction_identity_holds(nm, seed):
    n, m = nm
    c0 = compute_cn(n)
    A = _pinched(seed, n, m, c0, 4)
    lhs, rhs = fa.reaction_identity_f(A, c0)
    assert np.all(fa.relative_residual(lhs, rhs, fa.norm2(A, 3) ** 2) <= 1e-12)


@given(dims, seeds)
def test_reaction_remainder_nonnegative_up_to_four_thirds_over_n(nm, seed):
    n, m = nm
    c0 = 4 / (3 * n)
    A = _pinched(seed, n, m, c0, 8)
    assert np.all(fa.reaction_nonnegativity_check(A, c0))


def test_reaction_nonnegativity_on_sphere_is_equality():
    # f^2/(n c0 - 1) = n^2 (n c0 - 1) absorbs the whole reaction term on a sphere
    W = np.eye(4)[..., None]
    assert fa.reaction_nonnegativity_check(W, 1 / 3)
    assert fa.reaction_remainder(W, 1 / 3) == pytest.approx(0.0, abs=1e-13)
    assert fa.reaction_raw(W, 1 / 3) == pytest.approx(4**3 / 3 - 16, rel=1e-14)


def test_reaction_nonnegativity_preconditions():
    W = np.diag([1.0, 0.0, 0.0])[..., None]
    with pytest.raises(PreconditionViolated):
        fa.reaction_nonnegativity_check(W, 0.4)  # f < 0
    with pytest.raises(PreconditionViolated):
        fa.reaction_nonnegativity_check(np.eye(3)[..., None], 0.5)  # c0 > 4/(3n)


def _witness(n, c0, a=1.0, b=0.05):
    """mring = a diag(1,-1,0..), Ahat_12 = b nu_2: r2 = 0, r3 = 2 b^4, f > 0."""
    A = np.zeros((n, n, 2))
    A[..., 0] = np.eye(n)
    A[0, 0, 0] += a * 0.05
    A[1, 1, 0] -= a * 0.05
    A[0, 1, 1] = A[1, 0, 1] = b
    return A


def test_reaction_remainder_negative_above_four_thirds_over_n():
    n = 5
    c0 = 1.02 * 4 / (3 * n)
    A = _witness(n, c0, a=1.0, b=0.01)
    d = fa.decompose(A, c0)
    assert d.f > 0
    assert fa.reaction_remainder(A, c0) < 0


def test_adversarial_search_finds_violation_above_threshold():
    res = fa.find_reaction_violation(4, 1.05 * 4 / 12, seed=0)
    assert res is not None
    assert res.remainder < 0 and res.f >= 0


def test_adversarial_search_finds_nothing_at_threshold():
    assert fa.find_reaction_violation(3, 4 / 9, seed=0, restarts=4) is None


# --------------------------------------------------------- AB inequalities


def test_ab_r1_zero_gradient():
    r1, _, _ = fa.ab_basic_inequalities(np.eye(3)[..., None], np.zeros((3, 3, 3, 1)))
    assert r1 == 0.0


def test_ab_r2_r3_zero_without_planarity_part(rng):
    G = sampling.sample_codazzi(rng, 3, 1, 1)[0]
    _, r2, r3 = fa.ab_basic_inequalities(np.diag([1.0, 2.0, 0.5])[..., None], G)
    assert r2 == pytest.approx(0.0, abs=1e-14) and r3 == pytest.approx(0.0, abs=1e-14)


def test_ab_rejects_non_codazzi(rng):
    G = rng.standard_normal((3, 3, 3, 1))
    with pytest.raises(CodazziViolation):
        fa.ab_basic_inequalities(np.eye(3)[..., None], G)


@given(dims, seeds)
def test_ab_inequalities_nonnegative(nm, seed):
    n, m = nm
    rng = np.random.default_rng(seed)
    A = sampling.sample_sff(rng, n, m, 8)
    A[..., 0] += 0.5 * np.eye(n)
    G = sampling.sample_codazzi(rng, n, m, 8)
    r1, r2, r3 = fa.ab_basic_inequalities(A, G)
    tol = fa.inequality_tol(A, G)
    assert np.all(r1 >= -tol) and np.all(r2 >= -tol) and np.all(r3 >= -tol)


# ------------------------------------------------------ planarity reaction


def test_planarity_reaction_zero_without_planarity_part():
    W = np.diag([1.0, 1.1, 0.9])[..., None]
    lhs, rhs = fa.planarity_reaction_identity(W, 0.4)
    assert lhs == pytest.approx(0.0, abs=1e-14) and rhs == pytest.approx(0.0, abs=1e-14)


def test_planarity_reaction_identity_example():
    n, m = 6, 2
    c0 = compute_cn(n) - 0.01
    A = _pinched(3, n, m, c0)[0]
    lhs, rhs = fa.planarity_reaction_identity(A, c0)
    d = fa.decompose(A, c0)
    assert fa.relative_residual(lhs, rhs, (1 + d.u) * d.A2**2) <= 1e-12


def test_planarity_reaction_needs_strict_pinching():
    with pytest.raises(PinchingViolated):
        fa.planarity_reaction_identity(np.diag([1.0, 0.0, 0.0])[..., None], 0.5)


@given(dims, seeds)
def test_planarity_reaction_nonnegative_at_cn(nm, seed):
    n, m = nm
    c0 = compute_cn(n)
    A = _pinched(seed, n, m, c0, 8)
    d = fa.decompose(A, c0)
    lhs, _ = fa.planarity_reaction_identity(A, c0)
    assert np.all(lhs >= -(1 + d.u) * fa.inequality_tol(A))


# ------------------------------------------------------------- gradients


def test_gradient_reconstruction_and_normal_orthogonality():
    n, m = 4, 3
    A = _pinched(11, n, m, compute_cn(n))[0]
    G = _codazzi(11, n, m)[0]
    d = fa.decompose(A)
    gd = fa.grad_derived(d, G)
    scale = math.sqrt(fa.norm2(G, 4))
    assert fa.gradient_reconstruction_residual(d, gd, G) <= 1e-13 * scale
    assert np.abs(gd.gradNu1 @ d.nu1).max() <= 1e-13 * scale
    # <grad Ahat, nu1> = -<Ahat, grad nu1>
    alt = -np.einsum("ija,ka->kij", d.Ahat, gd.gradNu1)
    assert np.allclose(gd.gradAhat_nu1, alt, atol=1e-13 * scale)


def test_gradient_identities_vanish_for_zero_gradient():
    n, m = 4, 2
    c0 = compute_cn(n)
    A = _pinched(2, n, m, c0)[0]
    gi = fa.planarity_gradient_identities(A, np.zeros((n, n, n, m)), c0)
    for v in (gi.gradAhat_lhs, gi.gradAhat_rhs, gi.ugrad_lhs, gi.ugrad_rhs, gi.kato_residual):
        assert v == pytest.approx(0.0, abs=1e-30)


def test_gradient_identities_example():
    n, m = 5, 2
    c0 = compute_cn(n)
    A = _pinched(5, n, m, c0)[0]
    G = _codazzi(5, n, m)[0]
    gi = fa.planarity_gradient_identities(A, G, c0)
    scale = fa.norm2(A, 3) * fa.norm2(G, 4)
    assert fa.relative_residual(gi.gradAhat_lhs, gi.gradAhat_rhs, scale) <= 1e-12
    assert fa.relative_residual(gi.ugrad_lhs, gi.ugrad_rhs, (1 + gi.u) * scale) <= 1e-12


@given(dims, seeds)
def test_gradient_identities_and_kato_residual(nm, seed):
    n, m = nm
    c0 = compute_cn(n)
    A = _pinched(seed, n, m, c0, 4)
    G = _codazzi(seed, n, m, 4)
    gi = fa.planarity_gradient_identities(A, G, c0)
    scale = fa.norm2(A, 3) * fa.norm2(G, 4)
    assert np.all(fa.relative_residual(gi.gradAhat_lhs, gi.gradAhat_rhs, scale) <= 1e-12)
    assert np.all(fa.relative_residual(gi.ugrad_lhs, gi.ugrad_rhs, (1 + gi.u) * scale) <= 1e-12)
    assert np.all(gi.kato_residual >= -fa.inequality_tol(np.zeros_like(A), G))


def test_gradient_bound_zero_gradient():
    n, m = 4, 2
    c0 = compute_cn(n)
    A = _pinched(9, n, m, c0)[0]
    assert fa.planarity_gradient_bound(A, np.zeros((n, n, n, m)), c0) == 0.0


@pytest.mark.parametrize("n", range(2, 31))
def test_gradient_bound_coefficients_nonnegative_at_cn(n):
    coeffs = fa.gradient_bound_coefficients(n, compute_cn(n), 1.0, 0.5, 1.0)
    assert all(v >= -1e-12 for v in coeffs.values()), coeffs


@pytest.mark.parametrize("n", range(2, 9))
def test_gradient_bound_coefficient_negative_above_cn(n):
    coeffs = fa.gradient_bound_coefficients(n, 1.05 * compute_cn(n), 1.0, 0.5, 1.0)
    assert min(coeffs.values()) < 0


@given(dims, seeds)
def test_gradient_bound_chain(nm, seed):
    n, m = nm
    c0 = compute_cn(n)
    A = _pinched(seed, n, m, c0, 4)
    G = _codazzi(seed, n, m, 4)
    ch = fa.gradient_bound_chain(A, G, c0)
    d = fa.decompose(A, c0)
    tol = (1 + d.u) * fa.inequality_tol(A, G)
    assert np.all(np.abs(ch.bookkeeping_residual) <= tol)
    assert np.all(ch.gradAhat2 - ch.lb_gradAhat >= -tol)
    assert np.all(ch.ugrad - ch.lb_ugrad >= -tol)
    assert np.all(ch.ub_cross - ch.cross >= -tol)
    assert np.all(ch.ub_cross_kato - ch.ub_cross >= -tol)
    assert np.all(ch.residual >= -tol)


# -------------------------------------------------- codimension-one bounds


def test_commutator_identity_zero_gradient():
    lhs, rhs = fa.commutator_identity(np.eye(3), np.zeros((3, 3, 3)))
    assert lhs == 0.0 and rhs == 0.0


def test_commutator_identity_umbilic(rng):
    G = sampling.sample_codazzi(rng, 4, 1, 1)[0, ..., 0]
    lhs, rhs = fa.commutator_identity(np.eye(4), G)
    assert fa.relative_residual(lhs, rhs, fa.norm2(G, 3)) <= 1e-13


def test_commutator_tensor_norm_matches_materialized(rng):
    W = sampling.sample_sff(rng, 3, 1, 1)[0, ..., 0]
    G = sampling.sample_codazzi(rng, 3, 1, 1)[0, ..., 0]
    T = np.einsum("ij,kpq->ijkpq", W, G) - np.einsum("ijk,pq->ijkpq", G, W)
    _, _, T2, _ = fa.commutator_terms(W, G)
    assert T2 == pytest.approx(np.sum(T**2), rel=1e-13)


def test_commutator_identity_zero_sff():
    with pytest.raises(ZeroSff):
        fa.commutator_identity(np.zeros((3, 3)), np.zeros((3, 3, 3)))


@given(st.integers(2, 8), seeds)
def test_commutator_identity_holds(n, seed):
    rng = np.random.default_rng(seed)
    W = sampling.sample_sff(rng, n, 1, 8)[..., 0]
    G = sampling.sample_codazzi(rng, n, 1, 8)[..., 0]
    lhs, rhs = fa.commutator_identity(W, G)
    assert np.all(fa.relative_residual(lhs, rhs, fa.norm2(G, 3)) <= 1e-12)


def test_commutator_bound_extremal_example():
    # lambda_1 = -eps0 H exactly, gradient concentrated on grad_n A_nn
    n, eps0 = 3, 0.2
    lam = np.array([-0.4, 0.8, 1.6])
    H = lam.sum()
    eps0 = -lam[0] / H
    G = np.zeros((n, n, n))
    G[n - 1, n - 1, n - 1] = 1.0
    cb = fa.commutator_lower_bound(np.diag(lam), G, eps0)
    assert cb.lhs > cb.rhs
    assert cb.claim_residual >= 0
    assert cb.lambda_n_residual >= 0


def test_commutator_bound_zero_gradient():
    cb = fa.commutator_lower_bound(np.diag([-0.5, 1.0, 2.0]), np.zeros((3, 3, 3)), 0.1)
    assert cb.lhs == 0.0 and cb.rhs == 0.0


def test_commutator_bound_convex_point():
    with pytest.raises(ConvexPoint):
        fa.commutator_lower_bound(np.diag([0.1, 1.0, 2.0]), np.zeros((3, 3, 3)), 0.1)


def test_commutator_bound_is_frame_invariant(rng):
    W = sampling.sample_nonconvex_shape(rng, 4, 1)[0]
    G = sampling.sample_codazzi(rng, 4, 1, 1)[0, ..., 0]
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    W2 = Q.T @ W @ Q
    G2 = np.einsum("ak,bi,cj,abc->kij", Q, Q, Q, G)
    a = fa.commutator_lower_bound(W, G, 0.01)
    b = fa.commutator_lower_bound(W2, G2, 0.01)
    assert b.claim_residual == pytest.approx(a.claim_residual, rel=1e-10)
    assert b.lhs == pytest.approx(a.lhs, rel=1e-10)


@given(st.integers(2, 6), seeds)
def test_commutator_lower_bound_holds(n, seed):
    rng = np.random.default_rng(seed)
    W = sampling.sample_nonconvex_shape(rng, n, 8)
    G = sampling.sample_codazzi(rng, n, 1, 8)[..., 0]
    lam = np.linalg.eigvalsh(W)
    eps0 = -lam[:, 0] / lam.sum(axis=1)
    cb = fa.commutator_lower_bound(W, G, eps0)
    tol = fa.inequality_tol(W, G[..., None])
    assert np.all(cb.lhs - cb.rhs >= -tol)
    assert np.all(cb.claim_residual >= -fa.inequality_tol(W, G[..., None], 6))
    assert np.all(cb.lambda_n_residual >= -1e-12)


def test_simons_commutator_umbilic_vanishes():
    C, C2 = fa.simons_commutator(2.5 * np.eye(3))
    assert np.all(C == 0) and C2 == 0


def test_simons_example_diag():
    W = np.diag([-1.0, 2.0, 2.0])
    _, C2 = fa.simons_commutator(W)
    assert C2 == pytest.approx(144.0, rel=1e-14)
    assert fa.simons_norm2_eigen(W) == pytest.approx(144.0, rel=1e-14)
    L = math.sqrt(9.0) / 3.0
    C2b, rhs = fa.simons_lower_bound(W, 1 / 3, L)
    assert C2b >= rhs
    assert rhs == pytest.approx((1 / 9) / (L**2 * 81) * 9 * 81)


def test_simons_direct_contraction_matches_loops(rng):
    W = sampling.sample_sff(rng, 3, 1, 1)[0, ..., 0]
    W2 = W @ W
    total = sum(
        (W[i, j] * W2[k, l] - W2[i, j] * W[k, l]) ** 2
        for i, j, k, l in itertools.product(range(3), repeat=4)
    )
    assert fa.simons_commutator(W)[1] == pytest.approx(total, rel=1e-13)


@given(st.integers(2, 8), seeds)
def test_simons_eigen_formula_and_bound(n, seed):
    rng = np.random.default_rng(seed)
    W = sampling.sample_nonconvex_shape(rng, n, 8)
    _, C2 = fa.simons_commutator(W)
    assert np.all(fa.relative_residual(C2, fa.simons_norm2_eigen(W), fa.norm2(W, 2) ** 3) <= 1e-12)
    lam = np.linalg.eigvalsh(W)
    H = lam.sum(axis=1)
    C2b, rhs = fa.simons_lower_bound(W, -lam[:, 0] / H, np.sqrt(fa.norm2(W, 2)) / H)
    assert np.all(C2b - rhs >= -fa.inequality_tol(W, None, 6))


def test_shape_matrix_orientation():
    W = fa.shape_from_sff(-np.eye(3)[..., None])
    assert np.trace(W) == 3.0


def test_reaction_on_cylinder_closed_form():
    # S^4(1) x R: |A|^2 = 4, H = 4, f = 9/35 * 16 - 4 = 4/35
    W = np.diag([1.0, 1.0, 1.0, 1.0, 0.0])[..., None]
    lhs, rhs = fa.reaction_identity_f(W, 9 / 35)
    assert lhs == pytest.approx(4 * 4 / 35, rel=1e-13)
    assert rhs == pytest.approx(lhs, rel=1e-13)
