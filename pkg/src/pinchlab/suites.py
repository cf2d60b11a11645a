"""Seeded randomized verification suites for the pointwise algebra.

Identity suites report the worst relative residual; inequality suites count
samples whose residual falls below ``-tol`` with the homogeneity-scaled slack
of :func:`frame_algebra.inequality_tol`.  Every violation carries the raw
input so the single failing case can be replayed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import frame_algebra as fa
from . import sampling
from .constants import compute_cn

IDENTITY_RTOL = 1e-10
CHUNK = 2000


@dataclass
class SuiteResult:
    suite: str
    n: int
    m: int
    samples: int = 0
    max_residual: float = 0.0  # identities: max relative residual; inequalities: max violation ratio
    violations: list = field(default_factory=list)
    elapsed: float = 0.0
    kind: str = "identity"

    @property
    def passed(self) -> bool:
        return not self.violations


def _rng(seed, suite, n, m):
    key = [int(seed), sum(ord(c) * 31**i for i, c in enumerate(suite)) % 2**31, n, m]
    return np.random.default_rng(np.random.SeedSequence(key))


def _chunks(total):
    done = 0
    while done < total:
        k = min(CHUNK, total - done)
        yield done, k
        done += k


def _record(res, name, offset, bad, resid, payload, limit=20):
    for i in np.flatnonzero(bad)[: max(0, limit - len(res.violations))]:
        entry = {"operation": name, "n": res.n, "m": res.m, "index": int(offset + i),
                 "residual": float(resid[i])}
        entry.update({k: np.asarray(v)[i].tolist() for k, v in payload.items()})
        res.violations.append(entry)


def _identity(res, name, offset, lhs, rhs, natural, payload, rtol=IDENTITY_RTOL):
    rel = fa.relative_residual(lhs, rhs, natural)
    res.max_residual = max(res.max_residual, float(rel.max()))
    _record(res, name, offset, rel > rtol, rel, payload)


def _inequality(res, name, offset, resid, tol, payload):
    ratio = -resid / tol
    res.max_residual = max(res.max_residual, float(ratio.max()))
    _record(res, name, offset, resid < -tol, resid, payload)


# ------------------------------------------------------------------ identities


def reaction_identity_suite(n, m, samples, seed=0):
    res = SuiteResult("reaction_identity", n, m)
    rng = _rng(seed, res.suite, n, m)
    c0 = compute_cn(n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        lhs, rhs = fa.reaction_identity_f(A, c0)
        _identity(res, res.suite, off, lhs, rhs, fa.norm2(A, 3) ** 2, {"A": A})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def planarity_reaction_suite(n, m, samples, seed=0):
    res = SuiteResult("planarity_reaction_identity", n, m)
    rng = _rng(seed, res.suite, n, m)
    c0 = compute_cn(n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        d = fa.decompose(A, c0)
        lhs, rhs = fa.planarity_reaction_identity(A, c0)
        _identity(res, res.suite, off, lhs, rhs, (1 + d.u) * d.A2**2, {"A": A})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def gradient_identities_suite(n, m, samples, seed=0):
    res = SuiteResult("planarity_gradient_identities", n, m)
    rng = _rng(seed, res.suite, n, m)
    c0 = compute_cn(n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        G = sampling.sample_codazzi(rng, n, m, k)
        gi = fa.planarity_gradient_identities(A, G, c0)
        scale = fa.norm2(A, 3) * fa.norm2(G, 4)
        payload = {"A": A, "G": G}
        _identity(res, "gradAhat_identity", off, gi.gradAhat_lhs, gi.gradAhat_rhs, scale, payload)
        _identity(res, "u_gradient_identity", off, gi.ugrad_lhs, gi.ugrad_rhs,
                  (1 + gi.u) * scale, payload)
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def commutator_identity_suite(n, samples, seed=0):
    res = SuiteResult("commutator_identity", n, 1)
    rng = _rng(seed, res.suite, n, 1)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        W = sampling.sample_sff(rng, n, 1, k)[..., 0]
        G = sampling.sample_codazzi(rng, n, 1, k)[..., 0]
        lhs, rhs = fa.commutator_identity(W, G)
        _identity(res, res.suite, off, lhs, rhs, fa.norm2(G, 3), {"A": W, "G": G})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def simons_identity_suite(n, samples, seed=0):
    res = SuiteResult("simons_eigen_formula", n, 1)
    rng = _rng(seed, res.suite, n, 1)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        W = sampling.sample_sff(rng, n, 1, k)[..., 0]
        _, C2 = fa.simons_commutator(W)
        _identity(res, res.suite, off, C2, fa.simons_norm2_eigen(W), fa.norm2(W, 2) ** 3, {"A": W})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


# ---------------------------------------------------------------- inequalities


def ab_inequalities_suite(n, m, samples, seed=0):
    res = SuiteResult("ab_inequalities", n, m, kind="inequality")
    rng = _rng(seed, res.suite, n, m)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_sff(rng, n, m, k)
        G = sampling.sample_codazzi(rng, n, m, k)
        r1, r2, r3 = fa.ab_basic_inequalities(A, G)
        payload = {"A": A, "G": G}
        _inequality(res, "r1", off, r1, fa.inequality_tol(np.zeros_like(A), G, 4), payload)
        tolA = fa.inequality_tol(A, None, 4)
        _inequality(res, "r2", off, r2, tolA, payload)
        _inequality(res, "r3", off, r3, tolA, payload)
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def reaction_nonnegativity_suite(n, m, samples, seed=0):
    """Reaction remainder at the extreme admissible constant ``c0 = 4/(3n)``."""
    res = SuiteResult("reaction_nonnegativity", n, m, kind="inequality")
    rng = _rng(seed, res.suite, n, m)
    c0 = 4.0 / (3.0 * n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        rem = fa.reaction_remainder(A, c0)
        _inequality(res, res.suite, off, rem, fa.inequality_tol(A, None, 4), {"A": A})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def planarity_reaction_sign_suite(n, m, samples, seed=0):
    """Nonnegativity of the planarity reaction expression at ``c0 = c_n``."""
    res = SuiteResult("planarity_reaction_sign", n, m, kind="inequality")
    rng = _rng(seed, res.suite, n, m)
    c0 = compute_cn(n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        d = fa.decompose(A, c0)
        lhs, _ = fa.planarity_reaction_identity(A, c0)
        _inequality(res, res.suite, off, lhs, (1 + d.u) * fa.inequality_tol(A, None, 4), {"A": A})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def gradient_bound_suite(n, m, samples, seed=0):
    """Kato residual, every link of the gradient estimate chain, and its final bound."""
    res = SuiteResult("planarity_gradient_bound", n, m, kind="inequality")
    rng = _rng(seed, res.suite, n, m)
    c0 = compute_cn(n)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        A = sampling.sample_pinched_sff(rng, n, m, c0, k)
        G = sampling.sample_codazzi(rng, n, m, k)
        d = fa.decompose(A, c0)
        tol = (1 + d.u) * fa.inequality_tol(A, G, 4)
        ch = fa.gradient_bound_chain(A, G, c0)
        gi = fa.planarity_gradient_identities(A, G, c0)
        payload = {"A": A, "G": G}
        _inequality(res, "kato", off, gi.kato_residual, fa.inequality_tol(np.zeros_like(A), G, 4), payload)
        _inequality(res, "gradAhat_lower", off, ch.gradAhat2 - ch.lb_gradAhat, tol, payload)
        _inequality(res, "ugrad_lower", off, ch.ugrad - ch.lb_ugrad, tol, payload)
        _inequality(res, "cross_young", off, ch.ub_cross - ch.cross, tol, payload)
        _inequality(res, "cross_kato", off, ch.ub_cross_kato - ch.ub_cross, tol, payload)
        _inequality(res, "final_bound", off, ch.residual, tol, payload)
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def commutator_bound_suite(n, samples, seed=0):
    """Lower bound, intermediate claim and ``lambda_n >= H/n`` with ``eps0 = -lambda_1/H``."""
    res = SuiteResult("commutator_lower_bound", n, 1, kind="inequality")
    rng = _rng(seed, res.suite, n, 1)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        W = sampling.sample_nonconvex_shape(rng, n, k)
        G = sampling.sample_codazzi(rng, n, 1, k)[..., 0]
        lam = np.linalg.eigvalsh(W)
        eps0 = -lam[:, 0] / lam.sum(axis=1)
        cb = fa.commutator_lower_bound(W, G, eps0)
        tol = fa.inequality_tol(W[..., None], G[..., None], 4)
        payload = {"A": W, "G": G, "eps0": eps0}
        _inequality(res, "lower_bound", off, cb.lhs - cb.rhs, tol, payload)
        _inequality(res, "claim", off, cb.claim_residual,
                    fa.inequality_tol(W[..., None], G[..., None], 6), payload)
        _inequality(res, "lambda_n", off, cb.lambda_n_residual,
                    1e-12 * np.sqrt(fa.norm2(W, 2)), payload)
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


def simons_bound_suite(n, samples, seed=0):
    """``|C|^2 >= alpha |A|^2 H^4`` with the tightest per-sample ``eps_bar`` and ``L``."""
    res = SuiteResult("simons_lower_bound", n, 1, kind="inequality")
    rng = _rng(seed, res.suite, n, 1)
    t = time.perf_counter()
    for off, k in _chunks(samples):
        W = sampling.sample_nonconvex_shape(rng, n, k)
        lam = np.linalg.eigvalsh(W)
        H = lam.sum(axis=1)
        eps_bar = -lam[:, 0] / H
        L = np.sqrt(fa.norm2(W, 2)) / H
        C2, rhs = fa.simons_lower_bound(W, eps_bar, L)
        _inequality(res, res.suite, off, C2 - rhs, fa.inequality_tol(W[..., None], None, 6),
                    {"A": W, "eps_bar": eps_bar, "L": L})
        res.samples += k
    res.elapsed = time.perf_counter() - t
    return res


# ------------------------------------------------------------------- registry

PAIR_SUITES = {
    "reaction_identity": reaction_identity_suite,
    "planarity_reaction_identity": planarity_reaction_suite,
    "planarity_gradient_identities": gradient_identities_suite,
    "ab_inequalities": ab_inequalities_suite,
    "reaction_nonnegativity": reaction_nonnegativity_suite,
    "planarity_reaction_sign": planarity_reaction_sign_suite,
    "planarity_gradient_bound": gradient_bound_suite,
}
CODIM_ONE_SUITES = {
    "commutator_identity": commutator_identity_suite,
    "simons_eigen_formula": simons_identity_suite,
    "commutator_lower_bound": commutator_bound_suite,
    "simons_lower_bound": simons_bound_suite,
}
GROUPS = {
    "identities": ["reaction_identity", "planarity_reaction_identity",
                   "planarity_gradient_identities", "commutator_identity", "simons_eigen_formula"],
    "inequalities": ["ab_inequalities", "reaction_nonnegativity", "planarity_reaction_sign",
                     "planarity_gradient_bound", "commutator_lower_bound", "simons_lower_bound"],
    "appendixA": ["commutator_identity", "commutator_lower_bound"],
    "appendixB": ["reaction_identity", "ab_inequalities", "reaction_nonnegativity",
                  "planarity_reaction_identity", "planarity_reaction_sign",
                  "planarity_gradient_identities", "planarity_gradient_bound"],
    "simons": ["simons_eigen_formula", "simons_lower_bound"],
}
GROUPS["all"] = GROUPS["identities"] + GROUPS["inequalities"]


def resolve(name):
    if name in GROUPS:
        return GROUPS[name]
    if name in PAIR_SUITES or name in CODIM_ONE_SUITES:
        return [name]
    raise KeyError(name)


def run_suite(name, n_values, m_values, samples, seed=0):
    """Run one suite over a dimension grid; codimension-one suites ignore ``m_values``.

    Codimension-one suites draw ``samples * len(m_values)`` per ``n`` so every
    suite sees the same number of samples per ``n``.
    """
    out = []
    if name in PAIR_SUITES:
        for n in n_values:
            for m in m_values:
                out.append(PAIR_SUITES[name](n, m, samples, seed))
    else:
        for n in n_values:
            out.append(CODIM_ONE_SUITES[name](n, samples * len(m_values), seed))
    return out
