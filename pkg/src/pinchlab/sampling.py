"""Random pointwise data for the verification suites.

Generators take a ``numpy.random.Generator`` and return batched arrays with
the shapes used by :mod:`pinchlab.frame_algebra`.
"""

from __future__ import annotations

import numpy as np

from .frame_algebra import sym3


def sample_sff(rng, n, m, size):
    """I.i.d. normal entries, symmetrized in the two tangent slots."""
    a = rng.standard_normal((size, n, n, m))
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def sample_codazzi(rng, n, m, size):
    """Gradient tensors fully symmetric in (k, i, j), with normal entries."""
    return sym3(rng.standard_normal((size, n, n, n, m)))


def sample_pinched_sff(rng, n, m, c0, size, spread=1.5, max_rounds=100):
    """Strictly ``c0``-pinched second fundamental forms (``f > 0``).

    Each sample is ``mu Id nu + tau S`` with ``nu`` a random unit normal and
    ``S`` a normal symmetric perturbation.  The perturbation size is drawn up
    to ``spread`` times the radius that keeps a typical sample pinched, so the
    accepted set reaches the boundary ``f = 0`` from inside.
    """
    tau_max = spread * np.sqrt(2 * (n * c0 - 1) / ((n + 1) * m))
    out = []
    have = 0
    for _ in range(max_rounds):
        k = max(2 * (size - have), 64)
        nu = rng.standard_normal((k, m))
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        mu = np.exp(rng.uniform(-1.0, 1.0, k))
        tau = tau_max * rng.uniform(0.0, 1.0, k) ** 0.5
        S = sample_sff(rng, n, m, k)
        A = mu[:, None, None, None] * (
            np.eye(n)[None, :, :, None] * nu[:, None, None, :] + tau[:, None, None, None] * S
        )
        H = np.einsum("siia->sa", A)
        f = c0 * np.sum(H**2, axis=1) - np.sum(A**2, axis=(1, 2, 3))
        A = A[f > 0]
        out.append(A)
        have += len(A)
        if have >= size:
            break
    A = np.concatenate(out)[:size]
    if len(A) < size:
        raise RuntimeError("rejection sampler failed to produce enough pinched samples")
    return A


def sample_nonconvex_shape(rng, n, size, max_rounds=100):
    """Shape matrices with ``H > 0`` and ``lambda_1 < 0``."""
    out = []
    have = 0
    for _ in range(max_rounds):
        k = max(2 * (size - have), 64)
        W = sample_sff(rng, n, 1, k)[..., 0] + rng.uniform(0.0, 1.5, k)[:, None, None] * np.eye(n)
        lam = np.linalg.eigvalsh(W)
        ok = (lam.sum(axis=1) > 1e-3 * np.abs(lam).max(axis=1)) & (lam[:, 0] < 0)
        out.append(W[ok])
        have += ok.sum()
        if have >= size:
            break
    W = np.concatenate(out)[:size]
    if len(W) < size:
        raise RuntimeError("rejection sampler failed to produce enough non-convex samples")
    return W
