"""Approximate span of the vectorized 3-slices: basis, projection, sampling.

The span representation V is the search space for the rank-one iteration:
a d-dimensional subspace of n1 x n2 matrices spanned by the top left-singular
vectors of the slice stack.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, NumericalError
from .validation import check_matrix


@dataclass
class SpanRep:
    """Orthonormal basis of the slice span plus the stack's singular values.

    basis has shape (n1*n2, d) with orthonormal columns, each a vectorized
    matrix; spectrum holds the d leading singular values, descending.
    """

    shape: tuple
    basis: np.ndarray
    spectrum: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]


def build_span(slices, target_dim=None, energy_tol=1e-3):
    """Build a SpanRep from a list of equally shaped matrices.

    The subspace dimension d is target_dim when given. Otherwise a spectral
    gap (consecutive singular-value ratio below 0.1) truncates the basis at
    the gap, and failing that, d is the smallest count whose cumulative
    squared spectrum reaches (1 - energy_tol) of the total.
    """
    if not slices:
        raise InputError("build_span needs at least one slice")
    mats = [check_matrix(S, f"slice {i}") for i, S in enumerate(slices)]
    shape = mats[0].shape
    for i, S in enumerate(mats):
        if S.shape != shape:
            raise InputError(f"slice {i} has shape {S.shape}, expected {shape}")
    if not 0 < energy_tol < 1:
        raise InputError(f"energy_tol must lie in (0, 1), got {energy_tol}")
    X = np.stack([S.ravel() for S in mats], axis=1)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    max_d = len(s)
    if target_dim is not None:
        if not 1 <= target_dim <= max_d:
            raise InputError(f"target_dim must lie in [1, {max_d}], got {target_dim}")
        d = int(target_dim)
    else:
        d = max_d
        for j in range(1, max_d):
            if s[j - 1] == 0 or s[j] / s[j - 1] < 0.1:
                d = j
                break
        else:
            sq = s * s
            cum = np.cumsum(sq)
            d = int(np.searchsorted(cum, (1.0 - energy_tol) * cum[-1]) + 1)
    return SpanRep(shape=shape, basis=U[:, :d].copy(), spectrum=s[:d].copy())


def project(V: SpanRep, M):
    """Orthogonally project M onto the span and rescale to unit Frobenius norm."""
    M = check_matrix(M)
    if M.shape != V.shape:
        raise InputError(f"matrix shape {M.shape} does not match span shape {V.shape}")
    p = V.basis @ (V.basis.T @ M.ravel())
    nrm = np.linalg.norm(p)
    if nrm == 0:
        raise NumericalError("projection onto the span is zero", stage="project")
    return (p / nrm).reshape(V.shape)


def sample(V: SpanRep, rng, weighting: str = "spectrum"):
    """Draw a random unit-norm matrix from the span.

    With the default "spectrum" weighting, coefficients are standard normal
    scaled by the spectrum, matching the empirical distribution of the
    slices inside the span; "uniform" draws isotropically over the span,
    which spreads restarts evenly across weak and strong directions.
    """
    scale = _coeff_scale(V, weighting)
    for _ in range(100):
        c = rng.standard_normal(V.dim)
        m = V.basis @ (c * scale)
        nrm = np.linalg.norm(m)
        if nrm > 0:
            return (m / nrm).reshape(V.shape)
    raise NumericalError("could not draw a nonzero span sample", stage="sample")


def _coeff_scale(V: SpanRep, weighting):
    if weighting == "spectrum":
        return V.spectrum
    if weighting == "uniform":
        return np.ones(V.dim)
    raise InputError(
        f"weighting must be 'spectrum' or 'uniform', got {weighting!r}"
    )
