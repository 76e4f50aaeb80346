"""Dense degree-3 tensors: slicing, unfolding, rank-one assembly, error metrics.

Tensors are plain float64 ndarrays of shape (n1, n2, n3), entry (i, j, k)
at ``A[i, j, k]``. Indices are 0-based throughout the Python API; mode labels
follow the usual 1/2/3 naming.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError
from .validation import check_tensor3, check_vector


@dataclass
class Factor:
    """One rank-one component: unit vectors per mode plus a signed weight."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    weight: float = 1.0


@dataclass
class Decomposition:
    """A rank-r CP decomposition with its fit against the source tensor.

    ``diagnostics`` carries optional per-stage pipeline details (candidate
    counts, cluster inertias, orphans); it is None for decompositions built
    by hand.
    """

    rank: int
    factors: list = field(default_factory=list)
    rel_error: float = 0.0
    diagnostics: dict | None = None


def slice3(A, k):
    """Return the n1 x n2 matrix obtained by fixing the third index to k."""
    A = check_tensor3(A)
    n3 = A.shape[2]
    if not 0 <= k < n3:
        raise InputError(f"slice index {k} out of range for n3={n3}")
    return A[:, :, k].copy()


def outer3(u, v, w):
    """Outer product tensor with entry (i, j, k) = u_i * v_j * w_k."""
    u = check_vector(u, "u")
    v = check_vector(v, "v")
    w = check_vector(w, "w")
    return np.einsum("i,j,k->ijk", u, v, w)


def reconstruct(d: Decomposition, dims):
    """Sum of weight * outer3(u, v, w) over the decomposition's factors."""
    n1, n2, n3 = dims
    A = np.zeros((n1, n2, n3))
    for f in d.factors:
        if len(f.u) != n1 or len(f.v) != n2 or len(f.w) != n3:
            raise InputError(
                f"factor dims ({len(f.u)},{len(f.v)},{len(f.w)}) do not match {tuple(dims)}"
            )
        A += f.weight * np.einsum("i,j,k->ijk", f.u, f.v, f.w)
    return A


def rel_error(A, B):
    """Relative Frobenius error ||A - B||_F / ||A||_F."""
    A = check_tensor3(A, name="reference tensor")
    B = check_tensor3(B, name="comparison tensor")
    if A.shape != B.shape:
        raise InputError(f"dimension mismatch: {A.shape} vs {B.shape}")
    na = np.linalg.norm(A)
    if na == 0:
        raise InputError("relative error undefined for a zero reference tensor")
    return float(np.linalg.norm(A - B) / na)


def permute_modes(A, perm):
    """Rearrange modes; ``perm`` lists source modes (1-based), e.g. (3, 2, 1).

    Output mode m holds what input mode perm[m-1] held, so
    permute_modes(outer3(u, v, w), (3, 2, 1)) == outer3(w, v, u).
    """
    A = check_tensor3(A)
    if sorted(perm) != [1, 2, 3]:
        raise InputError(f"perm must be a permutation of (1, 2, 3), got {perm}")
    return np.transpose(A, tuple(p - 1 for p in perm)).copy()


def unfold(A, mode):
    """Mode-m unfolding: rows indexed by mode m, columns by the other two
    modes in ascending order with the second of them varying fastest.

    The mode-3 unfolding's rows are therefore the vectorized 3-slices.
    """
    A = check_tensor3(A)
    n1, n2, n3 = A.shape
    if mode == 1:
        return A.reshape(n1, n2 * n3).copy()
    if mode == 2:
        return np.transpose(A, (1, 0, 2)).reshape(n2, n1 * n3).copy()
    if mode == 3:
        return np.transpose(A, (2, 0, 1)).reshape(n3, n1 * n2).copy()
    raise InputError(f"mode must be 1, 2 or 3, got {mode}")


def refold(M, mode, dims):
    """Inverse of :func:`unfold` for the given target dims."""
    n1, n2, n3 = dims
    M = np.asarray(M, dtype=np.float64)
    if mode == 1:
        return M.reshape(n1, n2, n3).copy()
    if mode == 2:
        return np.transpose(M.reshape(n2, n1, n3), (1, 0, 2)).copy()
    if mode == 3:
        return np.transpose(M.reshape(n3, n1, n2), (1, 2, 0)).copy()
    raise InputError(f"mode must be 1, 2 or 3, got {mode}")
