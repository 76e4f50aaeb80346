"""Mean-shift clustering over candidate component vectors.

Candidates arrive with an arbitrary sign (a rank-one pair survives flipping
both halves), so vectors are canonicalized before clustering: unit norm with
the largest-magnitude entry forced positive. Cluster count falls out of the
number of density modes; no rank is supplied up front.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .validation import check_matrix, check_vector


@dataclass
class ClusterResult:
    """Modes of the candidate cloud.

    inertia holds each cluster's mean angular deviation (radians) between
    member points and the center; empty clusters score 0.
    """

    centers: np.ndarray
    labels: np.ndarray
    inertia: np.ndarray

    @property
    def count(self):
        return len(self.centers)


def canonicalize(x):
    """Scale to unit norm and fix the sign ambiguity.

    The representative has its largest-magnitude entry positive; ties go to
    the lowest index (argmax order).
    """
    x = check_vector(x)
    n = np.linalg.norm(x)
    if n == 0:
        raise InputError("cannot canonicalize a zero vector")
    x = x / n
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return x


def estimate_bandwidth(points):
    """Kernel bandwidth from local spacing: half the median nearest-neighbor
    distance, clamped to [1e-3, 1.0].

    Using the first neighbor (rather than a sqrt(N)-th neighbor) keeps the
    estimate tied to intra-cluster spread even when individual clusters hold
    few points, which happens at high noise where basins fragment.
    """
    P = check_matrix(points)
    if len(P) < 2:
        raise InputError("bandwidth estimation needs at least 2 points")
    D = np.sqrt(np.maximum(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1), 0.0))
    np.fill_diagonal(D, np.inf)
    h = 0.5 * float(np.median(D.min(axis=1)))
    return min(max(h, 1e-3), 1.0)


def assign_nearest(points, centers, sign_invariant=False):
    """Nearest-center labels and distances.

    With sign_invariant=True the distance to each center is taken as the
    smaller of the distances to +-center, which makes the assignment immune
    to canonicalization flips between independently produced point sets.
    """
    P = check_matrix(points)
    C = check_matrix(centers)
    d2 = ((P[:, None, :] - C[None, :, :]) ** 2).sum(-1)
    if sign_invariant:
        d2 = np.minimum(d2, ((P[:, None, :] + C[None, :, :]) ** 2).sum(-1))
    labels = d2.argmin(axis=1)
    dist = np.sqrt(np.maximum(d2[np.arange(len(P)), labels], 0.0))
    return labels, dist


def mean_shift(points, h, merge_tol=None, max_iters=300, shift_tol=1e-6):
    """Gaussian-kernel mean shift with automatic mode counting.

    Every point ascends the density estimated from the (fixed) input cloud
    until its shift drops below shift_tol or max_iters passes. Converged
    trajectories are deduplicated: modes are visited in lexicographic order
    and any mode within merge_tol of an accepted center is folded into it.
    Default merge_tol is h/2. Centers are re-normalized to unit norm and
    each input point is labeled by its nearest center.
    """
    P = check_matrix(points)
    if len(P) == 0:
        raise InputError("mean_shift needs a nonempty point set")
    if h <= 0:
        raise InputError(f"bandwidth must be positive, got {h}")
    if merge_tol is None:
        merge_tol = h / 2.0
    X = P.copy()
    active = np.arange(len(P))
    inv = -1.0 / (2.0 * h * h)
    for _ in range(max_iters):
        if not len(active):
            break
        D2 = ((X[active][:, None, :] - P[None, :, :]) ** 2).sum(-1)
        W = np.exp(inv * D2)
        Xn = (W @ P) / W.sum(axis=1, keepdims=True)
        shift = np.linalg.norm(Xn - X[active], axis=1)
        X[active] = Xn
        active = active[shift >= shift_tol]

    order = np.lexsort(X.T[::-1])
    centers = []
    for i in order:
        if np.linalg.norm(X[i]) == 0:
            continue
        for c in centers:
            if np.linalg.norm(X[i] - c) < merge_tol:
                break
        else:
            centers.append(X[i])
    if not centers:
        raise InputError("all trajectories collapsed to zero; cannot form centers")
    C = np.array([c / np.linalg.norm(c) for c in centers])
    labels, _ = assign_nearest(P, C)
    inertia = np.zeros(len(C))
    for j in range(len(C)):
        members = P[labels == j]
        if len(members):
            cosang = np.clip(np.abs(members @ C[j]), 0.0, 1.0)
            inertia[j] = float(np.mean(np.arccos(cosang)))
    return ClusterResult(centers=C, labels=labels, inertia=inertia)
