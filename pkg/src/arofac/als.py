"""Alternating-least-squares PARAFAC at a user-fixed rank.

The comparison baseline: no rank detection, no line search, no compression,
just cyclic exact least-squares updates of the three factor matrices from
seeded random starts, keeping the best of several inits.
"""

from dataclasses import dataclass

import numpy as np

from .cluster import canonicalize
from .exceptions import InputError, NumericalError
from .tensor import Decomposition, Factor, reconstruct, rel_error, unfold
from .validation import check_matrix, check_seed, check_tensor3


@dataclass
class AlsConfig:
    rank: int
    max_sweeps: int = 500
    fit_tol: float = 1e-8
    init_seed: int = 0
    n_inits: int = 5

    def validate(self):
        if self.rank < 1:
            raise InputError(f"rank must be >= 1, got {self.rank}")
        if self.max_sweeps < 1:
            raise InputError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.fit_tol < 0:
            raise InputError(f"fit_tol must be >= 0, got {self.fit_tol}")
        if self.n_inits < 1:
            raise InputError(f"n_inits must be >= 1, got {self.n_inits}")
        check_seed(self.init_seed)
        return self


def khatri_rao(B, C):
    """Column-wise Kronecker product: column l is kron(B[:, l], C[:, l])."""
    B = check_matrix(B)
    C = check_matrix(C)
    if B.shape[1] != C.shape[1]:
        raise InputError(
            f"column counts differ: {B.shape[1]} vs {C.shape[1]}"
        )
    return np.einsum("il,jl->ijl", B, C).reshape(-1, B.shape[1])


def _ls_update(G, R, state):
    """Solve X G = R for X, falling back to a tiny ridge if G is singular."""
    try:
        return np.linalg.solve(G, R.T).T
    except np.linalg.LinAlgError:
        state["ridge_used"] = True
        G = G + 1e-12 * np.eye(len(G))
        return np.linalg.solve(G, R.T).T


def parafac_als(A, cfg: AlsConfig):
    """Fit a fixed-rank CP model by cyclic alternating least squares.

    Each mode update is an exact least-squares solve, so the squared
    residual cannot increase across sweeps; that is checked every sweep.
    Runs cfg.n_inits seeded inits and keeps the lowest final loss. Returned
    factors have unit component vectors, signs fixed by the clustering
    sign convention, and magnitudes absorbed into signed weights, sorted by
    descending |weight|.
    """
    A = check_tensor3(A, min_dim=1)
    cfg.validate()
    n1, n2, n3 = A.shape
    r = cfg.rank
    if r > min(n1, n2, n3):
        raise InputError(
            f"rank {r} exceeds the smallest mode dimension {min(n1, n2, n3)}"
        )
    A1 = unfold(A, 1)
    A2 = unfold(A, 2)
    A3 = unfold(A, 3)

    best = None
    for t in range(cfg.n_inits):
        rng = np.random.default_rng((cfg.init_seed, t))
        U = rng.standard_normal((n1, r))
        V = rng.standard_normal((n2, r))
        W = rng.standard_normal((n3, r))
        state = {"ridge_used": False}
        history = []
        prev = np.inf
        for sweep in range(cfg.max_sweeps):
            U = _ls_update((V.T @ V) * (W.T @ W), A1 @ khatri_rao(V, W), state)
            V = _ls_update((U.T @ U) * (W.T @ W), A2 @ khatri_rao(U, W), state)
            W = _ls_update((U.T @ U) * (V.T @ V), A3 @ khatri_rao(U, V), state)
            resid = A3 - W @ khatri_rao(U, V).T
            loss = float((resid * resid).sum())
            history.append(loss)
            if loss > prev * (1 + 1e-10) + 1e-12:
                raise NumericalError(
                    f"loss increased across a sweep ({prev} -> {loss})",
                    stage="als",
                )
            if np.isfinite(prev) and prev - loss < cfg.fit_tol * max(prev, 1e-300):
                break
            prev = loss
        if best is None or loss < best[0]:
            best = (loss, U, V, W, history, t, state["ridge_used"])

    _, U, V, W, history, init_index, ridge_used = best
    factors = []
    for l in range(r):
        cols = U[:, l], V[:, l], W[:, l]
        if any(np.linalg.norm(c) == 0 for c in cols):
            factors.append(Factor(u=np.zeros(n1), v=np.zeros(n2),
                                  w=np.zeros(n3), weight=0.0))
            continue
        canon = [canonicalize(c) for c in cols]
        weight = 1.0
        for hat, raw in zip(canon, cols):
            weight *= float(hat @ raw)
        factors.append(Factor(u=canon[0], v=canon[1], w=canon[2],
                              weight=weight))
    factors.sort(key=lambda f: abs(f.weight), reverse=True)
    d = Decomposition(
        rank=r,
        factors=factors,
        rel_error=0.0,
        diagnostics={"loss_history": history, "n_sweeps": len(history),
                     "init_index": init_index, "ridge_used": ridge_used},
    )
    d.rel_error = rel_error(A, reconstruct(d, A.shape))
    return d
