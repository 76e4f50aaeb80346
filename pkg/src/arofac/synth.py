"""Synthetic low-rank instances and evaluation metrics.

The generative model: unit vectors u_i, v_i uniform on their spheres, slice
coefficients lambda_ik standard normal, slice k = sum_i lambda_ik u_i v_i^T,
plus optional entrywise Gaussian noise whose scale (standard deviation) is
eps. The mode-3 ground-truth component of factor i is its normalized slice
profile lambda_i/||lambda_i|| with weight ||lambda_i||.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ArofacError, InputError
from .pipeline import Arofac2Config, arofac2
from .tensor import Factor
from .validation import check_seed


@dataclass
class SynthSpec:
    n1: int
    n2: int
    n3: int
    r: int
    eps: float = 0.0
    seed: int = 0

    def validate(self):
        for name in ("n1", "n2", "n3"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        if not 1 <= self.r <= min(self.n1, self.n2, self.n3):
            raise InputError(
                f"r must lie in [1, min(n1,n2,n3)] = [1, "
                f"{min(self.n1, self.n2, self.n3)}], got {self.r}"
            )
        if self.eps < 0:
            raise InputError(f"eps must be >= 0, got {self.eps}")
        check_seed(self.seed)
        return self


@dataclass
class GroundTruth:
    """True factors plus the raw slice-coefficient matrix lam (r x n3)."""

    factors: list
    lam: np.ndarray


def gen_synthetic(spec: SynthSpec):
    """Draw one tensor instance; deterministic per spec.seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    U = rng.standard_normal((spec.n1, spec.r))
    U = U / np.linalg.norm(U, axis=0)
    V = rng.standard_normal((spec.n2, spec.r))
    V = V / np.linalg.norm(V, axis=0)
    lam = rng.standard_normal((spec.r, spec.n3))
    A = np.einsum("ir,jr,rk->ijk", U, V, lam)
    if spec.eps > 0:
        A = A + rng.normal(0.0, spec.eps, size=A.shape)
    factors = []
    for i in range(spec.r):
        nrm = np.linalg.norm(lam[i])
        w = lam[i] / nrm if nrm > 0 else np.zeros(spec.n3)
        factors.append(Factor(u=U[:, i].copy(), v=V[:, i].copy(), w=w,
                              weight=float(nrm)))
    return A, GroundTruth(factors=factors, lam=lam)


def _abs_pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x = x - x.mean()
    y = y - y.mean()
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return 0.0
    return abs(float(x @ y)) / (nx * ny)


def match_components(est, truth):
    """Correlation-based matching of estimated factors to true factors.

    Entry (i, j) of the returned matrix is the absolute Pearson correlation
    between estimated factor i and true factor j, averaged over the three
    modes. Matching is greedy: repeatedly take the largest remaining entry
    and strike its row and column. Returns (corr_matrix, matching,
    min_matched_corr) where matching lists (est_index, true_index) pairs;
    when counts differ the extra factors stay unmatched.
    """
    if not est.factors:
        raise InputError("cannot match an empty decomposition")
    tf = truth.factors
    if not tf:
        raise InputError("cannot match against an empty ground truth")
    C = np.zeros((len(est.factors), len(tf)))
    for i, f in enumerate(est.factors):
        for j, g in enumerate(tf):
            C[i, j] = (
                _abs_pearson(f.u, g.u)
                + _abs_pearson(f.v, g.v)
                + _abs_pearson(f.w, g.w)
            ) / 3.0
    W = C.copy()
    matching = []
    for _ in range(min(C.shape)):
        i, j = np.unravel_index(np.argmax(W), W.shape)
        matching.append((int(i), int(j)))
        W[i, :] = -np.inf
        W[:, j] = -np.inf
    min_matched = min(C[i, j] for i, j in matching)
    return C, matching, float(min_matched)


def noise_sweep(base: SynthSpec, eps_grid, n_seeds, cfg=None):
    """Rank-detection accuracy across noise levels.

    One row per (eps, seed) cell with keys eps, seed, detected_rank,
    min_matched_corr, rel_error. A failed cell keeps its row with the result
    fields absent (None) so a single bad instance cannot abort the sweep.
    """
    eps_grid = list(eps_grid)
    if not eps_grid:
        raise InputError("eps_grid must be nonempty")
    if n_seeds < 1:
        raise InputError(f"n_seeds must be >= 1, got {n_seeds}")
    cfg = cfg or Arofac2Config()
    rows = []
    for eps in eps_grid:
        for s in range(n_seeds):
            spec = SynthSpec(base.n1, base.n2, base.n3, base.r,
                             eps=float(eps), seed=base.seed + s)
            A, truth = gen_synthetic(spec)
            row = {"eps": float(eps), "seed": spec.seed,
                   "detected_rank": None, "min_matched_corr": None,
                   "rel_error": None}
            try:
                d = arofac2(A, cfg, seed=spec.seed)
                _, _, mc = match_components(d, truth)
                row["detected_rank"] = d.rank
                row["min_matched_corr"] = mc
                row["rel_error"] = d.rel_error
            except ArofacError:
                pass
            rows.append(row)
    return rows
