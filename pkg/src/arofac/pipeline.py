"""End-to-end rank detection and decomposition.

Two candidate collections feed the pipeline: modes (1,2) on the tensor as
given and, when mode-3 components are wanted, modes (3,2) on the
mode-permuted tensor. Clustering each side gives per-mode centers; pairs are
linked across modes by closeness-weighted voting; triples share the mode-2
cluster index as join key; a final least-squares pass restores magnitudes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cluster import assign_nearest, canonicalize, estimate_bandwidth, mean_shift
from .exceptions import InputError, NumericalError
from .rankone import FindRankOneConfig, collect_candidates
from .tensor import Decomposition, Factor, reconstruct, rel_error
from .validation import check_seed, check_tensor3


@dataclass
class Arofac2Config:
    """Pipeline knobs.

    span_target_dim pins the span dimension when the rank is known from the
    outside; otherwise the span picks its own cut. support_frac sets the
    minimum cluster size as a fraction of collected candidates (with an
    absolute floor of 2); undersupported clusters are treated as spurious
    and excluded from linkage.
    """

    restarts_per_mode: int = 200
    findrankone: FindRankOneConfig = field(default_factory=FindRankOneConfig)
    span_energy_tol: float = 1e-3
    span_target_dim: int = None
    min_vote_share: float = 0.2
    compute_mode3: bool = True
    support_frac: float = 0.01
    span_weighting: str = "spectrum"

    def validate(self):
        if self.restarts_per_mode < 10:
            raise InputError(
                f"restarts_per_mode must be >= 10, got {self.restarts_per_mode}"
            )
        if not 0 < self.min_vote_share < 1:
            raise InputError(
                f"min_vote_share must lie in (0, 1), got {self.min_vote_share}"
            )
        if not 0 <= self.support_frac < 1:
            raise InputError(
                f"support_frac must lie in [0, 1), got {self.support_frac}"
            )
        if self.span_weighting not in ("spectrum", "uniform"):
            raise InputError(
                "span_weighting must be 'spectrum' or 'uniform', "
                f"got {self.span_weighting!r}"
            )
        self.findrankone.validate()
        return self


@dataclass
class VoteMatrix:
    """Closeness-weighted co-occurrence counts between two cluster sets."""

    counts: np.ndarray


def _support_keep(labels, n_centers, floor):
    support = np.bincount(labels, minlength=n_centers)
    return np.where(support >= floor)[0], support


def _vote_and_link(la, da, lb, db, keep_a, keep_b, min_share):
    """Greedy maximum linking on the restricted vote matrix.

    Votes accumulate only between surviving clusters; each candidate pair
    contributes 1/(1 + d_a + d_b). Rows and columns are struck as links are
    taken; a link below min_share of either its row or column total is
    dropped rather than recorded.
    """
    amap = {c: i for i, c in enumerate(keep_a)}
    bmap = {c: i for i, c in enumerate(keep_b)}
    votes = np.zeros((len(keep_a), len(keep_b)))
    for i in range(len(la)):
        if la[i] in amap and lb[i] in bmap:
            votes[amap[la[i]], bmap[lb[i]]] += 1.0 / (1.0 + da[i] + db[i])
    rowtot = votes.sum(axis=1)
    coltot = votes.sum(axis=0)
    W = votes.copy()
    links = []
    dropped = []
    while W.size and W.max() > 0:
        i, j = np.unravel_index(np.argmax(W), W.shape)
        pair = (int(keep_a[i]), int(keep_b[j]))
        if votes[i, j] >= min_share * rowtot[i] and votes[i, j] >= min_share * coltot[j]:
            links.append(pair)
        else:
            dropped.append(pair)
        W[i, :] = -1.0
        W[:, j] = -1.0
    return links, VoteMatrix(counts=votes), dropped


def link_pairs(pairs, clusters_a, clusters_b, min_vote_share=0.2):
    """Match u-side clusters to v-side clusters of one candidate run.

    Both cluster sets must come from the same pairs list; each pair casts a
    vote between its two assigned clusters, weighted by closeness. Returns a
    partial matching as (index_a, index_b) tuples.
    """
    if clusters_a.count == 0 or clusters_b.count == 0:
        raise InputError("link_pairs needs nonempty cluster sets")
    Pa = np.array([canonicalize(p.u) for p in pairs])
    Pb = np.array([canonicalize(p.v) for p in pairs])
    la, da = assign_nearest(Pa, clusters_a.centers)
    lb, db = assign_nearest(Pb, clusters_b.centers)
    links, _, _ = _vote_and_link(
        la, da, lb, db,
        np.arange(clusters_a.count), np.arange(clusters_b.count),
        min_vote_share,
    )
    if not links:
        raise NumericalError(
            "no cross-mode link exceeded the vote-share floor", stage="link"
        )
    return links


def link_triples(pairs_12, pairs_32, clusters_1, clusters_2, clusters_3,
                 min_vote_share=0.2):
    """Join the (1,2) and (3,2) matchings on the shared mode-2 cluster index.

    The (3,2) run's v-components are assigned to the mode-2 centers sign
    invariantly, since canonicalization can flip independently between the
    two runs. Mode-2 clusters linked on one side only are orphans and do not
    form triples.
    """
    links_12 = link_pairs(pairs_12, clusters_1, clusters_2, min_vote_share)
    if clusters_3.count == 0:
        raise InputError("link_triples needs nonempty mode-3 clusters")
    P3 = np.array([canonicalize(p.u) for p in pairs_32])
    P23 = np.array([canonicalize(p.v) for p in pairs_32])
    l3, d3 = assign_nearest(P3, clusters_3.centers)
    l23, d23 = assign_nearest(P23, clusters_2.centers, sign_invariant=True)
    links_32, _, _ = _vote_and_link(
        l3, d3, l23, d23,
        np.arange(clusters_3.count), np.arange(clusters_2.count),
        min_vote_share,
    )
    m32 = {j: k for k, j in links_32}
    return [(i, j, m32[j]) for i, j in links_12 if j in m32]


def fit_weights(A, triples):
    """Least-squares magnitudes for fixed component triples.

    Solves the normal equations on the Gram matrix of vectorized rank-one
    tensors, which factors as the Hadamard product of the three per-mode
    Grams. An ill-conditioned Gram signals duplicate or near-duplicate
    triples and raises instead of returning garbage weights.
    """
    A = check_tensor3(A)
    if not triples:
        raise InputError("fit_weights needs at least one triple")
    n1, n2, n3 = A.shape
    for u, v, w in triples:
        if len(u) != n1 or len(v) != n2 or len(w) != n3:
            raise InputError("triple dimensions do not match the tensor")
    U = np.stack([np.asarray(t[0], dtype=float) for t in triples], axis=1)
    V = np.stack([np.asarray(t[1], dtype=float) for t in triples], axis=1)
    W = np.stack([np.asarray(t[2], dtype=float) for t in triples], axis=1)
    G = (U.T @ U) * (V.T @ V) * (W.T @ W)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond >= 1e8:
        raise NumericalError(
            f"rank-one design matrix is ill-conditioned (cond {cond:.3g}); "
            "triples are likely duplicated",
            stage="fit_weights",
        )
    b = np.einsum("ijk,il,jl,kl->l", A, U, V, W)
    return [float(c) for c in np.linalg.solve(G, b)]


def _collect(A, mode_pair, cfg, seed):
    try:
        return collect_candidates(
            A, mode_pair, cfg.restarts_per_mode, cfg.findrankone, seed,
            target_dim=cfg.span_target_dim, energy_tol=cfg.span_energy_tol,
            weighting=cfg.span_weighting,
        )
    except NumericalError as e:
        raise NumericalError(str(e), stage=f"collect{mode_pair}") from e


def _cluster_side(points):
    h = estimate_bandwidth(points)
    result = mean_shift(points, h)
    labels, dist = assign_nearest(points, result.centers)
    return result, labels, dist, h


def arofac2(A, cfg=None, seed=0):
    """Detect the rank of a degree-3 tensor and return its decomposition.

    With compute_mode3 (default) the result is a full CP decomposition. With
    compute_mode3=False only modes 1 and 2 are analyzed; each factor's w
    then holds its normalized per-slice weight profile, fitted slice by
    slice, which is the simultaneous-diagonalization form of the same
    decomposition.
    """
    A = check_tensor3(A, min_dim=2)
    cfg = (cfg or Arofac2Config()).validate()
    seed = check_seed(seed)
    n1, n2, n3 = A.shape
    if not np.any(A):
        return Decomposition(rank=0, factors=[], rel_error=0.0,
                             diagnostics={"note": "zero input tensor"})

    pairs_12 = _collect(A, (1, 2), cfg, seed)
    S1 = np.array([canonicalize(p.u) for p in pairs_12])
    S2 = np.array([canonicalize(p.v) for p in pairs_12])
    c1, lab1, d1, h1 = _cluster_side(S1)
    c2, lab2, d2, h2 = _cluster_side(S2)
    floor_12 = max(2, math.ceil(cfg.support_frac * len(pairs_12)))
    keep1, sup1 = _support_keep(lab1, c1.count, floor_12)
    keep2, sup2 = _support_keep(lab2, c2.count, floor_12)
    if not len(keep1) or not len(keep2):
        raise NumericalError(
            "no cluster reached the support floor", stage="cluster(1,2)"
        )
    links_12, vm12, dropped_12 = _vote_and_link(
        lab1, d1, lab2, d2, keep1, keep2, cfg.min_vote_share
    )
    if not links_12:
        raise NumericalError(
            "no mode-1/2 link exceeded the vote-share floor", stage="link(1,2)"
        )

    diagnostics = {
        "bandwidths": {"mode1": h1, "mode2": h2},
        "candidates": {
            "run_12": {"restarts": cfg.restarts_per_mode,
                       "converged": len(pairs_12)},
        },
        "clusters": {
            "mode1": {"count": c1.count, "support": sup1.tolist(),
                      "inertia": c1.inertia.tolist()},
            "mode2": {"count": c2.count, "support": sup2.tolist(),
                      "inertia": c2.inertia.tolist()},
        },
        "support_floor": {"run_12": floor_12},
        "votes": {"run_12": vm12.counts.tolist()},
        "dropped_links": {"run_12": dropped_12},
    }

    if cfg.compute_mode3:
        pairs_32 = _collect(A, (3, 2), cfg, seed)
        S3 = np.array([canonicalize(p.u) for p in pairs_32])
        S23 = np.array([canonicalize(p.v) for p in pairs_32])
        c3, lab3, d3, h3 = _cluster_side(S3)
        lab23, d23 = assign_nearest(S23, c2.centers, sign_invariant=True)
        floor_32 = max(2, math.ceil(cfg.support_frac * len(pairs_32)))
        keep3, sup3 = _support_keep(lab3, c3.count, floor_32)
        if not len(keep3):
            raise NumericalError(
                "no mode-3 cluster reached the support floor", stage="cluster(3,2)"
            )
        links_32, vm32, dropped_32 = _vote_and_link(
            lab3, d3, lab23, d23, keep3, keep2, cfg.min_vote_share
        )
        m32 = {j: k for k, j in links_32}
        triples_idx = [(i, j, m32[j]) for i, j in links_12 if j in m32]
        orphans = [{"run": "12", "link": [i, j]}
                   for i, j in links_12 if j not in m32]
        linked_12 = {j for _, j in links_12}
        orphans += [{"run": "32", "link": [k, j]}
                    for k, j in links_32 if j not in linked_12]
        if not triples_idx:
            raise NumericalError(
                "mode-1/2 and mode-3/2 links share no mode-2 cluster",
                stage="link(3,2)",
            )
        triples = [(c1.centers[i], c2.centers[j], c3.centers[k])
                   for i, j, k in triples_idx]
        try:
            weights = fit_weights(A, triples)
        except NumericalError as e:
            raise NumericalError(str(e), stage="weights") from e
        factors = [Factor(u=u.copy(), v=v.copy(), w=w.copy(), weight=wt)
                   for (u, v, w), wt in zip(triples, weights)]
        diagnostics["bandwidths"]["mode3"] = h3
        diagnostics["candidates"]["run_32"] = {
            "restarts": cfg.restarts_per_mode, "converged": len(pairs_32)}
        diagnostics["clusters"]["mode3"] = {
            "count": c3.count, "support": sup3.tolist(),
            "inertia": c3.inertia.tolist()}
        diagnostics["support_floor"]["run_32"] = floor_32
        diagnostics["votes"]["run_32"] = vm32.counts.tolist()
        diagnostics["dropped_links"]["run_32"] = dropped_32
        diagnostics["orphans"] = orphans
    else:
        # Per-slice diagonal weights: solve min ||A_k - U diag(d_k) V^T||
        # for every slice with a single shared Gram factorization.
        idx1 = [i for i, _ in links_12]
        idx2 = [j for _, j in links_12]
        U = c1.centers[idx1].T
        V = c2.centers[idx2].T
        G = (U.T @ U) * (V.T @ V)
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond >= 1e8:
            raise NumericalError(
                f"mode-1/2 design matrix is ill-conditioned (cond {cond:.3g})",
                stage="weights",
            )
        B = np.einsum("il,ijk,jl->lk", U, A, V)
        D = np.linalg.solve(G, B)
        factors = []
        for l in range(len(links_12)):
            wraw = D[l]
            nrm = np.linalg.norm(wraw)
            if nrm == 0:
                factors.append(Factor(u=U[:, l].copy(), v=V[:, l].copy(),
                                      w=np.zeros(n3), weight=0.0))
                continue
            w = canonicalize(wraw)
            factors.append(Factor(u=U[:, l].copy(), v=V[:, l].copy(),
                                  w=w, weight=float(w @ wraw)))

    rank = len(factors)
    d = Decomposition(rank=rank, factors=factors, rel_error=0.0,
                      diagnostics=diagnostics)
    d.rel_error = rel_error(A, reconstruct(d, A.shape))
    return d
