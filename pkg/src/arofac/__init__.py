"""Automatic CP-rank detection and decomposition of degree-3 tensors.

The central entry points are :func:`arofac2` (rank-detecting decomposition),
:func:`parafac_als` (fixed-rank baseline), and the estimator classes
:class:`AROFAC2` and :class:`ParafacALS`.
"""

from .als import AlsConfig, khatri_rao, parafac_als
from .cluster import (ClusterResult, canonicalize, estimate_bandwidth,
                      mean_shift)
from .estimators import AROFAC2, ParafacALS
from .exceptions import ArofacError, InputError, NumericalError
from .formats import load_eem_csv, read_t3, write_t3
from .pipeline import (Arofac2Config, VoteMatrix, arofac2, fit_weights,
                       link_pairs, link_triples)
from .rankone import (CandidatePair, FindRankOneConfig, collect_candidates,
                      find_rank_one, power_step, suggested_restarts)
from .span import SpanRep, build_span, project, sample
from .synth import (GroundTruth, SynthSpec, gen_synthetic, match_components,
                    noise_sweep)
from .tensor import (Decomposition, Factor, outer3, permute_modes,
                     reconstruct, refold, rel_error, slice3, unfold)

__version__ = "0.1.0"

__all__ = [
    "AROFAC2",
    "AlsConfig",
    "Arofac2Config",
    "ArofacError",
    "CandidatePair",
    "ClusterResult",
    "Decomposition",
    "Factor",
    "FindRankOneConfig",
    "GroundTruth",
    "InputError",
    "NumericalError",
    "ParafacALS",
    "SpanRep",
    "SynthSpec",
    "VoteMatrix",
    "arofac2",
    "build_span",
    "canonicalize",
    "collect_candidates",
    "estimate_bandwidth",
    "find_rank_one",
    "fit_weights",
    "gen_synthetic",
    "khatri_rao",
    "link_pairs",
    "link_triples",
    "load_eem_csv",
    "match_components",
    "mean_shift",
    "noise_sweep",
    "outer3",
    "parafac_als",
    "permute_modes",
    "power_step",
    "project",
    "read_t3",
    "reconstruct",
    "refold",
    "rel_error",
    "sample",
    "slice3",
    "suggested_restarts",
    "unfold",
    "write_t3",
]
