"""Detect localized binary attributes on graphs.

A binary node attribute is localized when its activated nodes form a few
compact, well-separated regions.  The package provides three statistics for
testing that against i.i.d. noise: a graph wavelet statistic, a local graph
scan statistic solved by graph cuts, and a convex (LP) relaxation of the
scan, together with the planted-ball simulator and the evaluation metrics
used to compare them.
"""

from .evaluation import (
    RankingResult,
    auc,
    average_f1,
    cut_cost,
    empirical_pvalue,
    modularity,
    naive_statistic,
    rank_attributes,
    spearman,
)
from .graph import (
    Graph,
    GraphError,
    ball,
    geodesic_distances,
    grid_graph,
    incidence_apply,
    knn_graph,
    road_like_graph,
    total_variation,
)
from .maxflow import CutResult, FlowNetwork, min_cut, pseudo_boolean_min
from .scan import (
    AnnealingSchedule,
    DegenerateBackgroundError,
    NumericalError,
    ScanConfig,
    ScanReport,
    bernoulli_kl,
    cgss,
    cgss_threshold,
    lgss,
    lgss_threshold,
    scan_objective,
    scan_pvalue_bound,
)
from .simulation import PlantedModel, draw_h0, draw_h1, scattered_null
from .wavelet import (
    WaveletBasis,
    WaveletReport,
    build_basis,
    detect_wavelet,
    partition_2means,
    wavelet_pvalue_bound,
    wavelet_statistic,
    wavelet_threshold,
)

__version__ = "0.1.0"
