"""Structure learning for Husler-Reiss extremal graphical models.

The package learns the conditional-independence graph of multivariate
extremes: raw data -> rank-based tail pseudo-observations -> empirical
extremal variogram -> per-root L1-penalized sparsity estimates combined by
majority voting, with a minimum-spanning-tree baseline, information-criterion
tuning, recovery diagnostics and exact simulators for benchmarking.
"""

__version__ = "0.1.0"

from .baselines_diagnostics import (
    RecoveryDiagnostics,
    confusion_counts,
    emtp2_check,
    extremal_mst,
    f_score,
    gl_diagnostics,
    ns_diagnostics,
)
from .eglearn import (
    EglearnResult,
    GraphPath,
    ICReport,
    LearnerConfig,
    default_rho_grid,
    eglearn,
    eglearn_path,
    is_connected,
    select_ic,
    sparsest_connected,
)
from .errors import ConvergenceError, ExtgraphError, InputError
from .hr_model import (
    Graph,
    farris_transform,
    gamma_from_precision,
    graph_from_json,
    graph_from_precision,
    graph_to_json,
    hr_bivariate,
    inverse_farris,
    make_graph,
    matrix_from_csv,
    matrix_from_json,
    matrix_to_csv,
    matrix_to_json,
    precision_from_gamma,
    rooted_precision,
    validate_variogram,
)
from .simulate import (
    barabasi_albert,
    block_model_gamma,
    laplacian_gamma,
    positive_offdiag_fraction,
    random_correlation,
    rng_stream,
    sample_maxstable_hr,
    sample_mpd_hr,
)
from .sparse_solvers import (
    GlassoSolution,
    LassoSolution,
    SolverOptions,
    glasso_pattern,
    graphical_lasso,
    lasso_quadratic,
    neighborhood_selection,
)
from .tail_data import (
    EmpiricalVariogram,
    default_k,
    empirical_stdf_pair,
    empirical_variogram,
    invert_default_k,
    rank_transform,
    read_data_csv,
    variogram_consistency_probe,
)
