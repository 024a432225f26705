"""Treatment-assignment designs for randomized experiments on networks with interference."""

from .design import (
    DesignError,
    ExperimentConfig,
    Partition,
    Treatment,
    TypePartition,
    crd,
    degree_type_partition,
    enumerate_block_assignments,
    enumerate_crd,
    make_sampler,
    partition_by_degree,
    randomized_degree_blocking,
    sample_within_blocks,
    type_restricted,
)
from .graph import (
    Graph,
    GraphError,
    build_graph,
    complete_graph,
    cycle_graph,
    degree_stats,
    gen_copies_graph,
    gen_erdos_renyi,
    gen_preferential_attachment,
    path_graph,
)
from .interference import (
    LipschitzBudget,
    Linear,
    NormalizedLinear,
    SymmetricTable,
    ThresholdCount,
    ThresholdFraction,
    Typed,
    eval_interference,
    lipschitz_constant,
    lipschitz_norm,
    metric_dK,
    weight,
)
from .outcome import (
    OutcomeModel,
    average_direct_effect,
    homophily_stats,
    neyman_estimate,
    sample_gaussian_model,
    simulate_outcomes,
    t_ideal,
    xi,
)
from .quasicoloring import (
    BidegreeMeasure,
    bidegree_measure,
    c_p,
    find_perfect_quasicoloring,
    is_perfect_quasicoloring,
    typed_bidegree_measures,
    wasserstein_norm,
    xi_via_measure,
)

__version__ = "0.1.0"
