"""Cokernel statistics of random p-adic matrices with prescribed support patterns."""

__version__ = "0.1.0"

from .errors import CapExceededError, ValidationError
from .groups import (
    ConcreteGroup,
    PGroup,
    Subgroup,
    cohen_lenstra_prob,
    count_automorphisms,
    count_homs,
    count_surjections,
    enumerate_subgroups,
    generated_subgroup,
    group_order,
    nu_p,
    pgroups_with_order_dividing,
    subgroup_intersection,
    subgroup_sum,
)
from .modmatrix import (
    ModMatrix,
    cokernel_partition,
    count_sur_cok,
    rank_mod_p,
    smith_normal_form,
)
from .patterns import (
    PatternReport,
    StairSpec,
    SupportPattern,
    band_pattern,
    block_cyclic_pattern,
    block_pattern,
    budget_pattern,
    full_pattern,
    k_step_pattern,
    nonuniversality_pattern,
    stairs_unit,
    stairs_wide,
    validate,
)
from .sampler import (
    FinitePMF,
    Haar,
    McReport,
    Rademacher,
    full_rank_prob_exact,
    mc_cokernel_dist,
    mc_corank_dist,
    mc_full_rank_prob,
    mc_moment,
    wilson,
)
from .moments import (
    chain_ratio,
    chain_sum_44,
    d_split,
    delta_depth,
    exact_moment_bruteforce,
    f_tail,
    f_tail_geomean_check,
    is_code,
    moment_upper_bound_via_graph,
    stairs_caseI,
    stairs_wide_caseI,
)
from .expander import (
    BipartiteMultigraph,
    Configuration,
    ExpansionProfile,
    c_value,
    c_value_exact,
    duality_check,
    expansion_profile,
    graph_from_pattern,
    mc_c_distribution,
    pattern_from_graph,
    preimage_count,
    project,
    sample_configuration,
    simplify,
)
from .experiments import ExperimentConfig, list_experiments, run_experiment
