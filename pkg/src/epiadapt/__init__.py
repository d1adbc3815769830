"""Weight-adaptation optimization for SIS epidemic networks."""
from .baselines import (
    constant_adaptation_ratio,
    constant_adaptation_schedule,
    no_adaptation_schedule,
)
from .coevolve import (
    C3Config,
    GenerationRecord,
    GroupingPlan,
    OptimizationResult,
    grouping_probability,
    optimize_subcomponent,
    random_grouping,
    run_c3,
    run_nsde,
)
from .de_core import (
    Candidate,
    DEConfig,
    Population,
    binomial_crossover,
    init_population,
    mutate_current_to_best_1,
    nsde_generation,
    repair_bounds,
    sample_scale_factor,
)
from .dynamics import (
    EpidemicParams,
    Evaluation,
    IntegrationError,
    Trajectory,
    WeightSchedule,
    constraint_value,
    decision_dimension,
    decode_candidate,
    encode_schedule,
    evaluate_candidate,
    infected_level,
    integrate,
    make_batch_evaluator,
    objective_value,
    total_weights,
    trace_series,
    write_trace_csv,
    write_trajectory_csv,
)
from .eps_constraint import (
    EpsilonSchedule,
    better_than,
    epsilon_at,
    violation_degree,
)
from .graph import (
    Network,
    TopologyStats,
    epidemic_threshold,
    generate_ba,
    load_network,
    network_from_weights,
    save_network,
    spectral_radius,
    topology_stats,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunRecord,
    derive_run_seed,
    run_experiment,
)
from .stats import AlgorithmSummary, summarize, wilcoxon_rank_sum

__version__ = "0.1.0"
