"""Approximate bisimulation for continuous-time Markov chains.

The package computes (eps, delta)-bisimulation relations -- equivalences
that tolerate an eps-sized slack in jump probabilities and an
e^{+-delta} band around exit rates -- and turns them into certified
error bounds on time- and reward-bounded reachability, checked against
exact transient analysis.
"""

from .bisim import (
    Coupling,
    PairRelation,
    Partition,
    RelationCheck,
    SplitResult,
    SplitWitness,
    check_quasi_lumpability,
    compose,
    epsilon_delta_bisim,
    extract_coupling,
    is_bisimulation,
    load_relation,
    save_relation,
    split_construction,
    strong_bisim,
)
from .curves import BoundCurve, time_grid
from .erlang import (
    ParetoRegion,
    erlang_N,
    erlang_N_bound,
    erlang_diff,
    erlang_diff_argmax,
    erlang_diff_prefix,
    exact_diff_series,
    markov_bound,
    pareto_region,
    uniformization_bound,
)
from .model import (
    Ctmc,
    Dtmc,
    direct_sum,
    embedded_dtmc,
    generator,
    load_model,
    make_ctmc,
    normalize_goal,
    prune_unreachable,
    save_model,
    scale,
    uniformize,
    validate,
)
from .pairuniform import PairUniformResult, uniformize_pair
from .rewards import (
    eliminate_zero_reward_states,
    hat_transform,
    remove_zero_reward_self_loop,
    reward_bound,
    reward_reach,
)
from .spectral import (
    SpectralData,
    acyclic_exact,
    combined_bound,
    decompose,
    diag_bound,
    is_embedded_acyclic,
    jordan_bound,
    pn_diag,
    pn_jordan,
    spectral_report,
    triangle_bound_eps_delta,
)
from .transient import (
    HitStepDistribution,
    SimulationResult,
    diff_curve,
    expected_hit_steps,
    hit_exact_steps,
    reach_prob,
    simulate_paths,
    step_reach,
    timed_reach,
    timed_reach_curve,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCurve",
    "Coupling",
    "Ctmc",
    "Dtmc",
    "HitStepDistribution",
    "PairRelation",
    "PairUniformResult",
    "ParetoRegion",
    "Partition",
    "RelationCheck",
    "SimulationResult",
    "SpectralData",
    "SplitResult",
    "SplitWitness",
    "acyclic_exact",
    "check_quasi_lumpability",
    "combined_bound",
    "compose",
    "decompose",
    "diag_bound",
    "diff_curve",
    "direct_sum",
    "eliminate_zero_reward_states",
    "embedded_dtmc",
    "epsilon_delta_bisim",
    "erlang_N",
    "erlang_N_bound",
    "erlang_diff",
    "erlang_diff_argmax",
    "erlang_diff_prefix",
    "exact_diff_series",
    "expected_hit_steps",
    "extract_coupling",
    "generator",
    "hat_transform",
    "hit_exact_steps",
    "is_bisimulation",
    "is_embedded_acyclic",
    "jordan_bound",
    "load_model",
    "load_relation",
    "make_ctmc",
    "markov_bound",
    "normalize_goal",
    "pareto_region",
    "pn_diag",
    "pn_jordan",
    "prune_unreachable",
    "reach_prob",
    "remove_zero_reward_self_loop",
    "reward_bound",
    "reward_reach",
    "save_model",
    "save_relation",
    "scale",
    "simulate_paths",
    "spectral_report",
    "split_construction",
    "step_reach",
    "strong_bisim",
    "time_grid",
    "timed_reach",
    "timed_reach_curve",
    "triangle_bound_eps_delta",
    "uniformization_bound",
    "uniformize",
    "uniformize_pair",
    "validate",
]
