"""Community detection from latent circular positions and simulated spreads."""

__version__ = "0.1.0"

from .bisection import BisectConfig, BisectOutcome, recursive_bisect, split_two
from .community import (
    BestCut,
    Dendrogram,
    PairProbabilityMatrix,
    Partition,
    accumulate_impulse,
    build_dendrogram,
    cut_at_k,
    final_pair_probability,
    modularity,
    select_best_partition,
)
from .graphs import (
    Graph,
    GraphError,
    ParseError,
    graph_from_impulses,
    induced_subgraph,
    parse_edge_list,
    parse_gml,
)
from .impulses import (
    ImpulseTrace,
    SpreadConfig,
    clustered_state,
    sample_spread_set,
    simulate_instantaneous_impulse,
    simulate_sequential_impulse,
    synthesize_network,
)
from .mcmc import (
    ChainResult,
    McmcConfig,
    chain_pair_probability,
    jump_candidate_distribution,
    jump_move,
    propose_local,
    run_chain,
)
from .metrics import adjusted_rand_index, rand_index
from .model import (
    LatentState,
    ModelConfig,
    circular_distance,
    link_g,
    link_h,
    log_likelihood,
    log_posterior,
)
from .pipeline import DetectConfig, DetectResult, detect
