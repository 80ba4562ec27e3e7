"""Probabilistic Prolog: proofs, tries, BDDs and approximate inference."""

from .bdd import BddManager, BddScript, export_script, translate_trie
from .engine import Engine, Proof, best_proof, collect_proofs, k_best_proofs, solve, solve_in_sample, threshold_pruner
from .errors import (
    DepthLimitExceeded,
    InstantiationError,
    LoadError,
    NonGroundProbabilisticCall,
    ParseError,
    ProbLogError,
    ProofLimitExceeded,
    QueryError,
    SourceSpan,
)
from .estimator import ProbLogEstimator
from .inference import (
    BoundsConfig,
    InferenceResult,
    MonteCarloResult,
    ProbabilityInterval,
    bounded_probability,
    bounds,
    exact,
    exact_probability,
    explanation,
    explanation_probability,
    k_probability,
    kbest,
    monte_carlo,
)
from .loader import add_prelude, load_graph, load_program, read_graph
from .parser import parse_program, parse_query, parse_term
from .program import GroundFactId, Probability, Program
from .sampling import SampleState
from .trie import ProofTrie

__version__ = "0.1.0"
