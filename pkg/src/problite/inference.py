"""Query answering: exact, explanation, k-best, bounded and Monte Carlo."""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bdd import FALSE, TRUE, BddManager, translate_trie
from .engine import Engine, Proof, SolveStatus, best_proof, k_best_proofs, solve, threshold_pruner
from .errors import ProofLimitExceeded
from .program import GroundingTable, Program
from .sampling import SampleState
from .trie import ProofTrie

__all__ = [
    "BoundsConfig",
    "ProbabilityInterval",
    "InferenceResult",
    "MonteCarloResult",
    "dnf_probability",
    "exact",
    "explanation",
    "kbest",
    "bounds",
    "monte_carlo",
    "exact_probability",
    "explanation_probability",
    "k_probability",
    "bounded_probability",
    "sample_entailments",
]


@dataclass(frozen=True)
class BoundsConfig:
    interval_width: float = 0.01
    initial_threshold: float = 0.5
    shrink_factor: float = 0.5
    max_iterations: int = 100

    def __post_init__(self):
        if not 0.0 < self.interval_width < 1.0:
            raise ValueError("interval width must lie in (0, 1)")
        if not 0.0 < self.initial_threshold <= 1.0:
            raise ValueError("initial threshold must lie in (0, 1]")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class ProbabilityInterval:
    low: float
    high: float

    def __post_init__(self):
        if not (0.0 <= self.low <= self.high + 1e-12 and self.high <= 1.0 + 1e-12):
            raise ValueError(f"invalid probability interval [{self.low}, {self.high}]")

    @property
    def width(self) -> float:
        return self.high - self.low

    def __contains__(self, value: float) -> bool:
        return self.low <= value <= self.high

    def __iter__(self):
        yield self.low
        yield self.high


@dataclass
class InferenceResult:
    """Outcome of one query plus the counters reported by the CLI.

    ``search_time`` covers resolution and trie insertion, ``bdd_time``
    covers trie translation and probability evaluation (seconds).
    """

    mode: str
    probability: float
    interval: ProbabilityInterval | None = None
    proofs: list = field(default_factory=list)
    n_proofs: int = 0
    trie_nodes: int = 0
    bdd_nodes: int = 0
    iterations: int = 0
    converged: bool = True
    history: list = field(default_factory=list)
    search_time: float = 0.0
    bdd_time: float = 0.0
    manager: BddManager | None = field(default=None, repr=False)
    root: int | None = field(default=None, repr=False)
    trie: ProofTrie | None = field(default=None, repr=False)


@dataclass
class MonteCarloResult:
    probability: float
    samples: int
    half_width: float
    positives: int
    converged: bool = True
    search_time: float = 0.0


class _ProofSink:
    """Stores proofs in a trie; an empty proof makes the DNF trivially true."""

    def __init__(self, max_proofs: int | None = None):
        self.trie = ProofTrie()
        self.true = False
        self.count = 0
        self.max_proofs = max_proofs

    def add(self, proof: Proof) -> None:
        self.count += 1
        if self.max_proofs is not None and self.count > self.max_proofs:
            raise ProofLimitExceeded(
                f"more than {self.max_proofs} proofs; use an approximate inference mode"
            )
        if proof.facts:
            self.trie.insert(proof.facts)
        else:
            self.true = True


def dnf_probability(program: Program, trie: ProofTrie, true: bool = False, manager: BddManager | None = None):
    """Probability of the DNF in ``trie`` (or of TRUE); returns (p, manager, root)."""
    mgr = manager or BddManager()
    if true:
        root = TRUE
    elif len(trie) == 0:
        root = FALSE
    else:
        root = translate_trie(mgr, trie)
    facts = program.facts
    p = mgr.probability(root, lambda gid: facts[gid[0]].prob.value)
    return p, mgr, root


def _evaluate(program: Program, sink: _ProofSink):
    t0 = time.perf_counter()
    p, mgr, root = dnf_probability(program, sink.trie, sink.true)
    return p, mgr, root, time.perf_counter() - t0


def exact(program: Program, goal, *, max_depth: int | None = None, max_proofs: int | None = None) -> InferenceResult:
    """Success probability from the BDD of all proofs."""
    sink = _ProofSink(max_proofs)
    proofs: list[Proof] = []

    def on_proof(proof: Proof):
        proofs.append(proof)
        sink.add(proof)

    t0 = time.perf_counter()
    solve(program, goal, None, on_proof, max_depth=max_depth)
    search_time = time.perf_counter() - t0
    p, mgr, root, bdd_time = _evaluate(program, sink)
    return InferenceResult(
        "exact", p, proofs=proofs, n_proofs=len(proofs), trie_nodes=sink.trie.node_count,
        bdd_nodes=mgr.size(root), search_time=search_time, bdd_time=bdd_time,
        manager=mgr, root=root, trie=sink.trie,
    )


def explanation(program: Program, goal, *, max_depth: int | None = None) -> InferenceResult:
    """Probability of the most likely proof."""
    t0 = time.perf_counter()
    best = best_proof(program, goal, max_depth=max_depth)
    search_time = time.perf_counter() - t0
    if best is None:
        return InferenceResult("explain", 0.0, search_time=search_time)
    return InferenceResult("explain", best.probability, proofs=[best], n_proofs=1, search_time=search_time)


def kbest(program: Program, goal, k: int, *, max_depth: int | None = None) -> InferenceResult:
    """Success probability restricted to the k most likely proofs (ties kept)."""
    t0 = time.perf_counter()
    proofs = k_best_proofs(program, goal, k, max_depth=max_depth)
    sink = _ProofSink()
    for proof in proofs:
        sink.add(proof)
    search_time = time.perf_counter() - t0
    p, mgr, root, bdd_time = _evaluate(program, sink)
    return InferenceResult(
        "kbest", p, proofs=proofs, n_proofs=len(proofs), trie_nodes=sink.trie.node_count,
        bdd_nodes=mgr.size(root), search_time=search_time, bdd_time=bdd_time,
        manager=mgr, root=root, trie=sink.trie,
    )


def bounds(program: Program, goal, config: BoundsConfig | None = None, *, max_depth: int | None = None) -> InferenceResult:
    """Lower and upper bounds by iterative deepening on a probability threshold.

    Each iteration re-runs the search with threshold ``gamma``: complete
    proofs feed the lower-bound DNF, and prefixes stopped below ``gamma``
    are added to the upper-bound DNF.  ``gamma`` shrinks by the configured
    factor until the interval is narrow enough or the iteration cap hits.
    """
    cfg = config or BoundsConfig()
    low, high = 0.0, 1.0
    gamma = cfg.initial_threshold
    history: list[ProbabilityInterval] = []
    search_time = bdd_time = 0.0
    lower = upper = None
    iterations = 0
    converged = True
    while high - low > cfg.interval_width:
        if iterations >= cfg.max_iterations:
            converged = False
            break
        lower, upper = _ProofSink(), _ProofSink()

        def on_proof(proof: Proof):
            upper.add(proof)
            if not proof.stopped:
                lower.add(proof)

        t0 = time.perf_counter()
        status = solve(program, goal, threshold_pruner(gamma), on_proof, max_depth=max_depth)
        search_time += time.perf_counter() - t0
        # an exhausted search with no proofs settles the query at 0
        if status is SolveStatus.PRUNED and len(upper.trie) == 0 and not upper.true:
            upper.true = True
        t0 = time.perf_counter()
        mgr = BddManager()
        low, _, _ = dnf_probability(program, lower.trie, lower.true, mgr)
        high, _, root = dnf_probability(program, upper.trie, upper.true, mgr)
        bdd_time += time.perf_counter() - t0
        # both DNFs share one manager, so rounding cannot invert the order
        high = max(high, low)
        history.append(ProbabilityInterval(low, high))
        iterations += 1
        gamma *= cfg.shrink_factor
    interval = ProbabilityInterval(low, high)
    return InferenceResult(
        "bounds", (low + high) / 2, interval=interval,
        n_proofs=lower.count if lower else 0,
        trie_nodes=upper.trie.node_count if upper else 0,
        iterations=iterations, converged=converged, history=history,
        search_time=search_time, bdd_time=bdd_time,
    )


def _sampler(program: Program, goal, seed: int, max_depth: int | None):
    grounding = GroundingTable(program)
    state = SampleState(program, seed, grounding)
    engine = Engine(program, max_depth=max_depth, grounding=grounding, allow_recorded_db=True)
    engine.use_sample(state)
    prepared = engine.prepare(goal)

    def entailed(sample_index: int, eager: bool = False) -> bool:
        state.reset(sample_index)
        if eager:
            state.realize_all()
        for _ in engine.run(goal, prepared):
            return True
        return False

    return entailed


def sample_entailments(program: Program, goal, seed: int, indices, *, eager: bool = False, max_depth: int | None = None) -> list[bool]:
    """Entailment of ``goal`` in each listed sample, realized lazily or eagerly."""
    entailed = _sampler(program, goal, seed, max_depth)
    return [entailed(i, eager) for i in indices]


def monte_carlo(
    program: Program,
    goal,
    delta: float = 0.01,
    batch_size: int = 1000,
    seed: int | None = None,
    *,
    threads: int = 1,
    max_samples: int | None = None,
    max_depth: int | None = None,
) -> MonteCarloResult:
    """Estimate the success probability by sampling programs in batches.

    After every batch the estimate is the fraction of entailing samples
    and the interval half-width is ``2 * sqrt(p * (1 - p) / n)``; sampling
    stops once that is at most ``delta``.
    """
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    if seed is None:
        seed = random.SystemRandom().getrandbits(63)
    threads = max(1, int(threads))
    workers = [_sampler(program, goal, seed, max_depth) for _ in range(threads)]
    count = n = 0
    p = 0.0
    width = 1.0
    converged = True
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while width > delta:
            if max_samples is not None and n >= max_samples:
                converged = False
                break
            start = n
            if pool is None:
                entailed = workers[0]
                hits = sum(1 for i in range(start, start + batch_size) if entailed(i))
            else:
                chunks = [range(start + w, start + batch_size, threads) for w in range(threads)]
                hits = sum(pool.map(lambda wc: sum(1 for i in wc[1] if wc[0](i)), zip(workers, chunks)))
            count += hits
            n += batch_size
            p = count / n
            width = 2.0 * math.sqrt(p * (1.0 - p) / n)
    finally:
        if pool is not None:
            pool.shutdown()
    return MonteCarloResult(p, n, width, count, converged, time.perf_counter() - t0)


# ----------------------------------------------------------------------
# float-valued shorthands


def exact_probability(program: Program, goal, **kwargs) -> float:
    return exact(program, goal, **kwargs).probability


def explanation_probability(program: Program, goal, **kwargs) -> tuple[float, Proof | None]:
    result = explanation(program, goal, **kwargs)
    return result.probability, (result.proofs[0] if result.proofs else None)


def k_probability(program: Program, goal, k, **kwargs) -> float:
    """P_k of ``goal``; ``k=math.inf`` gives the exact success probability."""
    if k == math.inf:
        return exact_probability(program, goal, **kwargs)
    return kbest(program, goal, int(k), **kwargs).probability


def bounded_probability(program: Program, goal, config: BoundsConfig | None = None, **kwargs) -> ProbabilityInterval:
    return bounds(program, goal, config, **kwargs).interval
