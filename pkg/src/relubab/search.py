"""Branch-and-bound drivers: FIFO baseline, greedy CePO descent, annealed descent.

All three build the same binary tree of ReLU sub-problems. The baseline
visits nodes first-come-first-served. The ordered variants keep, for every
node, the suspiciousness ``R`` of its most suspicious leaf, and repeatedly
walk from the root to an unexpanded leaf before splitting it:

* greedy always follows the child with the larger ``R``;
* annealed follows it too, except that with probability
  ``exp(-|R+ - R-| / T)`` it picks a child uniformly at random, with the
  temperature decaying geometrically once per iteration.

``R(root) = -inf`` means every leaf is certified and ``R(root) = +inf``
means some leaf holds a validated counterexample.
"""
from __future__ import annotations

import enum
import math
import time
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .heuristics import FullySplit, select_relu
from .relax import Assessment, Backend, ReluSpec, Sign, assess, exact_leaf_decision
from .spec import VerificationProblem, validate_counterexample

INF = math.inf
MONOTONE_TOL = 1e-6
STRATEGIES = ("bab", "greedy", "sa")


class Outcome(enum.Enum):
    CERTIFIED = "certified"
    FALSIFIED = "falsified"
    TIMEOUT = "timeout"


@dataclass
class SearchConfig:
    lam: float = 0.5
    t_max: float = 1.0
    alpha: float = 0.99
    timeout: float = 1000.0
    seed: int = 0
    backend: Backend = Backend.TRIANGLE_LP

    def __post_init__(self):
        self.backend = Backend(self.backend)
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


class Verifier:
    """Binds a problem to the bounding backend used by the drivers.

    The drivers only talk to this interface, so scripted stand-ins can
    replace it in tests.
    """

    def __init__(self, problem: VerificationProblem, backend=Backend.TRIANGLE_LP):
        self.problem = problem
        self.backend = Backend(backend)
        self.relu_count = problem.network.relu_count

    def assess(self, gamma: ReluSpec, parent: Assessment | None) -> Assessment:
        p = self.problem
        return assess(p.network, p.box, p.objectives, gamma, self.backend, parent)

    def exact(self, gamma: ReluSpec, current: Assessment) -> Assessment:
        p = self.problem
        return exact_leaf_decision(p.network, p.box, p.objectives, gamma, current)

    def validate(self, x) -> bool:
        return validate_counterexample(self.problem, x)

    def select(self, gamma: ReluSpec, bounds):
        return select_relu(gamma, bounds)


@dataclass(eq=False)
class TreeNode:
    gamma: ReluSpec
    assessment: Assessment
    parent: "TreeNode | None" = None
    children: tuple | None = None
    split_neuron: object = None
    valid: bool = False
    r: float = math.nan

    @property
    def depth(self) -> int:
        return len(self.gamma)

    @property
    def p_hat(self) -> float:
        return self.assessment.p_hat

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.children:
                stack.extend(reversed(node.children))


@dataclass
class SearchStats:
    strategy: str
    seed: int
    nodes_expanded: int = 0
    tree_size: int = 0
    elapsed_seconds: float = 0.0
    iterations: int = 0
    temperature: float | None = None
    exact_leaves: int = 0
    trace: list = field(default_factory=list)


@dataclass
class Verdict:
    outcome: Outcome
    counterexample: np.ndarray | None
    stats: SearchStats
    tree: TreeNode | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        s = self.stats
        return {
            "verdict": self.outcome.value,
            "elapsed_s": s.elapsed_seconds,
            "nodes_expanded": s.nodes_expanded,
            "tree_size": s.tree_size,
            "seed": s.seed,
            "strategy": s.strategy,
            "counterexample": None if self.counterexample is None else [float(v) for v in self.counterexample],
        }


def suspiciousness(p_hat, valid_cex, depth, K, p_hat_min, lam) -> float:
    if p_hat > 0:
        return -INF
    if valid_cex:
        return INF
    depth_term = depth / K if K > 0 else 0.0
    # p_hat_min is the most negative assessment seen; 0/0 only when both are 0
    ratio = p_hat / p_hat_min if p_hat_min < 0 else 1.0
    return lam * depth_term + (1.0 - lam) * ratio


def cepo_less(a, b, rng) -> bool:
    """``a`` strictly below ``b`` in the CePO order; finite ties are a coin flip."""
    if a < b:
        return True
    if a > b or math.isinf(a):
        return False
    return bool(rng.random() < 0.5)


def sa_accept(r_plus, r_minus, T, rng) -> Sign:
    """Pick a child branch given the two children's suspiciousness."""
    if r_plus == INF or r_minus == -INF:
        return Sign.POS
    if r_minus == INF or r_plus == -INF:
        return Sign.NEG
    delta_p = math.exp((min(r_plus, r_minus) - max(r_plus, r_minus)) / T)
    if rng.random() < delta_p:
        return Sign.POS if rng.random() < 0.5 else Sign.NEG
    return Sign.POS if r_plus > r_minus else Sign.NEG


def backpropagate(node: TreeNode):
    """Propagate the children's maximum ``R`` from ``node`` up to the root."""
    while node is not None:
        if node.children:
            node.r = max(c.r for c in node.children)
        node = node.parent


class _Timeout(Exception):
    pass


class _Search:
    def __init__(self, verifier, config: SearchConfig, strategy: str):
        self.v = verifier
        self.cfg = config
        self.K = verifier.relu_count
        self.rng = np.random.default_rng(config.seed)
        self.stats = SearchStats(strategy, config.seed)
        self.p_hat_min = INF
        self.cex = None
        self.start = time.perf_counter()
        self.deadline = self.start + config.timeout

    def check_time(self):
        if time.perf_counter() >= self.deadline:
            raise _Timeout

    def observe(self, node: TreeNode):
        """Validate the node's candidate and fold its assessment into the statistics."""
        a = node.assessment
        if node.parent is not None and a.p_hat < node.parent.p_hat - MONOTONE_TOL:
            # scores cached under the root's p_hat_min would go stale
            warnings.warn(
                f"assessment decreased from {node.parent.p_hat:.6g} to {a.p_hat:.6g} "
                f"at {node.gamma!r}",
                RuntimeWarning,
                stacklevel=2,
            )
        if a.p_hat <= 0:
            node.valid = self.v.validate(a.candidate)
            if node.valid and self.cex is None:
                self.cex = np.asarray(a.candidate, dtype=np.float64)
        if math.isfinite(a.p_hat) and a.p_hat < self.p_hat_min:
            self.p_hat_min = a.p_hat
        self.stats.tree_size += 1

    def score(self, node: TreeNode) -> float:
        return suspiciousness(node.p_hat, node.valid, node.depth, self.K, self.p_hat_min, self.cfg.lam)

    def resolve_exact(self, node: TreeNode):
        """Replace a fully split node's assessment by the exact decision."""
        node.assessment = self.v.exact(node.gamma, node.assessment)
        self.stats.exact_leaves += 1
        node.valid = False
        if node.p_hat <= 0:
            node.valid = self.v.validate(node.assessment.candidate)
            if node.valid:
                if self.cex is None:
                    self.cex = np.asarray(node.assessment.candidate, dtype=np.float64)
            else:
                warnings.warn(
                    f"exact leaf {node.gamma!r} has p_hat={node.p_hat:.3g} but its "
                    "optimiser does not validate; treating it as certified",
                    RuntimeWarning,
                    stacklevel=2,
                )
                node.r = -INF
                return
        node.r = self.score(node)

    def finish(self, outcome, root):
        s = self.stats
        s.elapsed_seconds = time.perf_counter() - self.start
        s.nodes_expanded = max(s.tree_size - 1, 0)
        cex = self.cex if outcome is Outcome.FALSIFIED else None
        return Verdict(outcome, cex, s, root)


def _key(gamma: ReluSpec):
    return tuple((k.layer, k.index, s.value) for k, s in sorted(gamma.items()))


def run_bab(problem, config: SearchConfig | None = None, verifier=None) -> Verdict:
    """Classic FIFO branch and bound."""
    config = config or SearchConfig()
    v = verifier or Verifier(problem, config.backend)
    S = _Search(v, config, "bab")
    queue = deque([(ReluSpec(), None)])
    root = None
    try:
        while queue:
            S.check_time()
            gamma, parent = queue.popleft()
            node = TreeNode(gamma, v.assess(gamma, parent.assessment if parent else None), parent)
            if parent is None:
                root = node
            else:
                parent.children = (parent.children or ()) + (node,)
            S.observe(node)
            S.stats.trace.append(_key(gamma))
            if node.p_hat > 0:
                continue
            if node.valid:
                return S.finish(Outcome.FALSIFIED, root)
            try:
                neuron = v.select(gamma, node.assessment.bounds)
            except FullySplit:
                S.resolve_exact(node)
                if node.valid:
                    return S.finish(Outcome.FALSIFIED, root)
                continue
            node.split_neuron = neuron
            for sign in (Sign.POS, Sign.NEG):
                queue.append((gamma.extend(neuron, sign), node))
    except _Timeout:
        return S.finish(Outcome.TIMEOUT, root)
    return S.finish(Outcome.CERTIFIED, root)


def _expand(S: _Search, node: TreeNode):
    try:
        neuron = S.v.select(node.gamma, node.assessment.bounds)
    except FullySplit:
        S.resolve_exact(node)
        return
    node.split_neuron = neuron
    children = []
    for sign in (Sign.POS, Sign.NEG):
        S.check_time()
        gamma = node.gamma.extend(neuron, sign)
        child = TreeNode(gamma, S.v.assess(gamma, node.assessment), node)
        S.observe(child)
        children.append(child)
    for child in children:
        child.r = S.score(child)
    node.children = tuple(children)


def _run_ordered(problem, config, verifier, strategy, choose) -> Verdict:
    config = config or SearchConfig()
    v = verifier or Verifier(problem, config.backend)
    S = _Search(v, config, strategy)
    T = config.t_max
    root = TreeNode(ReluSpec(), v.assess(ReluSpec(), None))
    S.observe(root)
    root.r = S.score(root)
    try:
        while True:
            if root.r == -INF:
                return S.finish(Outcome.CERTIFIED, root)
            if root.r == INF:
                return S.finish(Outcome.FALSIFIED, root)
            S.check_time()
            S.stats.iterations += 1
            T = config.alpha * T
            S.stats.temperature = T
            node = root
            while node.children:
                node = node.children[0 if choose(S, node, T) is Sign.POS else 1]
            S.stats.trace.append(_key(node.gamma))
            _expand(S, node)
            backpropagate(node)
    except _Timeout:
        return S.finish(Outcome.TIMEOUT, root)


def _greedy_choice(S, node, T):
    pos, neg = node.children
    return Sign.NEG if cepo_less(pos.r, neg.r, S.rng) else Sign.POS


def _annealed_choice(S, node, T):
    pos, neg = node.children
    return sa_accept(pos.r, neg.r, T, S.rng)


def run_greedy(problem, config: SearchConfig | None = None, verifier=None) -> Verdict:
    """Always descend into the more suspicious child."""
    verdict = _run_ordered(problem, config, verifier, "greedy", _greedy_choice)
    verdict.stats.temperature = None
    return verdict


def run_sa(problem, config: SearchConfig | None = None, verifier=None) -> Verdict:
    """Descend with annealed acceptance; ``T`` starts at ``t_max`` and decays by ``alpha``."""
    return _run_ordered(problem, config, verifier, "sa", _annealed_choice)


RUNNERS = {"bab": run_bab, "greedy": run_greedy, "sa": run_sa}


def run(problem, strategy: str, config: SearchConfig | None = None, verifier=None) -> Verdict:
    try:
        runner = RUNNERS[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}") from None
    return runner(problem, config, verifier)


def parent_child_pairs(root: TreeNode | None):
    """``(parent, child)`` for every split in the tree; excludes exact re-decisions."""
    if root is None:
        return
    for node in root.walk():
        for child in node.children or ():
            yield node, child
