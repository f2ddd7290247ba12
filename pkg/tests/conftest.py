import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from relubab.heuristics import FullySplit
from relubab.model import Layer, Network, NeuronId
from relubab.numerics import LinearForm
from relubab.relax import Assessment, NeuronBounds
from relubab.spec import InputBox, OutputObjectives, VerificationProblem

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def tiny_net_a():
    """One identity ReLU followed by an identity output: y = relu(x)."""
    return Network([Layer([[1.0]], [0.0], "relu"), Layer([[1.0]], [0.0], "none")])


def tiny_problem(form_coeff, form_offset, lo=-1.0, hi=1.0):
    net = tiny_net_a()
    box = InputBox([lo], [hi])
    objectives = OutputObjectives((LinearForm([form_coeff], form_offset),))
    return VerificationProblem(net, box, objectives)


def random_problem(rng, n_inputs=2, widths=(3, 3), n_outputs=2, eps=None):
    from relubab.harness import random_network
    from relubab.model import infer
    from relubab.spec import compile_robustness

    net = random_network(rng, n_inputs, list(widths), n_outputs)
    center = rng.uniform(0, 1, n_inputs)
    label = int(np.argmax(infer(net, center)))
    eps = rng.uniform(0.05, 1.0) if eps is None else eps
    box, objectives = compile_robustness(center, eps, None, label, n_outputs)
    return VerificationProblem(net, box, objectives)


NO_BOUNDS = NeuronBounds({}, {})


class Scripted:
    """Verifier stand-in driven by a table ``path -> (p_hat, valid)``.

    A path is the string of signs from the root; the split neuron at depth d
    is ``L0Nd``. Paths missing from ``splits`` are fully split and resolved
    through ``exact``.
    """

    def __init__(self, table, K, splits=None, exact=None):
        self.table = table
        self.relu_count = K
        self.splits = splits
        self.exact_table = exact or {}
        self.assessed = []

    @staticmethod
    def path(gamma):
        return "".join(gamma.get(NeuronId(0, d)).value for d in range(len(gamma)))

    def _make(self, path, p_hat, exact=False):
        cand = np.array([float(len(self.assessed))]) if p_hat <= 0 else None
        self.assessed.append(path)
        return Assessment(p_hat, cand, NO_BOUNDS, exact)

    def assess(self, gamma, parent):
        return self._make(self.path(gamma), self.table[self.path(gamma)][0])

    def exact(self, gamma, current):
        return self._make(self.path(gamma), self.exact_table[self.path(gamma)], True)

    def validate(self, x):
        return x is not None and self.table[self.assessed[int(x[0])]][1]

    def select(self, gamma, bounds):
        p = self.path(gamma)
        if self.splits is not None and p not in self.splits:
            raise FullySplit(p)
        return NeuronId(0, len(gamma))


def fig2():
    # root -2.1 splits into + (-1.8) and - (-2.0); the - side holds the real violation
    table = {
        "": (-2.1, False),
        "+": (-1.8, False),
        "-": (-2.0, False),
        "++": (0.4, False),
        "+-": (-0.3, False),
        "-+": (0.4, False),
        "--": (-1.4, True),
        "+-+": (0.4, False),
        "+--": (0.4, False),
    }
    return Scripted(table, K=4)


def chain(depth):
    # every "-" prefix is spurious, every "+" child certified, depth cap certified
    table = {"": (-1.0, False)}
    for d in range(1, depth + 1):
        table["-" * (d - 1) + "+"] = (0.5, False)
        table["-" * d] = (-1.0 if d < depth else 0.5, False)
    return Scripted(table, K=depth)


@pytest.fixture
def net_a():
    return tiny_net_a()
