"""Input boxes, min-of-linear output objectives, and counterexample checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import Network, infer
from .numerics import ContractError, LinearForm

BOX_TOL = 1e-9


class SpecFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InputBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64).reshape(-1)
        hi = np.array(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise ContractError("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ContractError("empty input box (lower > upper)")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x, tol=BOX_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            return False
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass(frozen=True)
class OutputObjectives:
    """``f(y) = min_k form_k(y)``; the property holds at ``y`` iff ``f(y) > 0``."""

    forms: tuple

    def __post_init__(self):
        forms = tuple(self.forms)
        if not forms:
            raise ContractError("at least one objective form is required")
        if len({f.dim for f in forms}) != 1:
            raise ContractError("objective forms differ in dimension")
        object.__setattr__(self, "forms", forms)

    @property
    def dim(self) -> int:
        return self.forms[0].dim

    def matrix(self):
        """Stacked ``(C, d)`` with ``form_k(y) = C[k] @ y + d[k]``."""
        return (
            np.array([f.coeffs for f in self.forms]),
            np.array([f.offset for f in self.forms]),
        )


@dataclass(frozen=True)
class VerificationProblem:
    network: Network
    box: InputBox
    objectives: OutputObjectives
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.box.dim != self.network.input_dim:
            raise ContractError(
                f"box has dimension {self.box.dim}, network input is {self.network.input_dim}"
            )
        if self.objectives.dim != self.network.output_dim:
            raise ContractError(
                f"objectives act on R^{self.objectives.dim}, network output is "
                f"R^{self.network.output_dim}"
            )


def compile_robustness(center, epsilon, clip=None, label=0, num_classes=None):
    """Local robustness around ``center`` as an ``(InputBox, OutputObjectives)`` pair."""
    center = np.asarray(center, dtype=np.float64).reshape(-1)
    if epsilon < 0:
        raise ContractError("epsilon must be non-negative")
    if num_classes is None or not 0 <= label < num_classes:
        raise ContractError(f"label {label} out of range for {num_classes} classes")
    lo = center - epsilon
    hi = center + epsilon
    if clip is not None:
        lo = np.maximum(lo, clip[0])
        hi = np.minimum(hi, clip[1])
        if np.any(lo > hi):
            raise ContractError("box is empty after clipping")
    forms = []
    for i in range(num_classes):
        if i == label:
            continue
        c = np.zeros(num_classes)
        c[label] = 1.0
        c[i] = -1.0
        forms.append(LinearForm(c, 0.0))
    return InputBox(lo, hi), OutputObjectives(tuple(forms))


def evaluate_objective(objectives: OutputObjectives, y) -> float:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (objectives.dim,):
        raise ContractError(f"output of shape {y.shape}, objectives expect ({objectives.dim},)")
    return min(f(y) for f in objectives.forms)


def validate_counterexample(problem: VerificationProblem, x) -> bool:
    if x is None:
        return False
    x = np.asarray(x, dtype=np.float64)
    if not problem.box.contains(x):
        return False
    return evaluate_objective(problem.objectives, infer(problem.network, x)) <= 0.0


def parse_spec(document, network: Network | None = None):
    """Decode spec JSON into ``(InputBox, OutputObjectives)``.

    Robustness documents may omit ``label``/``num_classes`` when ``network``
    is given: the label is then the network's prediction at the centre.
    """
    if isinstance(document, (bytes, bytearray, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SpecFormatError("spec document must be a JSON object")
    if "robustness" in document:
        r = document["robustness"]
        try:
            center = np.asarray(r["center"], dtype=np.float64)
            epsilon = float(r["epsilon"])
            clip = r.get("clip")
            label = r.get("label")
            num_classes = r.get("num_classes")
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"malformed robustness spec: {exc}") from exc
        if label is None or num_classes is None:
            if network is None:
                raise SpecFormatError("label/num_classes missing and no network to infer them")
            y = infer(network, center)
            label = int(np.argmax(y)) if label is None else label
            num_classes = network.output_dim if num_classes is None else num_classes
        return compile_robustness(center, epsilon, clip, int(label), int(num_classes))
    if "raw" in document:
        r = document["raw"]
        try:
            box = InputBox(r["box"]["lower"], r["box"]["upper"])
            forms = tuple(LinearForm(o["coeffs"], o.get("offset", 0.0)) for o in r["objectives"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"malformed raw spec: {exc}") from exc
        return box, OutputObjectives(forms)
    raise SpecFormatError("spec must contain a 'robustness' or 'raw' entry")


def read_problem(model_path, spec_path, metadata=None) -> VerificationProblem:
    from .model import read_network

    net = read_network(model_path)
    with open(spec_path, "rb") as fh:
        box, objectives = parse_spec(fh.read(), net)
    return VerificationProblem(net, box, objectives, dict(metadata or {}))


def raw_spec_document(box: InputBox, objectives: OutputObjectives) -> dict:
    return {
        "raw": {
            "box": {"lower": box.lower.tolist(), "upper": box.upper.tolist()},
            "objectives": [
                {"coeffs": f.coeffs.tolist(), "offset": f.offset} for f in objectives.forms
            ],
        }
    }
