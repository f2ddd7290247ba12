"""ReLU split selection."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .model import NeuronId
from .relax import NeuronBounds, ReluSpec


class FullySplit(Exception):
    """No unstable, unfixed neuron is left; the node must be decided exactly."""


class SplitScore(NamedTuple):
    neuron: NeuronId
    score: float


def split_scores(gamma: ReluSpec, bounds: NeuronBounds):
    """Scores of all splittable neurons in layer-major order.

    The score ``-l*u/(u-l)`` is the height of the triangle relaxation at
    ``z = 0``, i.e. the largest gap the relaxation admits for that neuron.
    """
    out = []
    for layer in sorted(bounds.lower):
        l, u = bounds.lower[layer], bounds.upper[layer]
        for i in np.flatnonzero((l < 0) & (u > 0)):
            nid = NeuronId(layer, int(i))
            if nid in gamma:
                continue
            out.append(SplitScore(nid, float(-l[i] * u[i] / (u[i] - l[i]))))
    return out


def select_relu(gamma: ReluSpec, bounds: NeuronBounds) -> NeuronId:
    best = None
    for cand in split_scores(gamma, bounds):
        # strict > keeps the earliest (layer, index) on ties
        if best is None or cand.score > best.score:
            best = cand
    if best is None:
        raise FullySplit(repr(gamma))
    return best.neuron
