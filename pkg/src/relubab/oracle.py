"""Exhaustive ground truth by activation-pattern enumeration.

Every full sign pattern of the ReLUs makes the network affine; the minimum
of ``f`` over the box is the minimum over feasible patterns of one LP per
objective form. Patterns are enumerated depth-first in layer-major neuron
order (``+`` before ``-``), and a prefix is abandoned as soon as its sign
constraints are infeasible, which never changes the set of feasible full
patterns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network
from .numerics import LinearForm, LpProblem, lp_solve
from .spec import InputBox, OutputObjectives

MAX_RELUS = 16


class OracleRefused(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    min_value: float
    argmin: np.ndarray
    feasible_patterns: int
    pattern: tuple = ()

    @property
    def certified(self) -> bool:
        return self.min_value > 0


def _feasible(box, rows):
    if not rows:
        return True
    zero = LinearForm(np.zeros(box.dim), 0.0)
    return lp_solve(LpProblem(zero, box.lower, box.upper, rows)).optimal


def exact_verify(net: Network, box: InputBox, objectives: OutputObjectives) -> OracleResult:
    K = net.relu_count
    if K > MAX_RELUS:
        raise OracleRefused(f"network has {K} ReLUs; the oracle enumerates at most {MAX_RELUS}")
    n = net.input_dim
    C, d = objectives.matrix()
    best = [np.inf, None, None]
    count = 0

    def leaf(E, e, rows, pattern):
        nonlocal count
        count += 1
        for k in range(C.shape[0]):
            obj = LinearForm(C[k] @ E, C[k] @ e + d[k])
            sol = lp_solve(LpProblem(obj, box.lower, box.upper, rows))
            if not sol.optimal:
                # feasibility was established on the same rows
                continue
            if sol.value < best[0]:
                best[:] = [sol.value, sol.point, pattern]

    def layer_walk(k, E, e, rows, pattern):
        # advance through affine-only layers
        while k < len(net.layers) and not net.layers[k].is_relu:
            W, b = net.layers[k].weights, net.layers[k].bias
            E, e = W @ E, W @ e + b
            k += 1
        if k == len(net.layers):
            leaf(E, e, rows, pattern)
            return
        W, b = net.layers[k].weights, net.layers[k].bias
        Ez, ez = W @ E, W @ e + b
        width = W.shape[0]

        def neuron(i, E_out, e_out, rows, pattern):
            if i == width:
                layer_walk(k + 1, E_out, e_out, rows, pattern)
                return
            for positive in (True, False):
                sign = 1.0 if positive else -1.0
                row = LinearForm(sign * Ez[i], sign * ez[i])
                if not np.any(row.coeffs):
                    if row.offset < 0:
                        continue
                    new_rows = rows
                else:
                    new_rows = rows + (row,)
                    if not _feasible(box, new_rows):
                        continue
                E2, e2 = E_out.copy(), e_out.copy()
                if positive:
                    E2[i], e2[i] = Ez[i], ez[i]
                neuron(i + 1, E2, e2, new_rows, pattern + ((1 if positive else 0),))

        neuron(0, np.zeros_like(Ez), np.zeros(width), rows, pattern)

    layer_walk(0, np.eye(n), np.zeros(n), (), ())
    # a nonempty box always has at least one feasible pattern
    assert best[1] is not None, "no feasible activation pattern for a nonempty box"
    return OracleResult(float(best[0]), np.asarray(best[1]), count, tuple(best[2]))
