"""Sound bounding of ReLU sub-problems.

A sub-problem is the input box plus a set of sign constraints on ReLU
pre-activations (a ``ReluSpec``). Two backends compute the assessment, i.e.
a lower bound on ``f`` over a convex relaxation of the sub-problem:

* ``BACKSUB``: symbolic back-substitution with linear ReLU relaxations,
  concretised over the box.
* ``TRIANGLE_LP``: exact LP over the triangle relaxation, one LP per
  objective form.

Child bounds are always intersected with the parent's stored bounds, which
makes assessments monotone along every branch.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Network, NeuronId
from .numerics import LinearForm, LpProblem, lp_solve
from .spec import InputBox, OutputObjectives

INF = float("inf")
# bounds that cross by less than this are treated as a degenerate point
EMPTY_TOL = 1e-9


class Sign(enum.Enum):
    POS = "+"
    NEG = "-"

    def flip(self):
        return Sign.NEG if self is Sign.POS else Sign.POS


class Backend(enum.Enum):
    BACKSUB = "backsub"
    TRIANGLE_LP = "lp"


class ReluSpec:
    """Immutable partial assignment ``NeuronId -> Sign``; the empty spec is the root."""

    __slots__ = ("_map", "_key")

    def __init__(self, assignments=None):
        items = dict(assignments or {})
        self._map = {NeuronId(*k): Sign(v) for k, v in items.items()}
        self._key = tuple(sorted((k, v.value) for k, v in self._map.items()))

    def extend(self, neuron: NeuronId, sign: Sign) -> "ReluSpec":
        if neuron in self._map:
            raise ValueError(f"neuron {neuron} is already fixed")
        new = dict(self._map)
        new[neuron] = sign
        return ReluSpec(new)

    def get(self, neuron, default=None):
        return self._map.get(neuron, default)

    def refines(self, other: "ReluSpec") -> bool:
        """True when ``self`` strictly contains all of ``other``'s constraints."""
        return len(self) > len(other) and all(
            self._map.get(k) is v for k, v in other._map.items()
        )

    def items(self):
        return self._map.items()

    def __contains__(self, neuron):
        return neuron in self._map

    def __len__(self):
        return len(self._map)

    def __iter__(self):
        return iter(self._map)

    def __eq__(self, other):
        return isinstance(other, ReluSpec) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        body = ", ".join(f"{k}{v}" for k, v in self._key)
        return f"ReluSpec({{{body}}})"


@dataclass(frozen=True)
class NeuronBounds:
    """Effective pre-activation bounds per ReLU layer (keyed by layer position)."""

    lower: dict
    upper: dict
    empty: bool = False

    def of(self, neuron: NeuronId):
        return float(self.lower[neuron.layer][neuron.index]), float(self.upper[neuron.layer][neuron.index])

    def neurons(self):
        for layer in sorted(self.lower):
            for j in range(self.lower[layer].shape[0]):
                yield NeuronId(layer, j)


@dataclass(frozen=True)
class Assessment:
    p_hat: float
    candidate: np.ndarray | None
    bounds: NeuronBounds
    exact: bool = False

    @property
    def certified(self) -> bool:
        return self.p_hat > 0


def _vacuous(bounds, exact=False):
    return Assessment(INF, None, bounds, exact)


def _fixed_masks(net: Network, gamma: ReluSpec, layer: int):
    n = net.layers[layer].out_dim
    pos = np.zeros(n, dtype=bool)
    neg = np.zeros(n, dtype=bool)
    for nid, sign in gamma.items():
        if nid.layer == layer:
            (pos if sign is Sign.POS else neg)[nid.index] = True
    return pos, neg


def _relu_relaxation(l, u, pos, neg):
    """Per-neuron ``(lo_slope, lo_icpt, up_slope, up_icpt)`` with ``lo <= relu(z) <= up`` on [l, u]."""
    active = pos | (~neg & (l >= 0))
    inactive = ~active & (neg | (u <= 0))
    unstable = ~active & ~inactive
    ls = np.zeros_like(l)
    li = np.zeros_like(l)
    us = np.zeros_like(l)
    ui = np.zeros_like(l)
    ls[active] = 1.0
    us[active] = 1.0
    if unstable.any():
        lu, uu = l[unstable], u[unstable]
        width = uu - lu
        us[unstable] = uu / width
        ui[unstable] = -uu * lu / width
        # area-minimising lower slope; ties go to 0
        ls[unstable] = np.where(uu > -lu, 1.0, 0.0)
    return ls, li, us, ui


def _backsub(net, start, A, c, relax, box, lower):
    """Bound ``A @ h_start + c`` over the relaxation; returns (bound, A_x, c_x).

    ``h_k`` is the output of layer ``k``; ``start = -1`` means the input.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    c = np.array(c, dtype=np.float64, copy=True)
    for k in range(start, -1, -1):
        layer = net.layers[k]
        if layer.is_relu:
            ls, li, us, ui = relax[k]
            Ap = np.maximum(A, 0.0)
            An = np.minimum(A, 0.0)
            if lower:
                c = c + Ap @ li + An @ ui
                A = Ap * ls + An * us
            else:
                c = c + Ap @ ui + An @ li
                A = Ap * us + An * ls
        c = c + A @ layer.bias
        A = A @ layer.weights
    Ap = np.maximum(A, 0.0)
    An = np.minimum(A, 0.0)
    if lower:
        bound = c + Ap @ box.lower + An @ box.upper
    else:
        bound = c + Ap @ box.upper + An @ box.lower
    return bound, A, c


def _propagate(net, box, gamma, parent):
    lower, upper, relax = {}, {}, {}
    for j in net.relu_layers:
        layer = net.layers[j]
        lo, _, _ = _backsub(net, j - 1, layer.weights, layer.bias, relax, box, True)
        hi, _, _ = _backsub(net, j - 1, layer.weights, layer.bias, relax, box, False)
        if parent is not None and j in parent.lower:
            lo = np.maximum(lo, parent.lower[j])
            hi = np.minimum(hi, parent.upper[j])
        pos, neg = _fixed_masks(net, gamma, j)
        lo = np.where(pos, np.maximum(lo, 0.0), lo)
        hi = np.where(neg, np.minimum(hi, 0.0), hi)
        lower[j] = lo
        upper[j] = hi
        if np.any(lo > hi + EMPTY_TOL):
            return NeuronBounds(lower, upper, empty=True), relax
        # collapse rounding-level crossings onto a point
        upper[j] = hi = np.maximum(hi, lo)
        relax[j] = _relu_relaxation(lo, hi, pos, neg)
    return NeuronBounds(lower, upper), relax


def propagate_bounds(net: Network, box: InputBox, gamma: ReluSpec, parent: NeuronBounds | None = None) -> NeuronBounds:
    """Sound pre-activation bounds for every ReLU neuron on the ``gamma`` sub-region."""
    return _propagate(net, box, gamma, parent)[0]


def _corner(A_x, box):
    return np.where(A_x >= 0, box.lower, box.upper)


def _assess_backsub(net, box, objectives, gamma, parent):
    bounds, relax = _propagate(net, box, gamma, parent.bounds if parent else None)
    if bounds.empty:
        return _vacuous(bounds)
    C, d = objectives.matrix()
    lb, A_x, _ = _backsub(net, len(net.layers) - 1, C, d, relax, box, True)
    k = int(np.argmin(lb))
    p_hat = float(lb[k])
    if parent is not None and np.isfinite(parent.p_hat):
        # the parent's bound is sound on this sub-region too
        p_hat = max(p_hat, parent.p_hat)
    cand = _corner(A_x[k], box) if p_hat <= 0 else None
    return Assessment(p_hat, cand, bounds)


class _LpBuilder:
    """Affine bookkeeping for the LP encodings.

    LP variables are the inputs followed by one output variable per
    unstable unfixed ReLU. Every other neuron output is an affine
    expression of those variables.
    """

    def __init__(self, box: InputBox):
        n = box.dim
        self.n_inputs = n
        self.lo = list(box.lower)
        self.hi = list(box.upper)
        self.rows = []  # (coeffs, offset) meaning coeffs @ v + offset >= 0
        self.infeasible = False
        self.E = np.eye(n)  # current layer output = E @ v + e
        self.e = np.zeros(n)

    @property
    def nvars(self):
        return len(self.lo)

    def _pad(self, M):
        extra = self.nvars - M.shape[1]
        if extra:
            M = np.hstack([M, np.zeros((M.shape[0], extra))])
        return M

    def halfspace(self, coeffs, offset):
        if not np.any(coeffs):
            if offset < -1e-8:
                self.infeasible = True
            return
        self.rows.append((coeffs, offset))

    def add_var(self, lo, hi):
        self.lo.append(lo)
        self.hi.append(hi)
        return self.nvars - 1

    def finish_rows(self):
        n = self.nvars
        out = []
        for coeffs, offset in self.rows:
            if coeffs.shape[0] < n:
                coeffs = np.concatenate([coeffs, np.zeros(n - coeffs.shape[0])])
            out.append(LinearForm(coeffs, offset))
        return tuple(out)


def _build_lp(net, box, gamma, bounds, exact):
    b = _LpBuilder(box)
    for k, layer in enumerate(net.layers):
        Ez = layer.weights @ b.E
        ez = layer.weights @ b.e + layer.bias
        if not layer.is_relu:
            b.E, b.e = Ez, ez
            continue
        l, u = bounds.lower[k], bounds.upper[k]
        pos, neg = _fixed_masks(net, gamma, k)
        nout = layer.out_dim
        E_new = np.zeros_like(Ez)
        e_new = np.zeros(nout)
        new_vars = []
        for i in range(nout):
            zc, zo = Ez[i], ez[i]
            if pos[i] or (not neg[i] and l[i] >= 0):
                E_new[i], e_new[i] = zc, zo
                if exact:
                    b.halfspace(zc, zo)
                    continue
            elif neg[i] or u[i] <= 0:
                if exact:
                    b.halfspace(-zc, -zo)
                    continue
            else:
                if exact:
                    raise ValueError(f"neuron {NeuronId(k, i)} is unstable and unfixed")
                v = b.add_var(0.0, u[i])
                new_vars.append((i, v))
                zc = np.concatenate([zc, np.zeros(b.nvars - zc.shape[0])])
                unit = np.zeros(b.nvars)
                unit[v] = 1.0
                slope = u[i] / (u[i] - l[i])
                b.halfspace(unit - zc, -zo)
                b.halfspace(slope * zc - unit, slope * (zo - l[i]))
                continue
            # stable or fixed: keep z inside its bounds so children nest in parents
            b.halfspace(zc, zo - l[i])
            b.halfspace(-zc, u[i] - zo)
        E_new = b._pad(E_new)
        for i, v in new_vars:
            E_new[i, v] = 1.0
        b.E, b.e = E_new, e_new
    return b


def _solve_forms(b: _LpBuilder, objectives: OutputObjectives):
    if b.infeasible:
        return INF, None
    halfspaces = b.finish_rows()
    C, d = objectives.matrix()
    E = b._pad(b.E)
    best, best_x = INF, None
    for k in range(C.shape[0]):
        obj = LinearForm(C[k] @ E, C[k] @ b.e + d[k])
        sol = lp_solve(LpProblem(obj, np.array(b.lo), np.array(b.hi), halfspaces))
        if not sol.optimal:
            return INF, None
        if sol.value < best:
            best, best_x = sol.value, sol.point[: b.n_inputs]
    return best, best_x


def _assess_lp(net, box, objectives, gamma, parent):
    bounds = propagate_bounds(net, box, gamma, parent.bounds if parent else None)
    if bounds.empty:
        return _vacuous(bounds)
    p_hat, x = _solve_forms(_build_lp(net, box, gamma, bounds, exact=False), objectives)
    if p_hat == INF:
        return _vacuous(bounds)
    return Assessment(p_hat, np.clip(x, box.lower, box.upper) if p_hat <= 0 else None, bounds)


def assess(
    net: Network,
    box: InputBox,
    objectives: OutputObjectives,
    gamma: ReluSpec,
    backend: Backend = Backend.TRIANGLE_LP,
    parent: Assessment | None = None,
) -> Assessment:
    """Lower-bound ``f`` over the relaxed ``gamma`` sub-problem.

    ``parent`` is the assessment of the node this one was split from; its
    bounds (and, for back-substitution, its value) are used for clamping.
    """
    backend = Backend(backend)
    if backend is Backend.BACKSUB:
        return _assess_backsub(net, box, objectives, gamma, parent)
    return _assess_lp(net, box, objectives, gamma, parent)


def splittable(bounds: NeuronBounds, gamma: ReluSpec) -> bool:
    for j in bounds.lower:
        l, u = bounds.lower[j], bounds.upper[j]
        for i in np.flatnonzero((l < 0) & (u > 0)):
            if NeuronId(j, int(i)) not in gamma:
                return True
    return False


def exact_leaf_decision(
    net: Network,
    box: InputBox,
    objectives: OutputObjectives,
    gamma: ReluSpec,
    parent: Assessment | None = None,
) -> Assessment:
    """Exact minimum of ``f`` on a sub-problem whose ReLUs are all fixed or stable."""
    bounds = propagate_bounds(net, box, gamma, parent.bounds if parent else None)
    if bounds.empty:
        return _vacuous(bounds, exact=True)
    if splittable(bounds, gamma):
        raise ValueError("exact leaf decision needs every ReLU fixed or stable")
    p_hat, x = _solve_forms(_build_lp(net, box, gamma, bounds, exact=True), objectives)
    if p_hat == INF:
        return _vacuous(bounds, exact=True)
    return Assessment(p_hat, np.clip(x, box.lower, box.upper) if p_hat <= 0 else None, bounds, True)
