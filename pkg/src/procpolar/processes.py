"""Positive processes on event trees and the fork-convex/solid calculus.

A process assigns one nonnegative rational to every tree node; adaptedness
is structural.  Supermartingale checks, multiplicative increments (with
0/0 = 0), multiplication by nonincreasing processes and fork-splicing are
all exact, and each constructive operation re-checks the closure property
it is supposed to enjoy: composing them can never silently leave the class
of unit-initial supermartingales.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import PostconditionError, PreconditionError
from .rational import frac
from .tree import EventTree

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class AdaptedProcess:
    """One nonnegative rational per node of an event tree."""

    tree: EventTree
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.values) != self.tree.num_nodes:
            raise PreconditionError("one value per tree node required")
        if any(v < 0 for v in self.values):
            raise PreconditionError("process values must be nonnegative")

    @classmethod
    def from_mapping(
        cls, tree: EventTree, mapping: Mapping[int, int | str | Fraction]
    ) -> "AdaptedProcess":
        try:
            vals = tuple(frac(mapping[i]) for i in range(tree.num_nodes))
        except KeyError as exc:
            raise PreconditionError(f"missing value for node {exc}") from exc
        return cls(tree, vals)

    @classmethod
    def constant(cls, tree: EventTree, value: int | str | Fraction) -> "AdaptedProcess":
        return cls(tree, (frac(value),) * tree.num_nodes)

    def __getitem__(self, node: int) -> Fraction:
        return self.values[node]

    @property
    def initial(self) -> Fraction:
        return self.values[0]

    def terminal_values(self) -> tuple[Fraction, ...]:
        return tuple(self.values[n] for n in self.tree.terminal_nodes())

    def scale(self, factor: int | str | Fraction) -> "AdaptedProcess":
        f = frac(factor)
        if f < 0:
            raise PreconditionError("scale factor must be nonnegative")
        return AdaptedProcess(self.tree, tuple(f * v for v in self.values))

    def pointwise_mul(self, other: "AdaptedProcess") -> "AdaptedProcess":
        if other.tree != self.tree:
            raise PreconditionError("processes live on different trees")
        return AdaptedProcess(
            self.tree, tuple(a * b for a, b in zip(self.values, other.values))
        )

    def with_value(self, node: int, value: int | str | Fraction) -> "AdaptedProcess":
        vals = list(self.values)
        vals[node] = frac(value)
        return AdaptedProcess(self.tree, tuple(vals))


@dataclass(frozen=True)
class NonIncreasingProcess:
    """A process that starts at most at 1 and never increases along edges."""

    process: AdaptedProcess

    def __post_init__(self) -> None:
        p = self.process
        if p.initial > 1:
            raise PreconditionError("nonincreasing processes start at most at 1")
        for i in range(p.tree.num_nodes):
            par = p.tree.parent[i]
            if par is not None and p.values[i] > p.values[par]:
                raise PreconditionError(
                    f"value increases along the edge into {p.tree.labels[i]}"
                )

    @classmethod
    def constant(
        cls, tree: EventTree, value: int | str | Fraction
    ) -> "NonIncreasingProcess":
        return cls(AdaptedProcess.constant(tree, value))

    def __getitem__(self, node: int) -> Fraction:
        return self.process.values[node]


def is_supermartingale(y: AdaptedProcess) -> bool:
    """Exact one-step check at every non-terminal node."""
    tree = y.tree
    for n in tree.non_terminal_nodes():
        expected = sum(
            (tree.edge_prob[c] * y.values[c] for c in tree.children[n]), ZERO
        )
        if expected > y.values[n]:
            return False
    return True


def is_unit_supermartingale(y: AdaptedProcess) -> bool:
    """Supermartingale with initial value at most 1."""
    return y.initial <= 1 and is_supermartingale(y)


def is_martingale(y: AdaptedProcess) -> bool:
    tree = y.tree
    for n in tree.non_terminal_nodes():
        expected = sum(
            (tree.edge_prob[c] * y.values[c] for c in tree.children[n]), ZERO
        )
        if expected != y.values[n]:
            return False
    return True


def has_absorbed_zeros(y: AdaptedProcess) -> bool:
    """True iff a zero value forces zeros on the whole subtree below it."""
    tree = y.tree
    for n in range(tree.num_nodes):
        par = tree.parent[n]
        if par is not None and y.values[par] == 0 and y.values[n] != 0:
            return False
    return True


def zero_absorption_check(y: AdaptedProcess) -> bool:
    """Guard asserted before increments: zeros of a supermartingale absorb.

    For nonnegative supermartingales on trees whose transition
    probabilities are strictly positive this always holds; the
    supermartingale property itself is a precondition.
    """
    if not is_supermartingale(y):
        raise PreconditionError("zero-absorption guard expects a supermartingale")
    return has_absorbed_zeros(y)


def increment(y: AdaptedProcess, s: int, t: int, node_t: int) -> Fraction:
    """Multiplicative increment y(node_t) / y(ancestor at s), with 0/0 = 0.

    A same-time increment is 1 by convention, even at a zero of the
    process.
    """
    tree = y.tree
    if s > t:
        raise PreconditionError("need s <= t")
    if tree.time[node_t] != t:
        raise PreconditionError(f"{tree.labels[node_t]} is not a time-{t} node")
    if s == t:
        return ONE
    anc = tree.ancestor_at(node_t, s)
    num, den = y.values[node_t], y.values[anc]
    if den == 0:
        if num == 0:
            return ZERO
        raise PreconditionError(
            "increment undefined: zero followed by a positive value "
            f"({tree.labels[anc]} -> {tree.labels[node_t]})"
        )
    return num / den


def solid_multiply(y: AdaptedProcess, b: NonIncreasingProcess) -> AdaptedProcess:
    """Pointwise product with a nonincreasing process.

    Unit-initial supermartingales are stable under this, which is
    re-checked exactly on every call.
    """
    result = y.pointwise_mul(b.process)
    if is_unit_supermartingale(y) and not is_unit_supermartingale(result):
        raise PostconditionError("solid multiplication left the supermartingale class")
    return result


def fork_splice(
    y1: AdaptedProcess,
    y2: AdaptedProcess,
    y3: AdaptedProcess,
    s: int,
    weights: Mapping[int, int | str | Fraction] | int | str | Fraction,
) -> AdaptedProcess:
    """Splice ``y1``'s past with a weighted mix of the increments of
    ``y2`` and ``y3`` from time ``s`` on.

    ``weights`` assigns each time-``s`` node a value in [0, 1] (a scalar
    means the same weight everywhere); the result keeps ``y1`` strictly
    before ``s`` and below a time-``s`` node ``n`` equals
    ``y1(n) * (w(n) * inc(y2) + (1-w(n)) * inc(y3))``.  When all three
    inputs are unit-initial supermartingales the result is re-checked to
    be one as well.
    """
    tree = y1.tree
    if y2.tree != tree or y3.tree != tree:
        raise PreconditionError("processes live on different trees")
    if not 0 <= s <= tree.horizon:
        raise PreconditionError(f"splice time {s} outside 0..{tree.horizon}")
    fork_nodes = tree.nodes_at(s)
    if isinstance(weights, (int, str, Fraction)):
        wmap = {n: frac(weights) for n in fork_nodes}
    else:
        wmap = {n: frac(weights[n]) for n in fork_nodes if n in weights}
        missing = [n for n in fork_nodes if n not in wmap]
        if missing:
            raise PreconditionError(
                f"missing weights at time-{s} nodes {[tree.labels[n] for n in missing]}"
            )
    if any(not 0 <= w <= 1 for w in wmap.values()):
        raise PreconditionError("splice weights must lie in [0, 1]")
    for y in (y2, y3):
        if not has_absorbed_zeros(y):
            raise PreconditionError("splice branches must have absorbed zeros")

    vals = list(y1.values)
    for m in range(tree.num_nodes):
        t = tree.time[m]
        if t < s:
            continue
        n = tree.ancestor_at(m, s)
        w = wmap[n]
        vals[m] = y1.values[n] * (
            w * increment(y2, s, t, m) + (ONE - w) * increment(y3, s, t, m)
        )
    result = AdaptedProcess(tree, tuple(vals))
    if all(map(is_unit_supermartingale, (y1, y2, y3))):
        if not is_unit_supermartingale(result):
            raise PostconditionError("fork splice left the supermartingale class")
    return result


@dataclass(frozen=True)
class ProcessSet:
    """Finitely generated set of processes, with the far-reaching flag.

    The set denoted is the fork-convex, solid, closed hull of the
    generators; ``far_reaching`` records whether some generator is
    strictly positive at every terminal node (verified on construction).
    """

    generators: tuple[AdaptedProcess, ...]
    far_reaching: bool

    def __post_init__(self) -> None:
        if not self.generators:
            raise PreconditionError("at least one generator required")
        tree = self.generators[0].tree
        for g in self.generators:
            if g.tree != tree:
                raise PreconditionError("generators live on different trees")
        actual = any(
            all(v > 0 for v in g.terminal_values()) for g in self.generators
        )
        if actual != self.far_reaching:
            raise PreconditionError(
                f"far_reaching flag {self.far_reaching} does not match generators"
            )

    @classmethod
    def of(cls, *generators: AdaptedProcess) -> "ProcessSet":
        gens = tuple(generators)
        far = any(all(v > 0 for v in g.terminal_values()) for g in gens)
        return cls(gens, far)

    @property
    def tree(self) -> EventTree:
        return self.generators[0].tree

    def all_unit_supermartingales(self) -> bool:
        return all(is_unit_supermartingale(g) for g in self.generators)

    def max_initial(self) -> Fraction:
        return max(g.initial for g in self.generators)


# ---------------------------------------------------------------------------
# Random hull elements with replayable construction traces
# ---------------------------------------------------------------------------

Trace = tuple  # ("gen", i) | ("solid", sub, b_vals) | ("splice", a, b, c, s, w_items)


def random_unit_fraction(rng: random.Random, denominator_cap: int = 4) -> Fraction:
    den = rng.randint(1, denominator_cap)
    return Fraction(rng.randint(0, den), den)


def random_nonincreasing_process(
    rng: random.Random, tree: EventTree
) -> NonIncreasingProcess:
    vals = [ONE] * tree.num_nodes
    vals[0] = ONE - random_unit_fraction(rng, 3) / 2  # keep it in (0, 1] mostly
    for i in range(1, tree.num_nodes):
        par = tree.parent[i]
        vals[i] = vals[par] * (ONE - random_unit_fraction(rng, 3) / 3)
    return NonIncreasingProcess(AdaptedProcess(tree, tuple(vals)))


@dataclass(frozen=True)
class HullSample:
    process: AdaptedProcess
    trace: Trace


def random_hull_element(
    c: ProcessSet, depth: int, rng: random.Random | int
) -> HullSample:
    """Sample the fork-convex solid hull by composing the two hull moves.

    The returned trace replays to the identical element via
    :func:`replay_trace`, which is what makes any downstream
    counterexample reproducible.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    if depth < 0:
        raise PreconditionError("depth must be nonnegative")
    trace = _random_trace(c, depth, rng)
    return HullSample(replay_trace(c, trace), trace)


def _random_trace(c: ProcessSet, depth: int, rng: random.Random) -> Trace:
    if depth == 0:
        return ("gen", rng.randrange(len(c.generators)))
    kind = rng.choice(("solid", "splice"))
    if kind == "solid":
        b = random_nonincreasing_process(rng, c.tree)
        return ("solid", _random_trace(c, depth - 1, rng), b.process.values)
    s = rng.randint(0, c.tree.horizon)
    w_items = tuple(
        (n, random_unit_fraction(rng)) for n in c.tree.nodes_at(s)
    )
    return (
        "splice",
        _random_trace(c, depth - 1, rng),
        _random_trace(c, depth - 1, rng),
        _random_trace(c, depth - 1, rng),
        s,
        w_items,
    )


def replay_trace(c: ProcessSet, trace: Trace) -> AdaptedProcess:
    kind = trace[0]
    if kind == "gen":
        return c.generators[trace[1]]
    if kind == "solid":
        sub = replay_trace(c, trace[1])
        b = NonIncreasingProcess(AdaptedProcess(c.tree, tuple(trace[2])))
        return solid_multiply(sub, b)
    if kind == "splice":
        y1 = replay_trace(c, trace[1])
        y2 = replay_trace(c, trace[2])
        y3 = replay_trace(c, trace[3])
        return fork_splice(y1, y2, y3, trace[4], dict(trace[5]))
    raise PreconditionError(f"unknown trace node {kind!r}")
