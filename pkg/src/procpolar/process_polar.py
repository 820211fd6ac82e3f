"""Process polars and bipolars on event trees, with two independent oracles.

The polar of a generated process set consists of all nonnegative processes
whose product with every generator is a supermartingale starting at most
at 1; its H-representation is one linear row per generator and node.  The
bipolar (polar of the polar) is decided two ways that share only the LP
core:

* the direct way -- one LP per node maximizing the supermartingale defect
  of the candidate's product over the polar polyhedron;
* the incremental way -- the candidate's initial value must lie in the
  interval of hull initial values, and each of its one-step multiplicative
  increments must lie in the conditional bipolar of the generators'
  one-step increments (a per-step question answered by the random-variable
  theory).

The promise under test everywhere: on far-reaching sets of unit-initial
supermartingales the two oracles agree, and everything built from the
generators by fork-splicing and solid multiplication is a member.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import PostconditionError, PreconditionError
from .exact_lp import (
    LE,
    LinearConstraint,
    LinearSystem,
    LpStatus,
    maximize,
)
from .processes import (
    AdaptedProcess,
    HullSample,
    ProcessSet,
    has_absorbed_zeros,
    increment,
    is_supermartingale,
)
from .rv_polar import RvSet, conditional_bipolar_contains, conditional_polar_constraints
from .tree import EventTree, RandomVariable, level_partition, level_space

ZERO = Fraction(0)
ONE = Fraction(1)


def polar_constraints(c: ProcessSet) -> LinearSystem:
    """H-representation of the process polar over node variables.

    Y >= 0 everywhere; for each generator X the product XY starts at most
    at 1 and its one-step conditional expectation never increases.
    Generators suffice because every hull operation preserves the
    product-supermartingale property.
    """
    tree = c.tree
    n_vars = tree.num_nodes
    rows: list[LinearConstraint] = []
    for gi, x in enumerate(c.generators):
        coeffs = [ZERO] * n_vars
        coeffs[0] = x.initial
        rows.append(LinearConstraint(tuple(coeffs), LE, ONE, f"init[gen{gi}]"))
        for n in tree.non_terminal_nodes():
            coeffs = [ZERO] * n_vars
            coeffs[n] = -x.values[n]
            for ch in tree.children[n]:
                coeffs[ch] = tree.edge_prob[ch] * x.values[ch]
            rows.append(
                LinearConstraint(
                    tuple(coeffs), LE, ZERO, f"super[gen{gi}@{tree.labels[n]}]"
                )
            )
    return LinearSystem.make(
        n_vars, rows, lower=0, var_names=[f"Y({lab})" for lab in tree.labels]
    )


def polar_contains(c: ProcessSet, y: AdaptedProcess) -> bool:
    """Exact substitution into the polar constraints."""
    if y.tree != c.tree:
        raise PreconditionError("candidate lives on a different tree")
    return polar_constraints(c).satisfied_by(y.values)


@dataclass(frozen=True)
class ProcessBipolarMembership:
    member: bool
    reason: str = ""
    # a polar element whose product with the candidate fails (direct oracle)
    witness: Optional[AdaptedProcess] = None
    # the time step and increment witness (incremental oracle)
    step: Optional[int] = None

    def __bool__(self) -> bool:
        return self.member


def _require_far_reaching(c: ProcessSet, require: bool) -> None:
    if require and not c.far_reaching:
        raise PreconditionError(
            "the bipolar oracles assume a far-reaching generator set; "
            "pass require_far_reaching=False to explore without it"
        )


def bipolar_contains_lp(
    c: ProcessSet, z: AdaptedProcess, require_far_reaching: bool = True
) -> ProcessBipolarMembership:
    """Direct bipolar membership: per-node maximization over the polar.

    ``z`` belongs iff the maximal initial product over the polar stays
    below 1 and, at every non-terminal node, the maximal supermartingale
    defect of the product stays below 0.  An unbounded maximum counts as a
    violation; the maximizer (or a point far along the ray) is the
    certificate.
    """
    if z.tree != c.tree:
        raise PreconditionError("candidate lives on a different tree")
    _require_far_reaching(c, require_far_reaching)
    tree = c.tree
    polar = polar_constraints(c)

    objective = [ZERO] * tree.num_nodes
    objective[0] = z.initial
    bad = _violating_max(polar, objective, ONE, tree)
    if bad is not None:
        return ProcessBipolarMembership(
            False, reason="initial product exceeds 1", witness=bad
        )
    for n in tree.non_terminal_nodes():
        objective = [ZERO] * tree.num_nodes
        objective[n] = -z.values[n]
        for ch in tree.children[n]:
            objective[ch] = tree.edge_prob[ch] * z.values[ch]
        bad = _violating_max(polar, objective, ZERO, tree)
        if bad is not None:
            return ProcessBipolarMembership(
                False,
                reason=f"supermartingale defect at {tree.labels[n]}",
                witness=bad,
            )
    return ProcessBipolarMembership(True)


def _violating_max(
    polar: LinearSystem,
    objective: Sequence[Fraction],
    bound: Fraction,
    tree: EventTree,
) -> Optional[AdaptedProcess]:
    out = maximize(polar, objective)
    if out.status is LpStatus.UNBOUNDED:
        assert out.point is not None and out.ray is not None
        step = ONE
        gain = sum(o * r for o, r in zip(objective, out.ray))
        current = sum(o * p for o, p in zip(objective, out.point))
        if current + gain <= bound:  # walk far enough to break the bound
            step = (bound + 1 - current) / gain
        point = tuple(p + step * r for p, r in zip(out.point, out.ray))
        return AdaptedProcess(tree, point)
    assert out.value is not None and out.point is not None
    if out.value > bound:
        return AdaptedProcess(tree, out.point)
    return None


# ---------------------------------------------------------------------------
# Increment sets and the incremental oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncrementSet:
    """One-step increments of the generators, as a conditional rv problem.

    Outcomes are the time-(t+1) nodes, the partition groups them by their
    time-t parent, and each generator contributes its multiplicative
    increment as a random variable.
    """

    t_from: int
    t_to: int
    rv_set: RvSet


def increment_set(c: ProcessSet, t_from: int) -> IncrementSet:
    tree = c.tree
    if not 0 <= t_from < tree.horizon:
        raise PreconditionError("increment step needs t_from < horizon")
    for g in c.generators:
        if not has_absorbed_zeros(g):
            raise PreconditionError("generators must have absorbed zeros")
    t_to = t_from + 1
    space = level_space(tree, t_to)
    part = level_partition(tree, t_to, t_from)
    gens = tuple(
        RandomVariable(
            space, tuple(increment(g, t_from, t_to, m) for m in space.outcomes)
        )
        for g in c.generators
    )
    return IncrementSet(t_from, t_to, RvSet(gens, part))


def increment_conditional_polar(c: ProcessSet, t_from: int) -> LinearSystem:
    """Conditional polar constraints of the one-step increment set."""
    return conditional_polar_constraints(increment_set(c, t_from).rv_set)


def bipolar_contains_incremental(
    c: ProcessSet, z: AdaptedProcess, require_far_reaching: bool = True
) -> ProcessBipolarMembership:
    """Bipolar membership via initial value plus stepwise increments.

    The hull's initial values form the interval from 0 to the largest
    generator initial value; beyond that, membership is equivalent to each
    one-step increment of ``z`` lying in the conditional bipolar of the
    generators' increments.  Independent of the direct oracle by
    construction.
    """
    if z.tree != c.tree:
        raise PreconditionError("candidate lives on a different tree")
    _require_far_reaching(c, require_far_reaching)
    if not c.all_unit_supermartingales():
        raise PreconditionError(
            "the incremental oracle needs unit-initial supermartingale generators"
        )
    if not has_absorbed_zeros(z):
        raise PreconditionError(
            "candidate must have absorbed zeros (its increments are undefined)"
        )
    if z.initial > c.max_initial():
        return ProcessBipolarMembership(
            False, reason="initial value above every hull element"
        )
    tree = c.tree
    for t in range(tree.horizon):
        inc = increment_set(c, t)
        space = inc.rv_set.space
        dz = RandomVariable(
            space, tuple(increment(z, t, t + 1, m) for m in space.outcomes)
        )
        verdict = conditional_bipolar_contains(inc.rv_set, dz)
        if not verdict:
            return ProcessBipolarMembership(
                False,
                reason=f"step {t}->{t + 1} increment outside the conditional bipolar",
                step=t,
            )
    return ProcessBipolarMembership(True)


# ---------------------------------------------------------------------------
# Supermartingale envelope of a future payoff over the hull
# ---------------------------------------------------------------------------


def envelope_process(
    c: ProcessSet, g: RandomVariable, t_from: int, t_to: int
) -> AdaptedProcess:
    """Largest expected payoff of ``g`` over hull increments, as a process.

    ``g`` lives on the time-``t_to`` nodes.  Backward recursion: at each
    node take the best one-step generator increment of the next-step
    envelope; before ``t_from`` the process is 1, from ``t_to`` on it is
    ``g``.  Requires the computed time-``t_from`` values to stay below 1;
    the product with every generator is re-checked to be a
    supermartingale.
    """
    tree = c.tree
    if not 0 <= t_from <= t_to <= tree.horizon:
        raise PreconditionError("need 0 <= t_from <= t_to <= horizon")
    if g.space != level_space(tree, t_to):
        raise PreconditionError("payoff must live on the time-t_to nodes")
    for y in c.generators:
        if not is_supermartingale(y):
            raise PreconditionError("envelope needs supermartingale generators")

    best: dict[int, Fraction] = {m: g[m] for m in tree.nodes_at(t_to)}
    for t in range(t_to - 1, t_from - 1, -1):
        for n in tree.nodes_at(t):
            candidates = []
            for y in c.generators:
                if y.values[n] == 0:
                    candidates.append(ZERO)
                    continue
                total = ZERO
                for ch in tree.children[n]:
                    total += (
                        tree.edge_prob[ch]
                        * (y.values[ch] / y.values[n])
                        * best[ch]
                    )
                candidates.append(total)
            best[n] = max(candidates)
    for n in tree.nodes_at(t_from):
        if best[n] > 1:
            raise PreconditionError(
                f"envelope hypothesis fails: value {best[n]} > 1 at {tree.labels[n]}"
            )

    vals = [ONE] * tree.num_nodes
    for m in range(tree.num_nodes):
        t = tree.time[m]
        if t < t_from:
            continue
        if t <= t_to:
            vals[m] = best[m] if t >= t_from else ONE
        else:
            vals[m] = g[tree.ancestor_at(m, t_to)]
    result = AdaptedProcess(tree, tuple(vals))
    for y in c.generators:
        if not is_supermartingale(result.pointwise_mul(y)):
            raise PostconditionError("envelope product lost the supermartingale property")
    return result


# ---------------------------------------------------------------------------
# Polar sampling and the dual-oracle verification report
# ---------------------------------------------------------------------------


def sample_polar_elements(
    c: ProcessSet, count: int, rng: random.Random | int
) -> list[AdaptedProcess]:
    """Vertices of the polar polyhedron under random objectives, plus
    midpoints of consecutive samples (the polar is convex)."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    polar = polar_constraints(c)
    n = c.tree.num_nodes
    points: list[tuple[Fraction, ...]] = []
    guard = 0
    while len(points) < count and guard < 20 * count + 20:
        guard += 1
        objective = [Fraction(rng.randint(-2, 3)) for _ in range(n)]
        out = maximize(polar, objective)
        if out.status is LpStatus.INFEASIBLE:
            raise PostconditionError("a polar is never empty (0 belongs)")
        assert out.point is not None
        points.append(out.point)
        if len(points) >= 2 and len(points) < count:
            mid = tuple(
                (a + b) / 2 for a, b in zip(points[-1], points[-2])
            )
            points.append(mid)
    return [AdaptedProcess(c.tree, p) for p in points[:count]]


@dataclass(frozen=True)
class ProbeRecord:
    kind: str  # "probe" | "hull"
    lp_member: Optional[bool]
    incremental_member: Optional[bool]
    note: str
    ok: bool


@dataclass(frozen=True)
class BipolarAgreementReport:
    records: tuple[ProbeRecord, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.records)

    def counts(self) -> tuple[int, int]:
        good = sum(1 for r in self.records if r.ok)
        return good, len(self.records)


def verify_process_bipolar(
    c: ProcessSet,
    probes: Sequence[AdaptedProcess] = (),
    hull_probes: Sequence[AdaptedProcess | HullSample] = (),
    require_far_reaching: bool = True,
) -> BipolarAgreementReport:
    """Run both bipolar oracles on every probe and report agreement.

    Hull-constructed probes must additionally be members according to
    both.  Probes without absorbed zeros cannot feed the incremental
    oracle; for those the direct oracle must reject (the bipolar contains
    only supermartingales, whose zeros absorb), which is recorded as its
    own check.  With ``require_far_reaching=False`` the report is
    exploratory: disagreements are recorded, never raised.
    """
    records: list[ProbeRecord] = []

    def run(z: AdaptedProcess, kind: str) -> None:
        lp = bipolar_contains_lp(c, z, require_far_reaching)
        if not has_absorbed_zeros(z):
            ok = not lp.member
            records.append(
                ProbeRecord(kind, lp.member, None, "no absorbed zeros", ok)
            )
            return
        inc = bipolar_contains_incremental(c, z, require_far_reaching)
        ok = lp.member == inc.member
        note = ""
        if kind == "hull":
            ok = ok and lp.member
            note = "hull element"
        records.append(ProbeRecord(kind, lp.member, inc.member, note, ok))

    for z in probes:
        run(z, "probe")
    for h in hull_probes:
        z = h.process if isinstance(h, HullSample) else h
        run(z, "hull")
    return BipolarAgreementReport(tuple(records))
