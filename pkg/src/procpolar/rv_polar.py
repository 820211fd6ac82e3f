"""Conditional polar and bipolar theory for nonnegative random variables.

A set of nonnegative random variables is represented by finitely many
generators together with a conditioning partition.  The set it denotes is
the smallest blockwise-convex, solid (downward closed) and closed set
containing the generators; on a finite sample space that hull is the
polyhedron

    { h >= 0 : for every block B there are convex weights w with
               h <= sum_i w_i * f_i  pointwise on B }.

The conditional polar consists of all g >= 0 whose blockwise products with
every generator average to at most 1 on each block; the conditional
bipolar is the polar of the polar.  Both membership questions reduce to
one small exact LP per block, and the central fact being exercised by the
test-suite is that hull membership and bipolar membership always agree.

Everything uses the convention 0/0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import PostconditionError, PreconditionError
from .exact_lp import (
    GE,
    LE,
    LinearConstraint,
    LinearSystem,
    LpStatus,
    maximize,
    minimize,
)
from .tree import Partition, RandomVariable, cond_exp_partition

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class RvSet:
    """Finitely generated set of nonnegative random variables.

    The generators are understood up to blockwise mixing, downward closure
    and topological closure with respect to the partition.
    """

    generators: tuple[RandomVariable, ...]
    partition: Partition

    def __post_init__(self) -> None:
        if not self.generators:
            raise PreconditionError("at least one generator required")
        for g in self.generators:
            if g.space != self.partition.space:
                raise PreconditionError("generator lives on a different space")

    @property
    def space(self):
        return self.partition.space


@dataclass(frozen=True)
class PartitionUnitBall:
    """Nonnegative block-constant random variables with expectation <= 1."""

    partition: Partition

    def contains(self, rv: RandomVariable) -> bool:
        return self.partition.is_measurable(rv) and rv.expectation() <= 1


def partition_mix(
    f: RandomVariable, g: RandomVariable, weight: RandomVariable, partition: Partition
) -> RandomVariable:
    """Blockwise convex combination ``weight*f + (1-weight)*g``.

    The weight must be constant on each block and take values in [0, 1].
    """
    if not partition.is_measurable(weight):
        raise PreconditionError("mixing weight is not block-constant")
    if any(v > 1 for v in weight.values):
        raise PreconditionError("mixing weight outside [0, 1]")
    space = partition.space
    vals = tuple(
        weight.values[i] * f.values[i] + (ONE - weight.values[i]) * g.values[i]
        for i in range(space.size)
    )
    return RandomVariable(space, vals)


# ---------------------------------------------------------------------------
# Conditional polar
# ---------------------------------------------------------------------------


def conditional_polar_constraints(c: RvSet) -> LinearSystem:
    """H-representation of the conditional polar of the generator hull.

    Variables are the candidate-g coordinates (one per outcome) with lower
    bound 0; one row per generator and block bounds the blockwise average
    of the product by the block probability.  Generators suffice: mixing,
    solidity and closure all preserve these inequalities.
    """
    space = c.space
    rows: list[LinearConstraint] = []
    for gi, f in enumerate(c.generators):
        for bi, block in enumerate(c.partition.blocks):
            coeffs = [ZERO] * space.size
            for w in block:
                i = space.index(w)
                coeffs[i] = space.probs[i] * f.values[i]
            rows.append(
                LinearConstraint(
                    tuple(coeffs),
                    LE,
                    c.partition.block_prob(block),
                    f"gen[{gi}]*block[{bi}]",
                )
            )
    return LinearSystem.make(
        space.size,
        rows,
        lower=0,
        var_names=[f"g({w})" for w in space.outcomes],
    )


def conditional_polar_contains(c: RvSet, g: RandomVariable) -> bool:
    """Exact substitution of ``g`` into the conditional polar constraints."""
    if g.space != c.space:
        raise PreconditionError("candidate lives on a different space")
    return conditional_polar_constraints(c).satisfied_by(g.values)


# ---------------------------------------------------------------------------
# Hull membership (the primal side)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullMembership:
    member: bool
    # per block: convex weights over the generators when member,
    # the index of a block with no dominating mixture otherwise
    block_weights: Optional[tuple[tuple[Fraction, ...], ...]] = None
    failing_block: Optional[int] = None

    def __bool__(self) -> bool:
        return self.member


def hull_contains(c: RvSet, h: RandomVariable) -> HullMembership:
    """Decide membership in the blockwise-convex solid closed hull.

    One feasibility LP per block: convex weights over the generators whose
    mixture dominates ``h`` on the block.  On a finite space the hull is
    already closed, so this is the whole story; the weights are the
    certificate.
    """
    if h.space != c.space:
        raise PreconditionError("candidate lives on a different space")
    space = c.space
    k = len(c.generators)
    weights: list[tuple[Fraction, ...]] = []
    for bi, block in enumerate(c.partition.blocks):
        rows = [
            LinearConstraint((ONE,) * k, "=", ONE, "convex"),
        ]
        for w in block:
            i = space.index(w)
            coeffs = tuple(f.values[i] for f in c.generators)
            rows.append(LinearConstraint(coeffs, GE, h.values[i], f"dominate({w})"))
        sys_ = LinearSystem.make(k, rows, lower=0)
        out = minimize(sys_, [0] * k)
        if out.status is LpStatus.INFEASIBLE:
            return HullMembership(False, failing_block=bi)
        assert out.point is not None
        weights.append(out.point)
    return HullMembership(True, block_weights=tuple(weights))


# ---------------------------------------------------------------------------
# Bipolar membership (the dual side)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BipolarMembership:
    member: bool
    # when not a member: a polar element gg and the block where E[h*gg|block]
    # exceeds 1 (gg is zero off that block), or a growth ray if unbounded
    failing_block: Optional[int] = None
    witness: Optional[RandomVariable] = None

    def __bool__(self) -> bool:
        return self.member


def conditional_bipolar_contains(c: RvSet, h: RandomVariable) -> BipolarMembership:
    """Decide membership in the conditional bipolar by blockwise LPs.

    ``h`` belongs iff for every block the maximum of the blockwise average
    of ``h*g`` over polar elements ``g`` stays below the block probability.
    The polar constraints decouple across blocks, so each LP only carries
    the block's own coordinates; an unbounded maximum counts as a
    violation and the certificate is a polar element witnessing it.
    """
    if h.space != c.space:
        raise PreconditionError("candidate lives on a different space")
    space = c.space
    for bi, block in enumerate(c.partition.blocks):
        idx = [space.index(w) for w in block]
        pb = c.partition.block_prob(block)
        rows = []
        for gi, f in enumerate(c.generators):
            rows.append(
                LinearConstraint(
                    tuple(space.probs[i] * f.values[i] for i in idx),
                    LE,
                    pb,
                    f"gen[{gi}]",
                )
            )
        sys_ = LinearSystem.make(len(idx), rows, lower=0)
        objective = [space.probs[i] * h.values[i] for i in idx]
        out = maximize(sys_, objective)
        if out.status is LpStatus.UNBOUNDED:
            assert out.point is not None and out.ray is not None
            # step far enough along the improving ray to break the bound
            gain = sum(o * r for o, r in zip(objective, out.ray))
            current = sum(o * p for o, p in zip(objective, out.point))
            step = ONE if current + gain > pb else (pb + 1 - current) / gain
            local = [p + step * r for p, r in zip(out.point, out.ray)]
            witness = _embed_block(space, idx, local)
            return BipolarMembership(False, failing_block=bi, witness=witness)
        assert out.value is not None and out.point is not None
        if out.value > pb:
            witness = _embed_block(space, idx, out.point)
            return BipolarMembership(False, failing_block=bi, witness=witness)
    return BipolarMembership(True)


def _embed_block(space, idx: Sequence[int], local: Sequence[Fraction]) -> RandomVariable:
    vals = [ZERO] * space.size
    for i, v in zip(idx, local):
        vals[i] = v
    return RandomVariable(space, tuple(vals))


# ---------------------------------------------------------------------------
# Product decomposition and pairwise maxima (proof machinery, kept exact)
# ---------------------------------------------------------------------------


def product_decompose(
    c: RvSet, f: RandomVariable, ball_elem: RandomVariable
) -> tuple[RandomVariable, RandomVariable]:
    """Factor ``f * l`` as ``h * k`` with ``h`` in the hull and ``k`` in the
    unit ball, for ``f`` in the bipolar and ``l`` in the unit ball.

    Per block: scale ``l`` by the smallest factor >= 1 pulling ``f`` under
    the hull's per-block upper envelope, then divide (0/0 = 0).  Failure of
    the budget check E[k] <= 1 cannot happen for valid inputs and is
    surfaced as a defect.
    """
    ball = PartitionUnitBall(c.partition)
    if not ball.contains(ball_elem):
        raise PreconditionError("second argument must lie in the unit ball")
    if not conditional_bipolar_contains(c, f):
        raise PreconditionError("first argument must lie in the conditional bipolar")
    space = c.space
    ngen = len(c.generators)
    k_vals = [ZERO] * space.size
    h_vals = [ZERO] * space.size
    for block in c.partition.blocks:
        idx = [space.index(w) for w in block]
        lval = ball_elem.values[idx[0]]
        if lval == 0:
            continue  # k = 0, h = 0 on this block (0/0 = 0)
        # smallest total weight whose generator mixture dominates f on the block
        rows = [
            LinearConstraint(
                tuple(g.values[i] for g in c.generators),
                GE,
                f.values[i],
                f"dominate({space.outcomes[i]})",
            )
            for i in idx
        ]
        out = minimize(LinearSystem.make(ngen, rows, lower=0), [1] * ngen)
        if out.status is not LpStatus.OPTIMAL:
            raise PostconditionError(
                "no generator mixture dominates a bipolar element on a block"
            )
        ratio = max(ONE, out.value)
        for i in idx:
            k_vals[i] = lval * ratio
            h_vals[i] = f.values[i] * lval / k_vals[i]
    h = RandomVariable(space, tuple(h_vals))
    k = RandomVariable(space, tuple(k_vals))
    if k.expectation() > 1:
        raise PostconditionError("decomposition weight left the unit ball")
    if not ball.contains(k):
        raise PostconditionError("decomposition weight is not block-constant")
    if not hull_contains(c, h):
        raise PostconditionError("decomposition factor left the hull")
    if f.pointwise_mul(ball_elem) != h.pointwise_mul(k):
        raise PostconditionError("decomposition does not reproduce the product")
    return h, k


def _max_compatible(
    c: RvSet, f: RandomVariable, h: RandomVariable
) -> tuple[str, ...]:
    """Why ``h`` fails the maximization-compatibility conditions, if at all.

    The conditions: ``h`` in the hull, ``h`` vanishes wherever ``f`` does,
    and f*E[h|blocks] == h*E[f|blocks] pointwise.
    """
    problems: list[str] = []
    if not hull_contains(c, h):
        problems.append("not in the hull")
    for i in range(c.space.size):
        if f.values[i] == 0 and h.values[i] != 0:
            problems.append(f"does not vanish where f does ({c.space.outcomes[i]})")
            break
    ef = cond_exp_partition(f, c.partition)
    eh = cond_exp_partition(h, c.partition)
    if f.pointwise_mul(eh) != h.pointwise_mul(ef):
        problems.append("blockwise-expectation identity fails")
    return tuple(problems)


def pairwise_max_closure(
    c: RvSet, f: RandomVariable, candidates: Sequence[RandomVariable]
) -> RandomVariable:
    """Pointwise maximum of maximization-compatible elements.

    Each input must satisfy the compatibility conditions with respect to
    ``f``; the result is their pointwise maximum, which is checked to
    satisfy them again (it is the blockwise selection of the larger
    conditional expectation, hence stays in the hull).
    """
    if not candidates:
        raise PreconditionError("need at least one candidate")
    for h in candidates:
        problems = _max_compatible(c, f, h)
        if problems:
            raise PreconditionError(f"candidate fails compatibility: {problems}")
    result = candidates[0]
    for h in candidates[1:]:
        result = result.pointwise_max(h)
    problems = _max_compatible(c, f, result)
    if problems:
        raise PostconditionError(
            f"pointwise maximum left the compatible family: {problems}"
        )
    return result


# ---------------------------------------------------------------------------
# Unconditional (one-block) theory, implemented directly as a cross-check
# ---------------------------------------------------------------------------


def unconditional_polar_constraints(
    generators: Sequence[RandomVariable],
) -> LinearSystem:
    """Polar of a set of nonnegative rvs: E[f*g] <= 1 per generator."""
    if not generators:
        raise PreconditionError("at least one generator required")
    space = generators[0].space
    rows = [
        LinearConstraint(
            tuple(p * v for p, v in zip(space.probs, f.values)), LE, ONE, f"gen[{i}]"
        )
        for i, f in enumerate(generators)
    ]
    return LinearSystem.make(space.size, rows, lower=0)


def unconditional_bipolar_contains(
    generators: Sequence[RandomVariable], h: RandomVariable
) -> bool:
    """max E[h*g] over the polar, compared against 1."""
    sys_ = unconditional_polar_constraints(generators)
    space = generators[0].space
    out = maximize(sys_, [p * v for p, v in zip(space.probs, h.values)])
    if out.status is LpStatus.UNBOUNDED:
        return False
    assert out.value is not None
    return out.value <= 1


def unconditional_hull_contains(
    generators: Sequence[RandomVariable], h: RandomVariable
) -> bool:
    """One global convex weight vector whose mixture dominates ``h``."""
    space = generators[0].space
    k = len(generators)
    rows = [LinearConstraint((ONE,) * k, "=", ONE, "convex")]
    for i in range(space.size):
        rows.append(
            LinearConstraint(
                tuple(f.values[i] for f in generators), GE, h.values[i], f"dom({i})"
            )
        )
    out = minimize(LinearSystem.make(k, rows, lower=0), [0] * k)
    return out.status is not LpStatus.INFEASIBLE
