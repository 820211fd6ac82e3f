import random
from fractions import Fraction as F

import pytest

from procpolar.errors import PreconditionError
from procpolar.fuzz import (
    conditional_probes,
    random_partition,
    random_rv,
    random_rvset,
    random_space,
)
from procpolar.rv_polar import (
    PartitionUnitBall,
    RvSet,
    conditional_bipolar_contains,
    conditional_polar_constraints,
    conditional_polar_contains,
    hull_contains,
    pairwise_max_closure,
    partition_mix,
    product_decompose,
    unconditional_bipolar_contains,
    unconditional_hull_contains,
)
from procpolar.tree import Partition, RandomVariable, terminal_space


@pytest.fixture
def four(t2):
    """Uniform 4-point space with blocks {uu,ud}, {du,dd} and f=(1,1,2,2)."""
    space = terminal_space(t2)
    part = Partition.from_blocks(space, [(3, 4), (5, 6)])
    f = RandomVariable(space, (F(1), F(1), F(2), F(2)))
    return space, part, RvSet((f,), part)


def test_partition_mix_degenerate(four):
    space, part, c = four
    f = c.generators[0]
    g = RandomVariable.zero(space)
    one = RandomVariable.constant(space, 1)
    assert partition_mix(f, g, one, part) == f


def test_partition_mix_midpoint(t1):
    space = terminal_space(t1)
    part = Partition.trivial(space)
    f = RandomVariable(space, (F(2), F(0)))
    g = RandomVariable(space, (F(0), F(2)))
    half = RandomVariable.constant(space, "1/2")
    assert partition_mix(f, g, half, part).values == (F(1), F(1))


def test_partition_mix_per_block_selection(four):
    space, part, _ = four
    w = RandomVariable(space, (F(1), F(1), F(0), F(0)))
    f = RandomVariable.constant(space, 4)
    g = RandomVariable.zero(space)
    assert partition_mix(f, g, w, part).values == (F(4), F(4), F(0), F(0))


def test_partition_mix_rejects_non_measurable(four):
    space, part, _ = four
    w = RandomVariable(space, (F(1), F(0), F(0), F(0)))
    with pytest.raises(PreconditionError):
        partition_mix(w, w, w, part)


def test_polar_constraints_unit_generator(t1):
    # polar of {1} with the trivial partition: the unit ball of averages
    space = terminal_space(t1)
    c = RvSet((RandomVariable.constant(space, 1),), Partition.trivial(space))
    system = conditional_polar_constraints(c)
    assert system.satisfied_by((F(2), F(0)))
    assert system.satisfied_by((F(1), F(1)))
    assert not system.satisfied_by((F(2), F(1)))


def test_polar_membership_examples(four):
    space, part, c = four
    assert conditional_polar_contains(c, RandomVariable.zero(space))
    assert conditional_polar_contains(c, RandomVariable(space, (F(2), F(0), F(0), F(0))))
    assert not conditional_polar_contains(c, RandomVariable(space, (F(0), F(0), F(2), F(0))))


def test_hull_membership_examples(four):
    space, part, c = four
    f = c.generators[0]
    assert hull_contains(c, f)
    assert hull_contains(c, RandomVariable(space, (F(1), F(0), F(2), F(0))))
    beyond = RandomVariable(space, (F(1), F(1), F(2), F(3)))
    verdict = hull_contains(c, beyond)
    assert not verdict and verdict.failing_block == 1


def test_hull_certificate_weights(four):
    space, part, c = four
    verdict = hull_contains(c, c.generators[0])
    assert verdict.block_weights == ((F(1),), (F(1),))


def test_bipolar_membership_examples(four):
    space, part, c = four
    assert conditional_bipolar_contains(c, RandomVariable.zero(space))
    assert conditional_bipolar_contains(c, RandomVariable(space, (F(1), F(1), F(2), F(2))))
    probe = RandomVariable(space, (F(1), F(1), F(2), F(5, 2)))
    out = conditional_bipolar_contains(c, probe)
    assert not out
    # the witness is a polar element whose block average against the probe exceeds 1
    assert out.witness is not None and conditional_polar_contains(c, out.witness)
    block = part.blocks[out.failing_block]
    pairing = sum(space.prob(w) * probe[w] * out.witness[w] for w in block)
    assert pairing > part.block_prob(block)


def test_bipolar_witness_when_polar_is_unbounded(t2):
    # a generator vanishing at an outcome leaves the polar unbounded there;
    # the returned witness must still violate the pairing bound exactly
    space = terminal_space(t2)
    part = Partition.from_blocks(space, [(3, 4), (5, 6)])
    f = RandomVariable(space, (F(1), F(0), F(2), F(2)))
    c = RvSet((f,), part)
    probe = RandomVariable(space, (F(0), F(1), F(0), F(0)))
    out = conditional_bipolar_contains(c, probe)
    assert not out
    assert out.witness is not None and conditional_polar_contains(c, out.witness)
    block = part.blocks[out.failing_block]
    pairing = sum(space.prob(w) * probe[w] * out.witness[w] for w in block)
    assert pairing > part.block_prob(block)


def test_unit_ball(four):
    space, part, _ = four
    ball = PartitionUnitBall(part)
    assert ball.contains(RandomVariable(space, (F(2), F(2), F(0), F(0))))
    assert not ball.contains(RandomVariable(space, (F(2), F(0), F(0), F(0))))
    assert not ball.contains(RandomVariable.constant(space, 2))


def test_product_decompose_identity(four):
    space, part, c = four
    f = c.generators[0]
    one = RandomVariable.constant(space, 1)
    h, k = product_decompose(c, f, one)
    assert h == f and k == one


def test_product_decompose_block_support(four):
    space, part, c = four
    f = c.generators[0]
    l = RandomVariable(space, (F(2), F(2), F(0), F(0)))
    h, k = product_decompose(c, f, l)
    assert k == l
    assert h.values == (F(1), F(1), F(0), F(0))
    assert f.pointwise_mul(l) == h.pointwise_mul(k)


def test_product_decompose_zero(four):
    space, part, c = four
    zero = RandomVariable.zero(space)
    l = RandomVariable(space, (F(2), F(2), F(0), F(0)))
    h, k = product_decompose(c, zero, l)
    assert h == zero


def test_pairwise_max_single(t1):
    space = terminal_space(t1)
    part = Partition.trivial(space)
    c = RvSet(
        (RandomVariable(space, (F(2), F(0))), RandomVariable(space, (F(0), F(2)))),
        part,
    )
    f = RandomVariable(space, (F(1), F(0)))
    h1 = RandomVariable(space, (F(2), F(0)))
    hmax = pairwise_max_closure(c, f, [h1])
    assert hmax == h1
    assert hmax.dominates(f)  # membership of f follows by solidity


def test_pairwise_max_monotone(four):
    space, part, c = four
    f = c.generators[0]
    h1 = f.scale("1/2")
    h2 = f
    assert pairwise_max_closure(c, f, [h1, h2]) == h2


def test_pairwise_max_rejects_bad_candidate(four):
    space, part, c = four
    f = c.generators[0]
    bad = RandomVariable(space, (F(1), F(0), F(0), F(0)))  # identity fails
    with pytest.raises(PreconditionError):
        pairwise_max_closure(c, f, [bad])


def test_trivial_partition_matches_unconditional():
    rng = random.Random(17)
    for _ in range(30):
        space = random_space(rng, 5)
        c = random_rvset(rng, space, Partition.trivial(space), 3)
        probe = random_rv(rng, space)
        assert bool(hull_contains(c, probe)) == unconditional_hull_contains(
            c.generators, probe
        )
        assert bool(
            conditional_bipolar_contains(c, probe)
        ) == unconditional_bipolar_contains(c.generators, probe)


def _two_generator_hull_by_intervals(c: RvSet, h: RandomVariable) -> bool:
    """Closed-form hull membership for exactly two generators.

    On each block, a dominating mixture w*f1 + (1-w)*f2 >= h exists iff the
    per-outcome feasibility intervals for w intersect [0, 1]; pure interval
    arithmetic, no LP involved.
    """
    f1, f2 = c.generators
    for block in c.partition.blocks:
        lo, hi = F(0), F(1)
        for outcome in block:
            i = c.space.index(outcome)
            slope = f1.values[i] - f2.values[i]
            gap = h.values[i] - f2.values[i]
            if slope == 0:
                if gap > 0:
                    return False
            elif slope > 0:
                lo = max(lo, gap / slope)
            else:
                hi = min(hi, gap / slope)
        if lo > hi:
            return False
    return True


def test_two_generator_hull_matches_interval_form():
    rng = random.Random(77)
    for _ in range(40):
        space = random_space(rng, 6)
        part = random_partition(rng, space, 3)
        c = RvSet((random_rv(rng, space), random_rv(rng, space)), part)
        for probe, _ in conditional_probes(rng, c, 6, F(1, 1000)):
            expected = _two_generator_hull_by_intervals(c, probe)
            assert bool(hull_contains(c, probe)) == expected
            assert bool(conditional_bipolar_contains(c, probe)) == expected


def test_oracles_agree_on_random_instances():
    rng = random.Random(5)
    for _ in range(25):
        space = random_space(rng, 6)
        part = random_partition(rng, space, 3)
        c = random_rvset(rng, space, part, 4)
        for probe, expected in conditional_probes(rng, c, 6, F(1, 1000)):
            in_hull = bool(hull_contains(c, probe))
            assert in_hull == bool(conditional_bipolar_contains(c, probe))
            if expected is not None:
                assert in_hull == expected
