import random
from fractions import Fraction as F

import pytest

from procpolar.errors import PreconditionError
from procpolar.fuzz import random_supermartingale, random_tree
from procpolar.processes import (
    AdaptedProcess,
    NonIncreasingProcess,
    ProcessSet,
    fork_splice,
    has_absorbed_zeros,
    increment,
    is_supermartingale,
    is_unit_supermartingale,
    random_hull_element,
    replay_trace,
    solid_multiply,
    zero_absorption_check,
)


def test_constant_one_supermartingale(t1):
    assert is_unit_supermartingale(AdaptedProcess.constant(t1, 1))


def test_martingale_equality_case(t2):
    y = AdaptedProcess.from_mapping(t2, {0: 1, 1: 2, 2: 0, 3: 2, 4: 2, 5: 0, 6: 0})
    assert is_supermartingale(y)


def test_supermartingale_violation(t1):
    y = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 1})
    assert not is_supermartingale(y)


def test_zero_absorption(t2):
    y = AdaptedProcess.from_mapping(t2, {0: 1, 1: 0, 2: 2, 3: 0, 4: 0, 5: 2, 6: 2})
    assert zero_absorption_check(y)
    broken = AdaptedProcess.from_mapping(
        t2, {0: 1, 1: 0, 2: 2, 3: 1, 4: 0, 5: 2, 6: 2}
    )
    assert not has_absorbed_zeros(broken)
    with pytest.raises(PreconditionError):
        zero_absorption_check(broken)  # not a supermartingale: guard rejects


def test_increment_conventions(t2):
    y = AdaptedProcess.from_mapping(
        t2, {0: 1, 1: F(2, 3), 2: 0, 3: F(1, 3), 4: 1, 5: 0, 6: 0}
    )
    assert increment(y, 1, 1, 1) == 1
    assert increment(y, 0, 1, 1) == F(2, 3)
    assert increment(y, 0, 2, 3) == F(1, 3)
    assert increment(y, 1, 2, 3) == F(1, 2)
    assert increment(y, 0, 2, 5) == 0  # 0/0 after absorption
    assert increment(y, 2, 2, 5) == 1  # same-time increment is 1 even at a zero


def test_increment_cocycle(t2):
    rng = random.Random(0)
    for _ in range(20):
        y = random_supermartingale(rng, t2)
        for m in t2.terminal_nodes():
            u = t2.ancestor_at(m, 1)
            lhs = increment(y, 0, 1, u) * increment(y, 1, 2, m)
            if y.values[u] > 0:
                assert lhs == increment(y, 0, 2, m)
            else:
                assert lhs == 0 == increment(y, 0, 2, m)


def test_solid_multiply_identity_and_scaling(t1):
    y = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    assert solid_multiply(y, NonIncreasingProcess.constant(t1, 1)) == y
    half = solid_multiply(y, NonIncreasingProcess.constant(t1, "1/2"))
    assert half.values == (F(1, 2), F(1), F(0))
    assert is_unit_supermartingale(half)


def test_nonincreasing_invariants(t1):
    with pytest.raises(PreconditionError):
        NonIncreasingProcess(AdaptedProcess.from_mapping(t1, {0: 2, 1: 1, 2: 1}))
    with pytest.raises(PreconditionError):
        NonIncreasingProcess(AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 1}))


def test_fork_splice_self_identity(t2):
    rng = random.Random(1)
    y = random_supermartingale(rng, t2, strictly_positive=True)
    for s in (0, 1, 2):
        assert fork_splice(y, y, y, s, "1/3") == y


def test_fork_splice_pure_graft(t2):
    y1 = AdaptedProcess.constant(t2, 1)
    y2 = AdaptedProcess.from_mapping(
        t2, {0: 1, 1: 2, 2: 0, 3: 2, 4: 2, 5: 0, 6: 0}
    )
    spliced = fork_splice(y1, y2, y1, 0, 1)
    assert spliced == y2  # y1(root)=1 times y2's increments


def test_fork_splice_midpoint(t1):
    one = AdaptedProcess.constant(t1, 1)
    y2 = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    y3 = AdaptedProcess.from_mapping(t1, {0: 1, 1: 0, 2: 2})
    spliced = fork_splice(one, y2, y3, 0, "1/2")
    assert spliced.values == (F(1), F(1), F(1))


def test_fork_splice_weight_validation(t1):
    y = AdaptedProcess.constant(t1, 1)
    with pytest.raises(PreconditionError):
        fork_splice(y, y, y, 0, 2)
    with pytest.raises(PreconditionError):
        fork_splice(y, y, y, 1, {1: F(1, 2)})  # missing weight at node d


def test_fork_splice_unit_class_closure():
    rng = random.Random(7)
    for _ in range(25):
        tree = random_tree(rng, 3, 3)
        y1 = random_supermartingale(rng, tree)
        y2 = random_supermartingale(rng, tree, martingale=True)
        y3 = random_supermartingale(rng, tree, strictly_positive=True)
        s = rng.randint(0, tree.horizon)
        w = {n: F(rng.randint(0, 3), 3) for n in tree.nodes_at(s)}
        out = fork_splice(y1, y2, y3, s, w)  # internal closure check is exact
        assert is_unit_supermartingale(out)
        b = NonIncreasingProcess.constant(tree, F(rng.randint(0, 4), 4))
        assert is_unit_supermartingale(solid_multiply(out, b))


def test_process_set_flags(t1):
    one = AdaptedProcess.constant(t1, 1)
    dying = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    assert ProcessSet.of(one, dying).far_reaching
    assert not ProcessSet.of(dying).far_reaching
    with pytest.raises(PreconditionError):
        ProcessSet((dying,), True)


def test_pointwise_limits_stay_supermartingales():
    # on a finite tree the only exact convergence is eventual constancy:
    # the limit of an eventually constant sequence of supermartingales is
    # one of them, hence a supermartingale
    rng = random.Random(13)
    for _ in range(15):
        tree = random_tree(rng, 3, 3)
        tail = random_supermartingale(rng, tree)
        sequence = [random_supermartingale(rng, tree) for _ in range(3)] + [tail] * 3
        limit = sequence[-1]
        assert all(is_supermartingale(y) for y in sequence)
        assert is_supermartingale(limit)
        assert limit.initial <= 1


def test_random_hull_element_replay(t2):
    one = AdaptedProcess.constant(t2, 1)
    mart = AdaptedProcess.from_mapping(
        t2, {0: 1, 1: 2, 2: 0, 3: 2, 4: 2, 5: 0, 6: 0}
    )
    c = ProcessSet.of(one, mart)
    for seed in range(12):
        sample = random_hull_element(c, depth=seed % 3, rng=seed)
        assert is_unit_supermartingale(sample.process)
        assert replay_trace(c, sample.trace) == sample.process
    assert random_hull_element(c, 0, 3).trace[0] == "gen"
