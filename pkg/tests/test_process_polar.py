import random
from fractions import Fraction as F

import pytest

from procpolar.errors import PreconditionError
from procpolar.fuzz import random_process_set, random_tree
from procpolar.processes import (
    AdaptedProcess,
    NonIncreasingProcess,
    ProcessSet,
    fork_splice,
    random_hull_element,
)
from procpolar.process_polar import (
    bipolar_contains_incremental,
    bipolar_contains_lp,
    envelope_process,
    increment_conditional_polar,
    increment_set,
    polar_constraints,
    polar_contains,
    sample_polar_elements,
    verify_process_bipolar,
)
from procpolar.tree import RandomVariable, level_space


@pytest.fixture
def c1(t1):
    """Generators {1, X} with X the martingale (1; 2, 0)."""
    one = AdaptedProcess.constant(t1, 1)
    x = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    return ProcessSet.of(one, x)


def test_polar_of_unit_is_unit_supermartingales(t1):
    c = ProcessSet.of(AdaptedProcess.constant(t1, 1))
    system = polar_constraints(c)
    assert system.satisfied_by((F(1), F(1), F(1)))
    assert system.satisfied_by((F(1), F(2), F(0)))
    assert not system.satisfied_by((F(2), F(1), F(1)))  # initial above 1
    assert not system.satisfied_by((F(1), F(2), F(1)))  # drifts upward


def test_polar_constraint_from_martingale_generator(t1, c1):
    # the X-generator row collapses to Y_u <= Y_root
    assert not polar_contains(c1, AdaptedProcess.from_mapping(t1, {0: 1, 1: "3/2", 2: 0}))
    assert polar_contains(c1, AdaptedProcess.from_mapping(t1, {0: 1, 1: 1, 2: 1}))
    assert polar_contains(c1, AdaptedProcess.constant(t1, 0))


def test_bipolar_generators_inside(c1):
    for g in c1.generators:
        assert bipolar_contains_lp(c1, g)
        assert bipolar_contains_incremental(c1, g)


def test_bipolar_rejects_mirror_process(t1, c1):
    z = AdaptedProcess.from_mapping(t1, {0: 1, 1: 0, 2: 2})
    lp = bipolar_contains_lp(c1, z)
    inc = bipolar_contains_incremental(c1, z)
    assert not lp and not inc
    assert lp.witness is not None and polar_contains(c1, lp.witness)
    # the certificate's product with the candidate must actually misbehave
    from procpolar.processes import is_supermartingale

    prod = z.pointwise_mul(lp.witness)
    assert prod.initial > 1 or not is_supermartingale(prod)


def test_bipolar_requires_far_reaching(t1):
    dying = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    c = ProcessSet.of(dying)
    with pytest.raises(PreconditionError):
        bipolar_contains_lp(c, dying)
    # the research flag runs the same computation without the hypothesis
    assert bipolar_contains_lp(c, dying, require_far_reaching=False)


def test_bipolar_initial_interval(t1):
    half = AdaptedProcess.constant(t1, "1/2")
    c = ProcessSet.of(half)
    just_over = AdaptedProcess.constant(t1, F(1, 2) + F(1, 1000))
    assert bipolar_contains_lp(c, half)
    assert not bipolar_contains_lp(c, just_over)
    assert not bipolar_contains_incremental(c, just_over)


def test_research_flag_reports_without_asserting(t1):
    # without the far-reaching hypothesis the verifier only records outcomes
    dying = AdaptedProcess.from_mapping(t1, {0: 1, 1: 2, 2: 0})
    c = ProcessSet.of(dying)
    report = verify_process_bipolar(
        c, [dying, AdaptedProcess.constant(t1, 1)], require_far_reaching=False
    )
    assert len(report.records) == 2
    assert report.records[0].lp_member is True  # generators always belong


def test_increment_set_shape(t2):
    one = AdaptedProcess.constant(t2, 1)
    mart = AdaptedProcess.from_mapping(t2, {0: 1, 1: 2, 2: 0, 3: 2, 4: 2, 5: 0, 6: 0})
    inc = increment_set(ProcessSet.of(one, mart), 0)
    assert inc.rv_set.space == level_space(t2, 1)
    assert inc.rv_set.generators[0].values == (F(1), F(1))
    assert inc.rv_set.generators[1].values == (F(2), F(0))
    system = increment_conditional_polar(ProcessSet.of(one, mart), 0)
    # E[g | atom] <= 1 and E[2 g_u | atom] <= 1 on the root atom
    assert system.satisfied_by((F(1), F(1)))
    assert not system.satisfied_by((F(2), F(2)))
    with pytest.raises(PreconditionError):
        increment_set(ProcessSet.of(one), t2.horizon)


def test_hull_elements_are_members(c1):
    rng = random.Random(4)
    for depth in (0, 1, 2):
        sample = random_hull_element(c1, depth, rng)
        assert bipolar_contains_lp(c1, sample.process)
        assert bipolar_contains_incremental(c1, sample.process)


def test_triality_on_samples():
    # polar elements satisfy the constraints generated by hull samples, exactly
    rng = random.Random(12)
    for _ in range(8):
        tree = random_tree(rng, 3, 2)
        c = random_process_set(rng, tree, 3)
        polar_samples = sample_polar_elements(c, 3, rng)
        hull_samples = [random_hull_element(c, 2, rng).process for _ in range(3)]
        for y in polar_samples:
            assert polar_contains(c, y)
            for z in hull_samples:
                product = z.pointwise_mul(y)
                assert product.initial <= 1
                from procpolar.processes import is_supermartingale

                assert is_supermartingale(product)


def test_verify_report_structure(c1, t1):
    probes = [
        AdaptedProcess.from_mapping(t1, {0: 1, 1: 0, 2: 2}),
        AdaptedProcess.from_mapping(t1, {0: 1, 1: 0, 2: 1}),
    ]
    hull = [random_hull_element(c1, 1, 3)]
    report = verify_process_bipolar(c1, probes, hull)
    assert report.all_ok
    assert report.counts() == (3, 3)
    kinds = [r.kind for r in report.records]
    assert kinds == ["probe", "probe", "hull"]


def test_verify_flags_false_hull_claim(c1, t1):
    # feeding a non-member as a supposed hull element must fail its record
    outsider = AdaptedProcess.from_mapping(t1, {0: 1, 1: 0, 2: 2})
    report = verify_process_bipolar(c1, (), [outsider])
    assert not report.all_ok
    rec = report.records[0]
    assert rec.kind == "hull" and rec.lp_member is False


def test_verify_handles_unabsorbed_probe(c1, t1):
    # zero followed by a positive value: not a supermartingale, so both the
    # report and the direct oracle must reject it
    probe = AdaptedProcess.from_mapping(t1, {0: 0, 1: 1, 2: 0})
    report = verify_process_bipolar(c1, [probe])
    assert report.all_ok
    rec = report.records[0]
    assert rec.lp_member is False and rec.incremental_member is None


def test_envelope_one_step(t1):
    mart = AdaptedProcess.from_mapping(t1, {0: 1, 1: "2/3", 2: "4/3"})
    c = ProcessSet.of(mart)
    g = RandomVariable(level_space(t1, 1), (F(3), F(0)))
    env = envelope_process(c, g, 0, 1)
    assert env.values == (F(1), F(3), F(0))


def test_envelope_constant(t1):
    c = ProcessSet.of(AdaptedProcess.constant(t1, 1))
    g = RandomVariable.constant(level_space(t1, 1), 1)
    assert envelope_process(c, g, 0, 1) == AdaptedProcess.constant(t1, 1)


def test_envelope_hypothesis_guard(t1):
    c = ProcessSet.of(AdaptedProcess.constant(t1, 1))
    g = RandomVariable(level_space(t1, 1), (F(3), F(3)))
    with pytest.raises(PreconditionError):
        envelope_process(c, g, 0, 1)


def test_envelope_dominates_single_generator_expectations(t2):
    rng = random.Random(8)
    for _ in range(10):
        c = random_process_set(rng, t2, 3)
        space = level_space(t2, 2)
        # scale a payoff under the envelope hypothesis: start from generator
        # terminal increments, which always satisfy it
        g = RandomVariable(
            space,
            tuple(
                min(F(1), F(rng.randint(0, 3), 3)) for _ in space.outcomes
            ),
        )
        env = envelope_process(c, g, 0, 2)
        for y in c.generators:
            # one-generator expectation of g * increments, backward
            vals = {m: g[m] for m in t2.nodes_at(2)}
            for t in (1, 0):
                for n in t2.nodes_at(t):
                    total = F(0)
                    for ch in t2.children[n]:
                        if y.values[n] != 0:
                            total += (
                                t2.edge_prob[ch]
                                * (y.values[ch] / y.values[n])
                                * vals[ch]
                            )
                    vals[n] = total
            for n in t2.nodes_at(0) + t2.nodes_at(1):
                assert env.values[n] >= vals[n]


def test_polar_closure_under_hull_moves():
    rng = random.Random(31)
    for _ in range(10):
        tree = random_tree(rng, 3, 3)
        c = random_process_set(rng, tree, 3)
        system = polar_constraints(c)
        pool = sample_polar_elements(c, 3, rng)
        for _ in range(10):
            if rng.random() < 0.5:
                b = NonIncreasingProcess.constant(tree, F(rng.randint(0, 3), 3))
                candidate = rng.choice(pool).pointwise_mul(b.process)
            else:
                s = rng.randint(0, tree.horizon)
                w = {n: F(rng.randint(0, 2), 2) for n in tree.nodes_at(s)}
                candidate = fork_splice(
                    rng.choice(pool), rng.choice(pool), rng.choice(pool), s, w
                )
            assert system.satisfied_by(candidate.values)
            pool.append(candidate)
