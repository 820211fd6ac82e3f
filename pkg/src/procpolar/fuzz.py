"""Randomized instance generation and the seeded verification suites.

Three suites, all exact and all replayable from a single integer seed:

* conditional -- the random-variable duality: hull membership versus
  bipolar membership on interior/boundary/exterior probes, plus the polar
  closure properties, the product decomposition round-trip and the
  pairwise-maximization family;
* process -- the process duality: the direct and the incremental bipolar
  oracle on random far-reaching sets of unit supermartingales, with hull
  constructions required to be members, plus polar closure under
  fork-splicing and solid multiplication;
* market -- the wealth/deflator duality and the budget-constraint
  coincidence on random arbitrage-free markets.

Each instance gets its own derived seed so a failure can be re-run alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import PostconditionError
from .exact_lp import LpStatus, maximize
from .market import (
    ConsumptionDensity,
    Market,
    budget_check,
    density_process,
    emm_polytope,
    pure_investment_polytope,
    sample_consumption_wealth,
    superhedge_value,
    verify_structure,
)
from .processes import (
    AdaptedProcess,
    ProcessSet,
    fork_splice,
    random_hull_element,
    random_nonincreasing_process,
    random_unit_fraction,
    solid_multiply,
)
from .process_polar import (
    polar_constraints,
    polar_contains,
    sample_polar_elements,
    verify_process_bipolar,
)
from .rv_polar import (
    RvSet,
    conditional_bipolar_contains,
    conditional_polar_constraints,
    hull_contains,
    pairwise_max_closure,
    partition_mix,
    product_decompose,
    unconditional_bipolar_contains,
    unconditional_hull_contains,
)
from .tree import EventTree, Partition, RandomVariable, SampleSpace

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Random building blocks
# ---------------------------------------------------------------------------


def random_fraction(
    rng: random.Random, max_num: int = 3, max_den: int = 3
) -> Fraction:
    return Fraction(rng.randint(0, max_num), rng.randint(1, max_den))


def random_positive_weights(rng: random.Random, k: int) -> tuple[Fraction, ...]:
    raw = [rng.randint(1, 4) for _ in range(k)]
    total = sum(raw)
    return tuple(Fraction(r, total) for r in raw)


def random_tree(
    rng: random.Random, max_depth: int = 3, max_branching: int = 3
) -> EventTree:
    depth = rng.randint(1, max_depth)
    parents: list[Optional[int]] = [None]
    probs: list[Optional[Fraction]] = [None]
    level = [0]
    for _ in range(depth):
        nxt: list[int] = []
        for n in level:
            k = rng.randint(1, max_branching)
            for w in random_positive_weights(rng, k):
                parents.append(n)
                probs.append(w)
                nxt.append(len(parents) - 1)
        level = nxt
    return EventTree.build(parents, probs)


def random_space(rng: random.Random, max_outcomes: int = 6) -> SampleSpace:
    k = rng.randint(2, max_outcomes)
    return SampleSpace(tuple(range(k)), random_positive_weights(rng, k))


def random_partition(
    rng: random.Random, space: SampleSpace, max_blocks: int = 3
) -> Partition:
    k = rng.randint(1, min(max_blocks, space.size))
    order = list(space.outcomes)
    rng.shuffle(order)
    cuts = sorted(rng.sample(range(1, space.size), k - 1)) if k > 1 else []
    blocks, start = [], 0
    for cut in cuts + [space.size]:
        blocks.append(order[start:cut])
        start = cut
    return Partition.from_blocks(space, blocks)


def random_rv(
    rng: random.Random, space: SampleSpace, max_num: int = 3, max_den: int = 3
) -> RandomVariable:
    return RandomVariable(
        space, tuple(random_fraction(rng, max_num, max_den) for _ in space.outcomes)
    )


def random_rvset(
    rng: random.Random,
    space: SampleSpace,
    partition: Partition,
    max_generators: int = 4,
) -> RvSet:
    k = rng.randint(1, max_generators)
    return RvSet(tuple(random_rv(rng, space) for _ in range(k)), partition)


def random_supermartingale(
    rng: random.Random,
    tree: EventTree,
    strictly_positive: bool = False,
    martingale: bool = False,
) -> AdaptedProcess:
    """Built multiplicatively: each step applies factors whose one-step
    expectation is at most (exactly, for martingales) 1."""
    vals = [ZERO] * tree.num_nodes
    if strictly_positive:
        vals[0] = Fraction(rng.randint(1, 4), 4)
    else:
        vals[0] = Fraction(rng.randint(0, 4), 4)
    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        low = 1 if strictly_positive else 0
        raw = [Fraction(rng.randint(low, 4), rng.randint(1, 3)) for _ in kids]
        if martingale and all(r == 0 for r in raw):
            raw[rng.randrange(len(raw))] = ONE
        mean = sum(
            (tree.edge_prob[ch] * r for ch, r in zip(kids, raw)), ZERO
        )
        if mean > 1 or (martingale and mean != 0):
            raw = [r / mean for r in raw]
        for ch, r in zip(kids, raw):
            vals[ch] = vals[n] * r
    return AdaptedProcess(tree, tuple(vals))


def random_process_set(
    rng: random.Random, tree: EventTree, max_generators: int = 4
) -> ProcessSet:
    """Random far-reaching set of unit-initial supermartingales."""
    gens: list[AdaptedProcess] = []
    if rng.random() < 0.4:
        gens.append(AdaptedProcess.constant(tree, 1))
    else:
        gens.append(
            random_supermartingale(
                rng, tree, strictly_positive=True, martingale=rng.random() < 0.5
            )
        )
    for _ in range(rng.randint(0, max_generators - 1)):
        gens.append(
            random_supermartingale(rng, tree, martingale=rng.random() < 0.3)
        )
    return ProcessSet.of(*gens)


def random_market(
    rng: random.Random, tree: EventTree, max_assets: int = 2
) -> Market:
    """Arbitrage-free by construction: prices are martingales under a
    hidden strictly positive one-step measure."""
    d = rng.randint(1, max_assets)
    hidden = {
        n: random_positive_weights(rng, len(tree.children[n]))
        for n in tree.non_terminal_nodes()
    }
    prices = []
    for _ in range(d):
        vals = [ZERO] * tree.num_nodes
        vals[0] = Fraction(rng.randint(1, 8))
        for n in tree.non_terminal_nodes():
            kids = tree.children[n]
            q = hidden[n]
            raw = [Fraction(rng.randint(0 if rng.random() < 0.1 else 1, 4)) for _ in kids]
            if all(r == 0 for r in raw):
                raw[rng.randrange(len(kids))] = ONE
            mean = sum((qi * r for qi, r in zip(q, raw)), ZERO)
            for ch, r in zip(kids, raw):
                vals[ch] = vals[n] * r / mean
        prices.append(AdaptedProcess(tree, tuple(vals)))
    return Market.of(tree, prices)


def random_consumption_density(
    rng: random.Random, tree: EventTree
) -> ConsumptionDensity:
    weights = [ZERO] + list(random_positive_weights(rng, tree.horizon))
    density = AdaptedProcess(
        tree, tuple(random_fraction(rng, 3, 2) for _ in range(tree.num_nodes))
    )
    return ConsumptionDensity(density, tuple(weights))


def instance_rng(suite: str, seed: int, index: int) -> random.Random:
    return random.Random(f"{suite}:{seed}:{index}")


# ---------------------------------------------------------------------------
# Suite plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceRecord:
    index: int
    ok: bool
    checks: int
    detail: str = ""


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    seed: int
    records: tuple[InstanceRecord, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.records)

    @property
    def total_checks(self) -> int:
        return sum(r.checks for r in self.records)

    def failures(self) -> tuple[InstanceRecord, ...]:
        return tuple(r for r in self.records if not r.ok)

    def summary(self) -> str:
        good = sum(1 for r in self.records if r.ok)
        return (
            f"{self.suite}: {good}/{len(self.records)} instances ok, "
            f"{self.total_checks} checks, seed {self.seed}"
        )


def _run_suite(
    suite: str,
    seed: int,
    count: int,
    one_instance: Callable[[random.Random], tuple[int, str]],
) -> SuiteResult:
    records = []
    for i in range(count):
        rng = instance_rng(suite, seed, i)
        try:
            checks, detail = one_instance(rng)
            records.append(InstanceRecord(i, True, checks, detail))
        except (AssertionError, PostconditionError) as exc:
            records.append(InstanceRecord(i, False, 0, str(exc)))
    return SuiteResult(suite, seed, tuple(records))


# ---------------------------------------------------------------------------
# Conditional (random-variable) suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalFuzzConfig:
    count: int = 200
    seed: int = 0
    max_outcomes: int = 6
    max_blocks: int = 3
    max_generators: int = 4
    probes: int = 10
    bump: Fraction = Fraction(1, 1000)


def _hull_mixture(rng: random.Random, c: RvSet, scale: Fraction) -> RandomVariable:
    """Per-block convex mixture of generators, scaled; scale 1 sits on the
    upper envelope."""
    vals = [ZERO] * c.space.size
    for block in c.partition.blocks:
        w = random_positive_weights(rng, len(c.generators))
        for outcome in block:
            i = c.space.index(outcome)
            vals[i] = scale * sum(
                (wi * g.values[i] for wi, g in zip(w, c.generators)), ZERO
            )
    return RandomVariable(c.space, tuple(vals))


def conditional_probes(
    rng: random.Random, c: RvSet, count: int, bump: Fraction
) -> list[tuple[RandomVariable, Optional[bool]]]:
    """Probes with their expected hull status when known (None = unknown)."""
    probes: list[tuple[RandomVariable, Optional[bool]]] = []
    while len(probes) < count:
        kind = rng.randrange(4)
        if kind == 0:  # interior
            denom = rng.randint(1, 4)
            scale = Fraction(rng.randint(0, denom), denom)
            probes.append((_hull_mixture(rng, c, scale), True))
        elif kind == 1:  # boundary
            probes.append((_hull_mixture(rng, c, ONE), True))
        elif kind == 2:  # just outside (unless the bump stays under the envelope)
            base = _hull_mixture(rng, c, ONE)
            i = rng.randrange(c.space.size)
            vals = list(base.values)
            vals[i] += bump
            probes.append((RandomVariable(c.space, tuple(vals)), None))
        else:  # arbitrary
            probes.append((random_rv(rng, c.space), None))
    return probes


def _sample_polar_rvs(
    rng: random.Random, c: RvSet, count: int
) -> list[RandomVariable]:
    system = conditional_polar_constraints(c)
    out: list[RandomVariable] = []
    for _ in range(count):
        objective = [Fraction(rng.randint(-1, 2)) for _ in range(system.num_vars)]
        res = maximize(system, objective)
        assert res.point is not None
        point = res.point
        if res.status is LpStatus.UNBOUNDED:
            assert res.ray is not None
            t = random_unit_fraction(rng, 3) * 2
            point = tuple(p + t * r for p, r in zip(point, res.ray))
        out.append(RandomVariable(c.space, point))
    return out


def _random_block_constant(
    rng: random.Random, part: Partition, max_num: int = 2, max_den: int = 2
) -> RandomVariable:
    vals = [ZERO] * part.space.size
    for block in part.blocks:
        v = random_fraction(rng, max_num, max_den)
        for w in block:
            vals[part.space.index(w)] = v
    return RandomVariable(part.space, tuple(vals))


def _random_unit_ball(rng: random.Random, part: Partition) -> RandomVariable:
    raw = _random_block_constant(rng, part, 3, 2)
    e = raw.expectation()
    if e > 1:
        raw = raw.scale(ONE / e)
    return raw


def check_conditional_instance(rng: random.Random, cfg: ConditionalFuzzConfig) -> tuple[int, str]:
    """One random instance of the full conditional-theory check battery."""
    space = random_space(rng, cfg.max_outcomes)
    part = random_partition(rng, space, cfg.max_blocks)
    c = random_rvset(rng, space, part, cfg.max_generators)
    checks = 0

    # dual-oracle equivalence on probes of all three kinds
    for probe, expected in conditional_probes(rng, c, cfg.probes, cfg.bump):
        in_hull = bool(hull_contains(c, probe))
        in_bipolar = bool(conditional_bipolar_contains(c, probe))
        assert in_hull == in_bipolar, (
            f"oracle split on {probe.values}: hull={in_hull} bipolar={in_bipolar}"
        )
        if expected is not None:
            assert in_hull == expected, f"expected {expected} for {probe.values}"
        checks += 1

    # one-block reduction agrees with the direct unconditional implementation
    trivial = RvSet(c.generators, Partition.trivial(space))
    probe = random_rv(rng, space)
    assert bool(hull_contains(trivial, probe)) == unconditional_hull_contains(
        c.generators, probe
    )
    assert bool(
        conditional_bipolar_contains(trivial, probe)
    ) == unconditional_bipolar_contains(c.generators, probe)
    checks += 2

    # polar closure: mixing and downward moves stay in the polar
    g1, g2 = _sample_polar_rvs(rng, c, 2)
    weight = _random_block_constant(rng, part, 2, 2)
    if any(v > 1 for v in weight.values):
        weight = weight.scale(ONE / max(weight.values))
    mixed = partition_mix(g1, g2, weight, part)
    system = conditional_polar_constraints(c)
    assert system.satisfied_by(mixed.values), "polar not closed under mixing"
    shrunk = g1.scale(random_unit_fraction(rng, 3))
    assert system.satisfied_by(shrunk.values), "polar not downward closed"
    checks += 2

    # product decomposition round-trip on a bipolar element
    f = _hull_mixture(rng, c, ONE)
    ball_elem = _random_unit_ball(rng, part)
    h, k = product_decompose(c, f, ball_elem)  # internal exact postconditions
    assert f.pointwise_mul(ball_elem) == h.pointwise_mul(k)
    checks += 1

    # pairwise maximization family: blockwise rescalings of a hull element
    members = []
    for _ in range(rng.randint(1, 3)):
        scales = _random_block_constant(rng, part, 2, 2)
        if any(v > 1 for v in scales.values):
            scales = scales.scale(ONE / max(scales.values))
        members.append(f.pointwise_mul(scales))
    hmax = pairwise_max_closure(c, f, members)
    assert hull_contains(c, hmax)
    checks += 1
    return checks, ""


def run_conditional_suite(cfg: ConditionalFuzzConfig) -> SuiteResult:
    return _run_suite(
        "conditional",
        cfg.seed,
        cfg.count,
        lambda rng: check_conditional_instance(rng, cfg),
    )


# ---------------------------------------------------------------------------
# Process (filtered) suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcessFuzzConfig:
    count: int = 100
    seed: int = 0
    max_depth: int = 3
    max_branching: int = 3
    max_generators: int = 4
    probes: int = 4
    hull_probes: int = 2
    hull_depth: int = 2
    bump: Fraction = Fraction(1, 1000)


def process_probes(
    rng: random.Random, c: ProcessSet, cfg: ProcessFuzzConfig
) -> tuple[list[AdaptedProcess], list[AdaptedProcess]]:
    """(undetermined probes, known hull members)."""
    tree = c.tree
    probes: list[AdaptedProcess] = []
    hull: list[AdaptedProcess] = []
    for _ in range(cfg.hull_probes):
        hull.append(
            random_hull_element(c, rng.randint(0, cfg.hull_depth), rng).process
        )
    while len(probes) < cfg.probes:
        kind = rng.randrange(4)
        if kind == 0:  # bumped hull element: at or just past the boundary
            base = rng.choice(hull)
            n = rng.randrange(tree.num_nodes)
            probes.append(base.with_value(n, base.values[n] + cfg.bump))
        elif kind == 1:  # random unit supermartingale
            probes.append(random_supermartingale(rng, tree))
        elif kind == 2:  # scaled generator leaving the unit class
            g = rng.choice(c.generators)
            probes.append(g.scale(2))
        else:  # random positive process, supermartingale or not
            probes.append(
                AdaptedProcess(
                    tree,
                    tuple(
                        random_fraction(rng, 3, 2) for _ in range(tree.num_nodes)
                    ),
                )
            )
    return probes, hull


def check_process_instance(rng: random.Random, cfg: ProcessFuzzConfig) -> tuple[int, str]:
    tree = random_tree(rng, cfg.max_depth, cfg.max_branching)
    c = random_process_set(rng, tree, cfg.max_generators)
    probes, hull = process_probes(rng, c, cfg)
    report = verify_process_bipolar(c, probes, hull)
    assert report.all_ok, "; ".join(
        f"{r.kind}: lp={r.lp_member} inc={r.incremental_member} {r.note}"
        for r in report.records
        if not r.ok
    )
    return len(report.records), ""


def run_process_suite(cfg: ProcessFuzzConfig) -> SuiteResult:
    return _run_suite(
        "process", cfg.seed, cfg.count, lambda rng: check_process_instance(rng, cfg)
    )


@dataclass(frozen=True)
class PolarClosureConfig:
    instances: int = 25
    compositions_per_instance: int = 40
    seed: int = 0
    max_depth: int = 3
    max_branching: int = 3
    max_generators: int = 3


def check_polar_closure_instance(
    rng: random.Random, cfg: PolarClosureConfig
) -> tuple[int, str]:
    """Fork-splices and solid multiples of polar elements stay in the polar."""
    tree = random_tree(rng, cfg.max_depth, cfg.max_branching)
    c = random_process_set(rng, tree, cfg.max_generators)
    pool = sample_polar_elements(c, 4, rng)
    system = polar_constraints(c)
    checks = 0
    for _ in range(cfg.compositions_per_instance):
        if rng.random() < 0.5:
            y = rng.choice(pool)
            b = random_nonincreasing_process(rng, tree)
            candidate = y.pointwise_mul(b.process)
        else:
            y1, y2, y3 = (rng.choice(pool) for _ in range(3))
            s = rng.randint(0, tree.horizon)
            w = {n: random_unit_fraction(rng) for n in tree.nodes_at(s)}
            candidate = fork_splice(y1, y2, y3, s, w)
        assert system.satisfied_by(candidate.values), "polar closure violated"
        pool.append(candidate)
        checks += 1
    return checks, ""


def run_polar_closure_suite(cfg: PolarClosureConfig) -> SuiteResult:
    return _run_suite(
        "polar-closure",
        cfg.seed,
        cfg.instances,
        lambda rng: check_polar_closure_instance(rng, cfg),
    )


# ---------------------------------------------------------------------------
# Market suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketFuzzConfig:
    count: int = 40
    seed: int = 0
    max_depth: int = 3
    max_branching: int = 3
    max_assets: int = 2
    deflator_probes: int = 3
    wealth_probes: int = 3
    pair_samples: int = 2


def _sample_measures(
    rng: random.Random, m: Market, count: int
) -> list[tuple[Fraction, ...]]:
    poly = emm_polytope(m)
    assert poly.interior is not None
    out = [poly.interior]
    for _ in range(count - 1):
        objective = [Fraction(rng.randint(-2, 2)) for _ in poly.var_nodes]
        res = maximize(poly.system, objective)
        assert res.status is LpStatus.OPTIMAL and res.point is not None
        # mix toward the interior to keep the measure equivalent
        t = Fraction(rng.randint(1, 3), 4)
        out.append(
            tuple(
                t * v + (ONE - t) * i for v, i in zip(res.point, poly.interior)
            )
        )
    return out


def deflator_probes_for(
    rng: random.Random, m: Market, count: int
) -> list[AdaptedProcess]:
    tree = m.tree
    probes: list[AdaptedProcess] = [AdaptedProcess.constant(tree, 1)]
    measures = _sample_measures(rng, m, 2)
    for q in measures:
        probes.append(density_process(m, q))
    while len(probes) < count + 3:
        kind = rng.randrange(4)
        base = density_process(m, rng.choice(measures))
        if kind == 0:
            probes.append(
                solid_multiply(base, random_nonincreasing_process(rng, tree))
            )
        elif kind == 1:
            s = rng.randint(0, tree.horizon)
            other = density_process(m, rng.choice(measures))
            w = {n: random_unit_fraction(rng) for n in tree.nodes_at(s)}
            probes.append(fork_splice(base, base, other, s, w))
        elif kind == 2:
            n = rng.randrange(tree.num_nodes)
            probes.append(base.with_value(n, base.values[n] + Fraction(1, 50)))
        else:
            probes.append(random_supermartingale(rng, tree))
    return probes[: count + 3]


def wealth_probes_for(
    rng: random.Random, m: Market, count: int
) -> list[AdaptedProcess]:
    tree = m.tree
    probes: list[AdaptedProcess] = []
    pairs = sample_consumption_wealth(m, 2, rng)
    probes.extend(w for w, _ in pairs)
    ws = pure_investment_polytope(m, 1)
    objective = [ZERO] * ws.system.num_vars
    for n in range(tree.num_nodes):
        objective[ws.wealth_index(n)] = Fraction(rng.randint(-1, 2))
    res = maximize(ws.system, objective)
    assert res.status is LpStatus.OPTIMAL and res.point is not None
    probes.append(ws.extract_wealth(res.point))
    while len(probes) < count + 3:
        kind = rng.randrange(3)
        base = rng.choice(probes[:3])
        if kind == 0:
            n = rng.randrange(tree.num_nodes)
            probes.append(base.with_value(n, base.values[n] + Fraction(1, 50)))
        elif kind == 1:
            probes.append(base.scale(Fraction(rng.randint(1, 6), 4)))
        else:
            probes.append(random_supermartingale(rng, tree))
    return probes[: count + 3]


def check_market_instance(rng: random.Random, cfg: MarketFuzzConfig) -> tuple[int, str]:
    tree = random_tree(rng, cfg.max_depth, cfg.max_branching)
    m = random_market(rng, tree, cfg.max_assets)
    report = verify_structure(
        m,
        deflator_probes_for(rng, m, cfg.deflator_probes),
        wealth_probes_for(rng, m, cfg.wealth_probes),
        pair_samples=cfg.pair_samples,
        rng=rng,
    )
    assert report.all_ok, "; ".join(
        f"{r.section} {r.detail}" for r in report.records if not r.ok
    )
    checks = len(report.records)

    # budget coincidence at, below and above the superhedge value
    density = random_consumption_density(rng, tree)
    value = superhedge_value(m, density).value
    for x, expected in (
        (value, True),
        (value + 1, True),
        (value - Fraction(1, 100), None if value == 0 else False),
    ):
        if x < 0:
            continue
        outcome = budget_check(m, density, x)  # raises on oracle disagreement
        if expected is not None:
            assert outcome.admissible == expected, f"budget at {x}"
        checks += 1
    return checks, ""


def run_market_suite(cfg: MarketFuzzConfig) -> SuiteResult:
    return _run_suite(
        "market", cfg.seed, cfg.count, lambda rng: check_market_instance(rng, cfg)
    )
