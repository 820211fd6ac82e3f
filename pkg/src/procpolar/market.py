"""Markets on event trees: wealth, martingale measures, superhedging.

Discounted asset prices live on an event tree; strategies are predictable
holdings over the outgoing edges.  The one-step martingale-measure
polytopes make every pricing question a small exact LP:

* the global measure polytope and its relative interior (the equivalent
  martingale measures) decide market validity;
* the superhedging value of a claim or consumption stream is the backward
  maximum of expected payoffs over the one-step polytopes, and the
  optional decomposition (wealth minus a nondecreasing residual) is
  recovered by per-node hedging LPs;
* the dual cone of wealth processes -- all supermartingale deflators
  making deflated wealth a supermartingale -- has three equivalent LP
  descriptions whose agreement is exactly the structural duality this
  package verifies.

Everything is exact; every certificate is substitution-checked.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from .errors import PostconditionError, PreconditionError
from .exact_lp import (
    EQ,
    GE,
    LE,
    LinearConstraint,
    LinearSystem,
    LpStatus,
    feasible_interior_point,
    maximize,
    minimize,
)
from .processes import AdaptedProcess, is_martingale, is_supermartingale
from .rational import frac
from .tree import EventTree, RandomVariable, terminal_space

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Market:
    """Discounted prices for ``d`` risky assets on an event tree."""

    tree: EventTree
    prices: tuple[AdaptedProcess, ...]

    def __post_init__(self) -> None:
        if not self.prices:
            raise PreconditionError("a market needs at least one asset")
        for s in self.prices:
            if s.tree != self.tree:
                raise PreconditionError("price process on a different tree")

    @classmethod
    def of(cls, tree: EventTree, prices: Sequence[AdaptedProcess]) -> "Market":
        """Build and validate: an equivalent martingale measure must exist."""
        m = cls(tree, tuple(prices))
        if emm_polytope(m).interior is None:
            raise PreconditionError(
                "market invalid: no equivalent martingale measure"
            )
        return m

    @property
    def d(self) -> int:
        return len(self.prices)

    def price_increment(self, asset: int, child: int) -> Fraction:
        par = self.tree.parent[child]
        assert par is not None
        return self.prices[asset].values[child] - self.prices[asset].values[par]


@dataclass(frozen=True)
class Strategy:
    """Holdings per non-terminal node: the position over the outgoing edges."""

    tree: EventTree
    holdings: tuple[Optional[tuple[Fraction, ...]], ...]

    def __post_init__(self) -> None:
        if len(self.holdings) != self.tree.num_nodes:
            raise PreconditionError("one holdings entry per node required")
        for n in range(self.tree.num_nodes):
            h = self.holdings[n]
            if self.tree.is_terminal(n):
                if h is not None:
                    raise PreconditionError("terminal nodes hold nothing")
            elif h is None:
                raise PreconditionError(f"missing holdings at {self.tree.labels[n]}")

    @classmethod
    def zero(cls, tree: EventTree, d: int) -> "Strategy":
        return cls(
            tree,
            tuple(
                None if tree.is_terminal(n) else (ZERO,) * d
                for n in range(tree.num_nodes)
            ),
        )

    def at(self, node: int) -> tuple[Fraction, ...]:
        h = self.holdings[node]
        if h is None:
            raise PreconditionError("no holdings at a terminal node")
        return h


@dataclass(frozen=True)
class ConsumptionProcess:
    """Cumulative consumption: starts at 0, nondecreasing along every edge."""

    cumulative: AdaptedProcess

    def __post_init__(self) -> None:
        c = self.cumulative
        if c.initial != 0:
            raise PreconditionError("cumulative consumption starts at 0")
        for n in range(c.tree.num_nodes):
            par = c.tree.parent[n]
            if par is not None and c.values[n] < c.values[par]:
                raise PreconditionError(
                    f"consumption decreases along the edge into {c.tree.labels[n]}"
                )

    @classmethod
    def zero(cls, tree: EventTree) -> "ConsumptionProcess":
        return cls(AdaptedProcess.constant(tree, 0))

    def increment(self, child: int) -> Fraction:
        par = self.cumulative.tree.parent[child]
        assert par is not None
        return self.cumulative.values[child] - self.cumulative.values[par]


@dataclass(frozen=True)
class ConsumptionDensity:
    """A consumption rate per node plus rational time weights summing to 1."""

    density: AdaptedProcess
    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != self.density.tree.horizon + 1:
            raise PreconditionError("one weight per time index required")
        if any(w < 0 for w in self.weights):
            raise PreconditionError("time weights must be nonnegative")
        if sum(self.weights) != 1:
            raise PreconditionError("time weights must sum to 1")

    def cumulative(self) -> ConsumptionProcess:
        tree = self.density.tree
        vals = [ZERO] * tree.num_nodes
        for n in range(tree.num_nodes):
            par = tree.parent[n]
            base = ZERO if par is None else vals[par]
            vals[n] = base + self.weights[tree.time[n]] * self.density.values[n]
        # the time-0 weight charges consumption at the root, which must be 0
        if vals[0] != 0:
            raise PreconditionError(
                "a positive weight at time 0 with positive density would "
                "consume before trading starts"
            )
        return ConsumptionProcess(AdaptedProcess(tree, tuple(vals)))


# ---------------------------------------------------------------------------
# Martingale measure polytopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmmPolytope:
    """One-step transition probabilities under which prices are martingales.

    Variables are q(child) for every non-root node.  The relative interior
    (all q positive) corresponds exactly to the equivalent martingale
    measures; boundary points are absolutely continuous ones.
    """

    system: LinearSystem
    var_nodes: tuple[int, ...]
    interior: Optional[tuple[Fraction, ...]]

    def index(self, node: int) -> int:
        return self.var_nodes.index(node)

    def contains(self, q: Sequence[Fraction]) -> bool:
        return self.system.satisfied_by(q)


def local_polytope(m: Market, node: int) -> LinearSystem:
    """One-step martingale probabilities over the children of ``node``."""
    tree = m.tree
    if tree.is_terminal(node):
        raise PreconditionError("terminal nodes have no one-step polytope")
    kids = tree.children[node]
    rows = [LinearConstraint((ONE,) * len(kids), EQ, ONE, "prob")]
    for i in range(m.d):
        coeffs = tuple(m.prices[i].values[ch] for ch in kids)
        rows.append(
            LinearConstraint(coeffs, EQ, m.prices[i].values[node], f"price[{i}]")
        )
    return LinearSystem.make(
        len(kids), rows, lower=0, var_names=[f"q({tree.labels[ch]})" for ch in kids]
    )


@lru_cache(maxsize=None)
def emm_polytope(m: Market) -> EmmPolytope:
    """The global measure polytope plus an interior point if one exists."""
    tree = m.tree
    var_nodes = tuple(n for n in range(tree.num_nodes) if tree.parent[n] is not None)
    pos = {n: i for i, n in enumerate(var_nodes)}
    rows: list[LinearConstraint] = []
    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        coeffs = [ZERO] * len(var_nodes)
        for ch in kids:
            coeffs[pos[ch]] = ONE
        rows.append(LinearConstraint(tuple(coeffs), EQ, ONE, f"prob@{tree.labels[n]}"))
        for i in range(m.d):
            coeffs = [ZERO] * len(var_nodes)
            for ch in kids:
                coeffs[pos[ch]] = m.prices[i].values[ch]
            rows.append(
                LinearConstraint(
                    tuple(coeffs),
                    EQ,
                    m.prices[i].values[n],
                    f"price[{i}]@{tree.labels[n]}",
                )
            )
    system = LinearSystem.make(
        len(var_nodes),
        rows,
        lower=0,
        var_names=[f"q({tree.labels[n]})" for n in var_nodes],
    )
    interior = feasible_interior_point(system, range(len(var_nodes)))
    return EmmPolytope(system, var_nodes, interior)


def density_process(m: Market, q: Sequence[Fraction]) -> AdaptedProcess:
    """Likelihood-ratio process of a measure point: products of q/p ratios.

    Starts at 1 and is re-checked to be a martingale under the reference
    measure.
    """
    poly = emm_polytope(m)
    q = tuple(frac(v) for v in q)
    if not poly.contains(q):
        raise PreconditionError("q is not a feasible measure point")
    tree = m.tree
    vals = [ONE] * tree.num_nodes
    for i, n in enumerate(poly.var_nodes):
        par = tree.parent[n]
        assert par is not None
        vals[n] = vals[par] * q[i] / tree.edge_prob[n]
    y = AdaptedProcess(tree, tuple(vals))
    if not is_martingale(y):
        raise PostconditionError("density process failed the martingale check")
    return y


# ---------------------------------------------------------------------------
# Wealth dynamics
# ---------------------------------------------------------------------------


def wealth_values(
    m: Market,
    x: int | str | Fraction,
    strategy: Strategy,
    consumption: ConsumptionProcess,
) -> tuple[Fraction, ...]:
    """Wealth along the tree: initial capital plus trading gains minus
    consumption.  May go negative; admissibility is a separate check."""
    tree = m.tree
    x = frac(x)
    vals: list[Fraction] = [ZERO] * tree.num_nodes
    vals[0] = x
    for n in range(1, tree.num_nodes):
        par = tree.parent[n]
        assert par is not None
        gain = sum(
            (
                strategy.at(par)[i] * m.price_increment(i, n)
                for i in range(m.d)
            ),
            ZERO,
        )
        vals[n] = vals[par] + gain - consumption.increment(n)
    return tuple(vals)


def is_admissible(
    m: Market,
    x: int | str | Fraction,
    strategy: Strategy,
    consumption: ConsumptionProcess,
) -> bool:
    return all(v >= 0 for v in wealth_values(m, x, strategy, consumption))


def wealth_process(
    m: Market,
    x: int | str | Fraction,
    strategy: Strategy,
    consumption: ConsumptionProcess,
) -> AdaptedProcess:
    """The wealth as a positive process; requires admissibility."""
    vals = wealth_values(m, x, strategy, consumption)
    if any(v < 0 for v in vals):
        raise PreconditionError("strategy is not admissible at this capital")
    return AdaptedProcess(m.tree, vals)


# ---------------------------------------------------------------------------
# Wealth polytopes (H-representations of X(x) and XC(x))
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WealthSystem:
    """LP encoding of admissible wealth processes with budget ``x``.

    Variables: one wealth value per node, then ``d`` holdings per
    non-terminal node, then (when consumption is allowed) one cumulative
    consumption value per node.
    """

    market: Market
    budget: Fraction
    with_consumption: bool
    system: LinearSystem
    nt_rank: tuple[Optional[int], ...]

    def wealth_index(self, node: int) -> int:
        return node

    def holding_index(self, node: int, asset: int) -> int:
        rank = self.nt_rank[node]
        if rank is None:
            raise PreconditionError("terminal nodes hold nothing")
        return self.market.tree.num_nodes + rank * self.market.d + asset

    def consumption_index(self, node: int) -> int:
        if not self.with_consumption:
            raise PreconditionError("this system has no consumption variables")
        nt = sum(1 for r in self.nt_rank if r is not None)
        return self.market.tree.num_nodes + nt * self.market.d + node

    def extract_wealth(self, point: Sequence[Fraction]) -> AdaptedProcess:
        n = self.market.tree.num_nodes
        return AdaptedProcess(self.market.tree, tuple(point[:n]))

    def extract_strategy(self, point: Sequence[Fraction]) -> Strategy:
        tree = self.market.tree
        holdings: list[Optional[tuple[Fraction, ...]]] = []
        for n in range(tree.num_nodes):
            if tree.is_terminal(n):
                holdings.append(None)
            else:
                holdings.append(
                    tuple(
                        point[self.holding_index(n, i)] for i in range(self.market.d)
                    )
                )
        return Strategy(tree, tuple(holdings))

    def extract_consumption(self, point: Sequence[Fraction]) -> ConsumptionProcess:
        tree = self.market.tree
        vals = tuple(point[self.consumption_index(n)] for n in range(tree.num_nodes))
        return ConsumptionProcess(AdaptedProcess(tree, vals))


def _wealth_system(m: Market, x: Fraction, with_consumption: bool) -> WealthSystem:
    tree = m.tree
    non_terminal = tree.non_terminal_nodes()
    nt_rank: list[Optional[int]] = [None] * tree.num_nodes
    for r, n in enumerate(non_terminal):
        nt_rank[n] = r
    n_nodes = tree.num_nodes
    n_hold = len(non_terminal) * m.d
    n_cons = n_nodes if with_consumption else 0
    n_vars = n_nodes + n_hold + n_cons

    def hidx(node: int, asset: int) -> int:
        return n_nodes + nt_rank[node] * m.d + asset  # type: ignore[operator]

    rows: list[LinearConstraint] = []
    coeffs = [ZERO] * n_vars
    coeffs[0] = ONE
    rows.append(LinearConstraint(tuple(coeffs), LE, x, "budget"))
    for ch in range(1, n_nodes):
        par = tree.parent[ch]
        assert par is not None
        coeffs = [ZERO] * n_vars
        coeffs[ch] = ONE
        coeffs[par] -= ONE
        for i in range(m.d):
            coeffs[hidx(par, i)] = -m.price_increment(i, ch)
        if with_consumption:
            coeffs[n_nodes + n_hold + ch] = ONE
            coeffs[n_nodes + n_hold + par] -= ONE
        rows.append(
            LinearConstraint(tuple(coeffs), EQ, ZERO, f"edge@{tree.labels[ch]}")
        )
    if with_consumption:
        coeffs = [ZERO] * n_vars
        coeffs[n_nodes + n_hold + 0] = ONE
        rows.append(LinearConstraint(tuple(coeffs), EQ, ZERO, "consumption-start"))
        for ch in range(1, n_nodes):
            par = tree.parent[ch]
            coeffs = [ZERO] * n_vars
            coeffs[n_nodes + n_hold + ch] = ONE
            coeffs[n_nodes + n_hold + par] = -ONE
            rows.append(
                LinearConstraint(
                    tuple(coeffs), GE, ZERO, f"nondecreasing@{tree.labels[ch]}"
                )
            )

    lower: list[Optional[Fraction]] = [ZERO] * n_nodes
    lower += [None] * n_hold
    lower += [ZERO] * n_cons
    names = [f"X({lab})" for lab in tree.labels]
    names += [
        f"h({tree.labels[n]},{i})" for n in non_terminal for i in range(m.d)
    ]
    if with_consumption:
        names += [f"C({lab})" for lab in tree.labels]
    system = LinearSystem.make(n_vars, rows, lower=lower, var_names=names)
    return WealthSystem(m, x, with_consumption, system, tuple(nt_rank))


def pure_investment_polytope(m: Market, x: int | str | Fraction) -> WealthSystem:
    """Admissible pure-investment wealth processes with initial value <= x."""
    x = frac(x)
    if x < 0:
        raise PreconditionError("budget must be nonnegative")
    return _wealth_system(m, x, with_consumption=False)


def consumption_polytope(m: Market, x: int | str | Fraction) -> WealthSystem:
    """Admissible invest-and-consume wealth processes with budget <= x."""
    x = frac(x)
    if x < 0:
        raise PreconditionError("budget must be nonnegative")
    return _wealth_system(m, x, with_consumption=True)


# ---------------------------------------------------------------------------
# The deflator cone and its three LP descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeflatorMembership:
    member: bool
    reason: str = ""
    node: Optional[int] = None
    witness_point: Optional[tuple[Fraction, ...]] = None

    def __bool__(self) -> bool:
        return self.member


def _polar_of_wealth_system(ws: WealthSystem, y: AdaptedProcess) -> DeflatorMembership:
    """Is deflated wealth a supermartingale for every process in ``ws``?

    One LP per non-terminal node maximizing the one-step defect of the
    product over the whole polytope; the root condition reduces to
    y(root) <= 1 because initial wealth is capped at 1.
    """
    tree = ws.market.tree
    if y.tree != tree:
        raise PreconditionError("deflator lives on a different tree")
    if ws.budget != 1:
        raise PreconditionError("deflator membership is stated at budget 1")
    if y.initial > 1:
        return DeflatorMembership(False, reason="initial value above 1")
    n_vars = ws.system.num_vars
    for n in tree.non_terminal_nodes():
        objective = [ZERO] * n_vars
        objective[ws.wealth_index(n)] = -y.values[n]
        for ch in tree.children[n]:
            objective[ws.wealth_index(ch)] = tree.edge_prob[ch] * y.values[ch]
        out = maximize(ws.system, objective)
        if out.status is LpStatus.UNBOUNDED:
            return DeflatorMembership(
                False,
                reason=f"unbounded defect at {tree.labels[n]}",
                node=n,
                witness_point=out.point,
            )
        assert out.value is not None
        if out.value > 0:
            return DeflatorMembership(
                False,
                reason=f"positive defect at {tree.labels[n]}",
                node=n,
                witness_point=out.point,
            )
    return DeflatorMembership(True)


def y_enlargement_membership(m: Market, y: AdaptedProcess) -> DeflatorMembership:
    """Membership in the polar of pure-investment wealth at budget 1."""
    return _polar_of_wealth_system(pure_investment_polytope(m, 1), y)


def xc_polar_membership(m: Market, y: AdaptedProcess) -> DeflatorMembership:
    """Membership in the polar of invest-and-consume wealth at budget 1."""
    return _polar_of_wealth_system(consumption_polytope(m, 1), y)


def xc_measure_membership(m: Market, z: AdaptedProcess) -> DeflatorMembership:
    """The optional-decomposition test for consumable wealth.

    ``z`` starts at most at 1 and is a supermartingale under every
    one-step martingale measure.  By per-node LP duality this is exactly
    realizability as invest-and-consume wealth with budget 1; note it is a
    strictly weaker condition than deflator-cone membership.
    """
    tree = m.tree
    if z.tree != tree:
        raise PreconditionError("candidate lives on a different tree")
    if z.initial > 1:
        return DeflatorMembership(False, reason="initial value above 1")
    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        out = maximize(local_polytope(m, n), [z.values[ch] for ch in kids])
        if out.status is LpStatus.INFEASIBLE:
            raise PreconditionError("market has an empty one-step polytope")
        assert out.value is not None
        if out.value > z.values[n]:
            return DeflatorMembership(
                False,
                reason=f"not a supermartingale under some measure at {tree.labels[n]}",
                node=n,
                witness_point=out.point,
            )
    return DeflatorMembership(True)


def density_hull_membership(m: Market, y: AdaptedProcess) -> DeflatorMembership:
    """Membership in the solid fork-convex hull of density processes.

    Per node, the next values must be dominated by the current value times
    the likelihood ratio of a single local martingale measure:
    p(ch) y(ch) <= r(ch) for scaled measure weights r summing to y(node)
    and pricing the assets at y(node) times the current price.  One small
    feasibility LP per node.
    """
    tree = m.tree
    if y.tree != tree:
        raise PreconditionError("deflator lives on a different tree")
    if y.initial > 1:
        return DeflatorMembership(False, reason="initial value above 1")
    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        k = len(kids)
        rows = [LinearConstraint((ONE,) * k, EQ, y.values[n], "mass")]
        for i in range(m.d):
            rows.append(
                LinearConstraint(
                    tuple(m.prices[i].values[ch] for ch in kids),
                    EQ,
                    y.values[n] * m.prices[i].values[n],
                    f"price[{i}]",
                )
            )
        lower = [tree.edge_prob[ch] * y.values[ch] for ch in kids]
        system = LinearSystem.make(k, rows, lower=lower)
        out = minimize(system, [0] * k)
        if out.status is LpStatus.INFEASIBLE:
            return DeflatorMembership(
                False,
                reason=f"no dominating likelihood ratio at {tree.labels[n]}",
                node=n,
            )
    return DeflatorMembership(True)


@dataclass(frozen=True)
class LiftedDeflatorSystem:
    """H-representation of the deflator cone with scaled-measure variables.

    A deflator y belongs to the cone iff at every non-terminal node there
    is a local martingale measure q with y(ch) <= y(node) q(ch)/p(ch);
    writing r(ch) = y(node) q(ch) makes that linear: r >= 0 sums to
    y(node), prices the assets at y(node) times the spot, and dominates
    p(ch) y(ch) per edge.  Maximizing linear functionals of y over the
    cone is then a single LP over (y, r).
    """

    market: Market
    system: LinearSystem

    def y_index(self, node: int) -> int:
        return node

    def r_index(self, child: int) -> int:
        # one r per non-root node, laid out after the y block
        return self.market.tree.num_nodes + child - 1


def lifted_deflator_system(m: Market) -> LiftedDeflatorSystem:
    tree = m.tree
    n_nodes = tree.num_nodes
    n_vars = n_nodes + (n_nodes - 1)
    rows: list[LinearConstraint] = []
    coeffs = [ZERO] * n_vars
    coeffs[0] = ONE
    rows.append(LinearConstraint(tuple(coeffs), LE, ONE, "initial"))

    def ridx(child: int) -> int:
        return n_nodes + child - 1

    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        coeffs = [ZERO] * n_vars
        for ch in kids:
            coeffs[ridx(ch)] = ONE
        coeffs[n] -= ONE
        rows.append(LinearConstraint(tuple(coeffs), EQ, ZERO, f"mass@{tree.labels[n]}"))
        for i in range(m.d):
            coeffs = [ZERO] * n_vars
            for ch in kids:
                coeffs[ridx(ch)] = m.prices[i].values[ch]
            coeffs[n] -= m.prices[i].values[n]
            rows.append(
                LinearConstraint(
                    tuple(coeffs), EQ, ZERO, f"price[{i}]@{tree.labels[n]}"
                )
            )
        for ch in kids:
            coeffs = [ZERO] * n_vars
            coeffs[ch] = tree.edge_prob[ch]
            coeffs[ridx(ch)] = -ONE
            rows.append(
                LinearConstraint(tuple(coeffs), LE, ZERO, f"dominate@{tree.labels[ch]}")
            )
    names = [f"y({lab})" for lab in tree.labels]
    names += [f"r({tree.labels[ch]})" for ch in range(1, n_nodes)]
    system = LinearSystem.make(n_vars, rows, lower=0, var_names=names)
    return LiftedDeflatorSystem(m, system)


def wealth_bipolar_contains(m: Market, z: AdaptedProcess) -> DeflatorMembership:
    """Bipolar membership of a process against pure-investment wealth.

    Maximizes, over the lifted deflator cone, first the initial product
    and then the per-node supermartingale defect of z times the deflator.
    """
    tree = m.tree
    if z.tree != tree:
        raise PreconditionError("candidate lives on a different tree")
    lifted = lifted_deflator_system(m)
    n_vars = lifted.system.num_vars
    objective = [ZERO] * n_vars
    objective[lifted.y_index(0)] = z.initial
    out = maximize(lifted.system, objective)
    if out.status is LpStatus.UNBOUNDED or (out.value is not None and out.value > 1):
        return DeflatorMembership(
            False, reason="initial product exceeds 1", witness_point=out.point
        )
    for n in tree.non_terminal_nodes():
        objective = [ZERO] * n_vars
        objective[lifted.y_index(n)] = -z.values[n]
        for ch in tree.children[n]:
            objective[lifted.y_index(ch)] = tree.edge_prob[ch] * z.values[ch]
        out = maximize(lifted.system, objective)
        if out.status is LpStatus.UNBOUNDED or (
            out.value is not None and out.value > 0
        ):
            return DeflatorMembership(
                False,
                reason=f"positive defect at {tree.labels[n]}",
                node=n,
                witness_point=out.point,
            )
    return DeflatorMembership(True)


@dataclass(frozen=True)
class XcFeasibility:
    feasible: bool
    strategy: Optional[Strategy] = None
    consumption: Optional[ConsumptionProcess] = None

    def __bool__(self) -> bool:
        return self.feasible


def xc_feasibility(
    m: Market, z: AdaptedProcess, x: int | str | Fraction = 1
) -> XcFeasibility:
    """Can ``z`` be realized as invest-and-consume wealth with budget x?

    Feasibility LP over holdings and consumption with the wealth pinned to
    ``z``; the certificate is the realizing strategy and consumption.
    """
    tree = m.tree
    if z.tree != tree:
        raise PreconditionError("candidate lives on a different tree")
    x = frac(x)
    if z.initial > x:
        return XcFeasibility(False)
    non_terminal = tree.non_terminal_nodes()
    nt_rank = {n: r for r, n in enumerate(non_terminal)}
    n_hold = len(non_terminal) * m.d
    n_vars = n_hold + tree.num_nodes  # holdings then cumulative consumption
    rows: list[LinearConstraint] = []
    coeffs = [ZERO] * n_vars
    coeffs[n_hold + 0] = ONE
    rows.append(LinearConstraint(tuple(coeffs), EQ, ZERO, "consumption-start"))
    for ch in range(1, tree.num_nodes):
        par = tree.parent[ch]
        assert par is not None
        coeffs = [ZERO] * n_vars
        for i in range(m.d):
            coeffs[nt_rank[par] * m.d + i] = m.price_increment(i, ch)
        coeffs[n_hold + ch] = -ONE
        coeffs[n_hold + par] += ONE
        rows.append(
            LinearConstraint(
                tuple(coeffs),
                EQ,
                z.values[ch] - z.values[par],
                f"edge@{tree.labels[ch]}",
            )
        )
        coeffs = [ZERO] * n_vars
        coeffs[n_hold + ch] = ONE
        coeffs[n_hold + par] -= ONE
        rows.append(
            LinearConstraint(tuple(coeffs), GE, ZERO, f"nondecreasing@{tree.labels[ch]}")
        )
    lower: list[Optional[Fraction]] = [None] * n_hold + [ZERO] * tree.num_nodes
    system = LinearSystem.make(n_vars, rows, lower=lower)
    out = minimize(system, [0] * n_vars)
    if out.status is LpStatus.INFEASIBLE:
        return XcFeasibility(False)
    assert out.point is not None
    holdings: list[Optional[tuple[Fraction, ...]]] = [None] * tree.num_nodes
    for n in non_terminal:
        holdings[n] = tuple(
            out.point[nt_rank[n] * m.d + i] for i in range(m.d)
        )
    strategy = Strategy(tree, tuple(holdings))
    consumption = ConsumptionProcess(
        AdaptedProcess(tree, tuple(out.point[n_hold:]))
    )
    if wealth_values(m, z.initial, strategy, consumption) != z.values:
        raise PostconditionError("feasibility certificate does not replay the wealth")
    return XcFeasibility(True, strategy, consumption)


# ---------------------------------------------------------------------------
# Superhedging and the budget constraint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuperhedgeResult:
    value: Fraction
    envelope: AdaptedProcess  # best expected remaining payoff, nodewise
    strategy: Strategy
    wealth: AdaptedProcess  # pure-investment wealth from the value
    residual: AdaptedProcess  # wealth minus envelope: nondecreasing, starts at 0
    argmax_measure: tuple[Fraction, ...]  # one-step q per non-root node


def _terminal_obligation(
    m: Market, claim: RandomVariable | ConsumptionDensity
) -> tuple[ConsumptionProcess, RandomVariable]:
    """Normalize a claim to (cumulative stream, terminal payoff)."""
    tree = m.tree
    if isinstance(claim, ConsumptionDensity):
        cum = claim.cumulative()
        space = terminal_space(tree)
        payout = RandomVariable(
            space, tuple(cum.cumulative.values[w] for w in space.outcomes)
        )
        return cum, payout
    if claim.space != terminal_space(tree):
        raise PreconditionError("claim must live on the terminal nodes")
    vals = [ZERO] * tree.num_nodes
    for w in claim.space.outcomes:
        vals[w] = claim[w]
    return ConsumptionProcess.zero(tree), claim


def superhedge_value(
    m: Market, claim: RandomVariable | ConsumptionDensity
) -> SuperhedgeResult:
    """Minimal capital whose pure-investment wealth dominates the claim.

    Backward recursion: the envelope at a node is the best one-step
    expectation of the next envelope over the node's local measure
    polytope.  The hedging strategy solving each per-node domination LP
    turns the envelope into wealth minus a nondecreasing residual, which
    is re-checked exactly, as is envelope >= cumulative stream.
    """
    tree = m.tree
    cum, payout = _terminal_obligation(m, claim)
    env = [ZERO] * tree.num_nodes
    for w in payout.space.outcomes:
        env[w] = payout[w]
    argmax: dict[int, tuple[Fraction, ...]] = {}
    for t in range(tree.horizon - 1, -1, -1):
        for n in tree.nodes_at(t):
            kids = tree.children[n]
            out = maximize(local_polytope(m, n), [env[ch] for ch in kids])
            if out.status is LpStatus.INFEASIBLE:
                raise PreconditionError(
                    "market admits no one-step martingale measure; reject it first"
                )
            if out.status is LpStatus.UNBOUNDED:
                raise PostconditionError("one-step polytopes are bounded")
            assert out.value is not None and out.point is not None
            env[n] = out.value
            argmax[n] = out.point
    envelope = AdaptedProcess(tree, tuple(env))
    if not all(
        envelope.values[n] >= cum.cumulative.values[n] for n in range(tree.num_nodes)
    ):
        raise PostconditionError("envelope fell below the cumulative stream")

    holdings: list[Optional[tuple[Fraction, ...]]] = [None] * tree.num_nodes
    for n in tree.non_terminal_nodes():
        kids = tree.children[n]
        rows = [
            LinearConstraint(
                tuple(m.price_increment(i, ch) for i in range(m.d)),
                GE,
                env[ch] - env[n],
                f"dominate@{tree.labels[ch]}",
            )
            for ch in kids
        ]
        out = minimize(LinearSystem.make(m.d, rows, lower=None), [0] * m.d)
        if out.status is LpStatus.INFEASIBLE:
            raise PostconditionError(
                "hedging LP infeasible although the envelope recursion held"
            )
        assert out.point is not None
        holdings[n] = out.point
    strategy = Strategy(tree, tuple(holdings))
    wealth = wealth_process(m, env[0], strategy, ConsumptionProcess.zero(tree))

    residual_vals = tuple(
        wealth.values[n] - envelope.values[n] for n in range(tree.num_nodes)
    )
    residual = AdaptedProcess(tree, residual_vals)
    for ch in range(1, tree.num_nodes):
        par = tree.parent[ch]
        assert par is not None
        if residual.values[ch] < residual.values[par]:
            raise PostconditionError("superhedge residual must be nondecreasing")
    if residual.initial != 0:
        raise PostconditionError("superhedge residual must start at 0")

    q_vals = [ZERO] * (tree.num_nodes - 1)
    poly = emm_polytope(m)
    for n, local in argmax.items():
        for ch, v in zip(tree.children[n], local):
            q_vals[poly.var_nodes.index(ch)] = v
    return SuperhedgeResult(
        value=env[0],
        envelope=envelope,
        strategy=strategy,
        wealth=wealth,
        residual=residual,
        argmax_measure=tuple(q_vals),
    )


@dataclass(frozen=True)
class BudgetOutcome:
    admissible: bool
    superhedge: Fraction
    strategy: Optional[Strategy] = None  # certificate when admissible
    violating_measure: Optional[tuple[Fraction, ...]] = None  # otherwise

    def __bool__(self) -> bool:
        return self.admissible


def budget_check(
    m: Market, density: ConsumptionDensity, x: int | str | Fraction
) -> BudgetOutcome:
    """Is the density consumable from capital ``x``?  Two oracles, one verdict.

    Primal: feasibility of the consumption polytope with consumption
    pinned to the density's cumulative (certificate: the strategy).
    Dual: the superhedge value of the cumulative stream compared with
    ``x`` (certificate: the expectation-maximizing measure).  The two must
    coincide; disagreement is a defect, not a result.
    """
    x = frac(x)
    if x < 0:
        raise PreconditionError("capital must be nonnegative")
    cum = density.cumulative()
    tree = m.tree

    sh = superhedge_value(m, density)
    dual_ok = sh.value <= x

    # primal: wealth variables eliminated into (holdings); wealth must stay >= 0
    non_terminal = tree.non_terminal_nodes()
    nt_rank = {n: r for r, n in enumerate(non_terminal)}
    n_vars = len(non_terminal) * m.d
    measure_rows: list[LinearConstraint] = []
    # wealth at node n equals x + sum of gains - C(n); express gains recursively
    # via path sums: W(n) = x - C(n) + sum_{edges e on path} h(par(e)) . dS(e)
    paths: dict[int, list[tuple[int, int]]] = {0: []}
    for ch in range(1, tree.num_nodes):
        par = tree.parent[ch]
        assert par is not None
        paths[ch] = paths[par] + [(par, ch)]
    for n in range(tree.num_nodes):
        coeffs = [ZERO] * n_vars
        for par, ch in paths[n]:
            for i in range(m.d):
                coeffs[nt_rank[par] * m.d + i] += m.price_increment(i, ch)
        measure_rows.append(
            LinearConstraint(
                tuple(coeffs),
                GE,
                cum.cumulative.values[n] - x,
                f"solvency@{tree.labels[n]}",
            )
        )
    system = LinearSystem.make(n_vars, measure_rows, lower=None)
    out = minimize(system, [0] * n_vars)
    primal_ok = out.status is not LpStatus.INFEASIBLE

    if primal_ok != dual_ok:
        raise PostconditionError(
            "budget oracles disagree: primal feasibility vs superhedge value"
        )
    if not primal_ok:
        q = sh.argmax_measure
        expected = _expected_terminal(m, q, cum)
        if expected != sh.value or expected <= x:
            raise PostconditionError("violating measure fails to certify")
        return BudgetOutcome(False, sh.value, violating_measure=q)

    assert out.point is not None
    holdings: list[Optional[tuple[Fraction, ...]]] = [None] * tree.num_nodes
    for n in non_terminal:
        holdings[n] = tuple(out.point[nt_rank[n] * m.d + i] for i in range(m.d))
    strategy = Strategy(tree, tuple(holdings))
    if not is_admissible(m, x, strategy, cum):
        raise PostconditionError("primal certificate is not admissible")
    return BudgetOutcome(True, sh.value, strategy=strategy)


def _expected_terminal(
    m: Market, q: Sequence[Fraction], cum: ConsumptionProcess
) -> Fraction:
    """E_Q of the terminal cumulative value under one-step probabilities q."""
    tree = m.tree
    poly = emm_polytope(m)
    prob = [ONE] * tree.num_nodes
    for i, n in enumerate(poly.var_nodes):
        par = tree.parent[n]
        assert par is not None
        prob[n] = prob[par] * q[i]
    return sum(
        (prob[w] * cum.cumulative.values[w] for w in tree.terminal_nodes()), ZERO
    )


# ---------------------------------------------------------------------------
# Structural duality verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructureRecord:
    section: str  # "product" | "deflator" | "wealth"
    detail: str
    ok: bool


@dataclass(frozen=True)
class StructureReport:
    records: tuple[StructureRecord, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.records)

    def counts(self) -> tuple[int, int]:
        return sum(1 for r in self.records if r.ok), len(self.records)


def sample_consumption_wealth(
    m: Market, count: int, rng: random.Random | int, budget: Fraction = ONE
) -> list[tuple[AdaptedProcess, ConsumptionProcess]]:
    """Vertices of the invest-and-consume polytope under random objectives."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    ws = consumption_polytope(m, budget)
    tree = m.tree
    out: list[tuple[AdaptedProcess, ConsumptionProcess]] = []
    for _ in range(count):
        objective = [ZERO] * ws.system.num_vars
        for n in range(tree.num_nodes):
            objective[ws.wealth_index(n)] = Fraction(rng.randint(-2, 3))
            objective[ws.consumption_index(n)] = Fraction(rng.randint(-2, 2))
        res = maximize(ws.system, objective)
        if res.status is not LpStatus.OPTIMAL:
            raise PostconditionError(
                "consumption polytope should be bounded in wealth and consumption"
            )
        assert res.point is not None
        out.append((ws.extract_wealth(res.point), ws.extract_consumption(res.point)))
    return out


def verify_structure(
    m: Market,
    deflator_probes: Sequence[AdaptedProcess] = (),
    wealth_probes: Sequence[AdaptedProcess] = (),
    pair_samples: int = 4,
    rng: random.Random | int = 0,
) -> StructureReport:
    """Exercise the wealth/deflator duality on one market.

    * product: deflated invest-and-consume wealth is a supermartingale for
      every deflator probe that belongs to the cone (sampled wealth);
    * deflator: the three membership oracles for the cone agree on every
      probe;
    * wealth: realizability as consumption wealth, the supermartingale
      test under every one-step measure, and bipolar membership against
      pure investment agree on every probe.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    records: list[StructureRecord] = []
    pairs = sample_consumption_wealth(m, pair_samples, rng)

    for yi, y in enumerate(deflator_probes):
        direct = y_enlargement_membership(m, y)
        via_consumption = xc_polar_membership(m, y)
        via_densities = density_hull_membership(m, y)
        agree = direct.member == via_consumption.member == via_densities.member
        records.append(
            StructureRecord(
                "deflator",
                f"probe {yi}: {direct.member}/{via_consumption.member}/{via_densities.member}",
                agree,
            )
        )
        if direct.member:
            for wi, (w, _cons) in enumerate(pairs):
                prod = y.pointwise_mul(w)
                ok = prod.initial <= 1 and is_supermartingale(prod)
                records.append(
                    StructureRecord(
                        "product", f"probe {yi} x wealth {wi}", ok
                    )
                )

    for zi, z in enumerate(wealth_probes):
        direct = xc_feasibility(m, z).feasible
        via_measures = xc_measure_membership(m, z).member
        via_bipolar = wealth_bipolar_contains(m, z).member
        agree = direct == via_measures == via_bipolar
        records.append(
            StructureRecord(
                "wealth",
                f"probe {zi}: {direct}/{via_measures}/{via_bipolar}",
                agree,
            )
        )
    return StructureReport(tuple(records))
