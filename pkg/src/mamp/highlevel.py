"""Constraint-tree search over per-agent paths, plus the baselines.

One parameterized best-first/focal search covers the whole family:

* cbs    -- f1H = cost, no focal, unit weights everywhere; optimal.
* bcbs   -- focal over cost at both levels; w1L*w2L*wH sub-optimal.
* ecbs   -- f1H = per-node lower bound LB, focal membership cost <= wH*min LB.
* xcbs   -- cbs + warm-starting each replan with the parent node's path.
* xecbs  -- ecbs + experience, path-aware experience termination by default.

`plan_prioritized` is the sequential baseline (incomplete by design) and
`plan_coupled_oracle` searches the composite space exhaustively; it is exact
and only meant for desk-scale cross-checking.

A planning query runs single-threaded over its own queues; domains are
read-only during a query apart from their counters and memo tables.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .core import (Conflict, Constraint, ConstraintIndex, Path, Solution,
                   conflict_to_constraints, conflicts_with_agent,
                   detect_conflicts, path_cost, strip_time, violates)
from .domains.base import LatticeDomain
from . import lowlevel
from .lowlevel import LLParams

VARIANTS = ("cbs", "bcbs", "ecbs", "xcbs", "xecbs", "pp", "coupled")


class OracleGuardError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    variant: str
    w1L: float = 1.0
    w2L: float = 1.0
    wH: float = 1.0
    use_experience: bool = False
    experience_source: str = "parent-path"  # parent-path | branch-paths | all-ct-paths
    timeout: float = 60.0
    seed: int = 0
    termination: str | None = None          # None: path-aware for xecbs only
    cache: bool = True
    horizon: int | None = None
    tmax: int = 128

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown planner variant {self.variant!r}")
        if min(self.w1L, self.w2L, self.wH) < 1.0:
            raise ValueError("suboptimality factors must be >= 1")
        fixed_unit = {
            "cbs": ("w1L", "w2L", "wH"),
            "xcbs": ("w2L", "wH"),
            "pp": ("w2L", "wH"),
            "coupled": ("w1L", "w2L", "wH"),
        }.get(self.variant, ())
        for name in fixed_unit:
            if getattr(self, name) != 1.0:
                raise ValueError(f"{self.variant} requires {name} = 1")
        wants_exp = self.variant in ("xcbs", "xecbs")
        if self.use_experience != wants_exp:
            raise ValueError(f"{self.variant} requires use_experience={wants_exp}")

    @staticmethod
    def make(variant: str, **kw) -> "PlannerConfig":
        v = variant.lower().replace("_", "-")
        if v in ("coupledoracle", "coupled-oracle", "oracle"):
            v = "coupled"
        kw.setdefault("use_experience", v in ("xcbs", "xecbs"))
        if v in ("cbs", "coupled"):
            kw.setdefault("w1L", 1.0)
        if v in ("cbs", "coupled", "xcbs", "pp"):
            kw.setdefault("w2L", 1.0)
            kw.setdefault("wH", 1.0)
        return PlannerConfig(v, **kw)

    # derived search-shape switches
    @property
    def f1H(self) -> str:
        return "lb" if self.variant in ("ecbs", "xecbs") else "cost"

    @property
    def f2H(self) -> str:
        return "conflicts" if self.variant in ("bcbs", "ecbs", "xecbs") else "cost"

    @property
    def f2L(self) -> str:
        return "conflicts" if self.variant in ("bcbs", "ecbs", "xecbs") else "f1"

    @property
    def effective_termination(self) -> str:
        if self.termination is not None:
            return self.termination
        return "path-aware" if self.variant == "xecbs" else "simple"

    @property
    def bound_factor(self) -> float:
        return self.w1L * self.w2L * self.wH


@dataclass(eq=False)
class CTNode:
    index: int
    constraints: frozenset[Constraint]
    paths: tuple[Path, ...]
    cost: int
    conflicts: tuple[Conflict, ...]
    lbs: tuple[float, ...]
    parent: Optional["CTNode"] = field(default=None, repr=False)
    popped: bool = field(default=False, repr=False)
    admitted: bool = field(default=False, repr=False)

    @property
    def lb_total(self) -> float:
        return sum(self.lbs)


@dataclass
class PlanResult:
    variant: str
    status: str                 # success | infeasible | exhausted | timeout
    solution: Solution | None = None
    cost: int | None = None
    lb: float | None = None     # min f1H over CT OPEN at acceptance
    ct_expansions: int = 0
    ll_expansions: int = 0
    collision_checks: int = 0
    wall_time: float = 0.0
    constraints: frozenset[Constraint] | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


class CTQueue:
    """Insert-only focal structure for CT nodes.

    OPEN is ordered by f1H (cost or LB); FOCAL holds the nodes with
    cost <= wH * min f1H, ordered by f2H. When FOCAL admits nothing (can
    happen at wH=1 with f1H=LB, where cost >= LB per node), the min-f1H
    node is selected, which degenerates to plain best-first on f1H.
    """

    def __init__(self, wH: float, f1_mode: str, f2_mode: str):
        self.wH = wH
        self.f1_mode = f1_mode
        self.f2_mode = f2_mode
        self._by_f1: list = []
        self._by_cost: list = []
        self._pending: list = []
        self._focal: list = []
        self._tick = 0  # heap tiebreaker; CT nodes are unorderable

    def _f1(self, n: CTNode) -> float:
        return n.lb_total if self.f1_mode == "lb" else float(n.cost)

    def _f2_key(self, n: CTNode):
        if self.f2_mode == "conflicts":
            return (len(n.conflicts), n.cost, n.index)
        return (n.cost, n.index)

    def insert(self, n: CTNode) -> None:
        heapq.heappush(self._by_f1, (self._f1(n), n.index, n))
        heapq.heappush(self._by_cost, (n.cost, n.index, n))
        self._tick += 1
        heapq.heappush(self._pending, (n.cost, n.index, self._tick, n))

    def __len__(self) -> int:
        return sum(1 for _, _, n in self._by_f1 if not n.popped)

    def pop(self) -> tuple[CTNode | None, float | None]:
        """Returns (selected node, min f1H at selection)."""
        while self._by_f1 and self._by_f1[0][2].popped:
            heapq.heappop(self._by_f1)
        if not self._by_f1:
            return None, None
        base = self._by_f1[0][0]
        bound = self.wH * base
        if self.wH > 1.0:
            # Loose lower bounds can empty the focal set entirely (cost >= LB
            # per node); flooring the threshold at the cheapest open node
            # keeps f2 guidance alive without weakening the wH*wL*C* bound.
            while self._by_cost and self._by_cost[0][2].popped:
                heapq.heappop(self._by_cost)
            if self._by_cost:
                bound = max(bound, float(self._by_cost[0][0]))
        while self._pending:
            cost, _, _t, node = self._pending[0]
            if node.popped or node.admitted:
                heapq.heappop(self._pending)
                continue
            if cost > bound:
                break
            heapq.heappop(self._pending)
            node.admitted = True
            self._tick += 1
            heapq.heappush(self._focal, (self._f2_key(node), self._tick, node))
        while self._focal:
            _, _t, node = heapq.heappop(self._focal)
            if node.popped or not node.admitted:
                continue
            if node.cost > bound:  # threshold shrank since admission
                node.admitted = False
                self._tick += 1
                heapq.heappush(self._pending, (node.cost, node.index, self._tick, node))
                continue
            node.popped = True
            return node, base
        while self._by_f1:  # focal empty: fall back to min f1H
            _, _, node = heapq.heappop(self._by_f1)
            if not node.popped:
                node.popped = True
                return node, base
        return None, None


def select_ct_node(queue: CTQueue) -> CTNode | None:
    """Next CT node under the configured focal rule."""
    node, _ = queue.pop()
    return node


def _check_instance(domain: LatticeDomain, starts, goals) -> tuple[list, list]:
    starts = [tuple(s) for s in starts]
    goals = [tuple(g) for g in goals]
    if len(starts) != len(goals):
        raise ValueError("mismatched agent counts")
    declared = getattr(domain, "num_agents", None)
    if declared is not None and declared != len(starts):
        raise ValueError("mismatched agent counts")
    return starts, goals


def _ll_params(config: PlannerConfig) -> LLParams:
    return LLParams(w1=config.w1L, w2=config.w2L, f2=config.f2L,
                    horizon=config.horizon, tmax=config.tmax,
                    termination=config.effective_termination)


def _experience_for(node: CTNode, agent: int, config: PlannerConfig,
                    registry: list[list]) -> tuple:
    if not config.use_experience:
        return ()
    if config.experience_source == "parent-path":
        return strip_time(node.paths[agent])
    seqs: list = []
    if config.experience_source == "branch-paths":
        cur: CTNode | None = node
        while cur is not None:
            seqs.append(strip_time(cur.paths[agent]))
            cur = cur.parent
    else:  # all-ct-paths
        seqs = list(reversed(registry[agent]))
    unique, seen = [], set()
    for s in seqs:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return tuple(unique)


def expand_ct_node(domain: LatticeDomain, node: CTNode, starts, goals,
                   config: PlannerConfig, llp: LLParams, deadline: float | None,
                   indexer, registry: list[list]) -> tuple[list[CTNode], int, bool]:
    """Branch on the first conflict: one child per derived constraint, with
    only the affected agent replanned. Children whose replan fails are
    discarded. Returns (children, low-level expansions, timed_out)."""
    n = len(node.paths)
    children: list[CTNode] = []
    ll_total = 0
    for c in conflict_to_constraints(node.conflicts[0]):
        agent = c.agent
        new_constraints = node.constraints | {c}
        cidx = ConstraintIndex(new_constraints, agent)
        child_llp = llp
        if llp.horizon is not None and llp.horizon < cidx.max_time + 1:
            child_llp = replace(llp, horizon=cidx.max_time + 1)
        needs_others = config.f2L == "conflicts" or \
            config.effective_termination == "path-aware"
        others = [(j, node.paths[j]) for j in range(n) if j != agent] \
            if needs_others else None
        res = lowlevel.solve(domain, agent, starts[agent], goals[agent], cidx,
                             _experience_for(node, agent, config, registry),
                             child_llp, other_paths=others, deadline=deadline)
        ll_total += res.expansions
        if res.status == "timeout":
            return children, ll_total, True
        if not res.success:
            continue
        new_paths = node.paths[:agent] + (res.path,) + node.paths[agent + 1:]
        new_lbs = node.lbs[:agent] + (max(node.lbs[agent], res.lower_bound),) \
            + node.lbs[agent + 1:]
        kept = [cf for cf in node.conflicts if agent not in cf.agents]
        kept.extend(conflicts_with_agent(new_paths, domain, agent))
        kept.sort(key=Conflict.sort_key)
        child = CTNode(next(indexer), new_constraints, new_paths,
                       node.cost - path_cost(node.paths[agent]) + res.cost,
                       tuple(kept), new_lbs, parent=node)
        registry[agent].append(strip_time(res.path))
        children.append(child)
    return children, ll_total, False


def plan(domain: LatticeDomain, starts, goals, config: PlannerConfig) -> PlanResult:
    """Constraint-tree search; returns a conflict-free solution whose cost is
    within w1L*w2L*wH of the optimal sum of costs, or a failure result on
    timeout / exhaustion."""
    starts, goals = _check_instance(domain, starts, goals)
    t0 = time.perf_counter()
    deadline = time.monotonic() + config.timeout
    checks0 = domain.stats.geometry_checks
    llp = _ll_params(config)
    n = len(starts)
    ll_total = 0

    def finish(status, **kw) -> PlanResult:
        return PlanResult(config.variant, status, ll_expansions=ll_total,
                          collision_checks=domain.stats.geometry_checks - checks0,
                          wall_time=time.perf_counter() - t0, **kw)

    paths, lbs = [], []
    for i in range(n):
        res = lowlevel.solve(domain, i, starts[i], goals[i], (), (), llp,
                             deadline=deadline)
        ll_total += res.expansions
        if res.status == "timeout":
            return finish("timeout")
        if not res.success:
            return finish("infeasible")
        paths.append(res.path)
        lbs.append(res.lower_bound)

    root = CTNode(0, frozenset(), tuple(paths),
                  sum(path_cost(p) for p in paths),
                  tuple(detect_conflicts(paths, domain)), tuple(lbs))
    queue = CTQueue(config.wH, config.f1H, config.f2H)
    queue.insert(root)
    registry: list[list] = [[strip_time(p)] for p in paths]
    indexer = itertools.count(1)
    ct_expansions = 0

    while True:
        if time.monotonic() > deadline:
            return finish("timeout", ct_expansions=ct_expansions)
        node, base = queue.pop()
        if node is None:
            return finish("exhausted", ct_expansions=ct_expansions)
        if not node.conflicts:
            return finish("success", solution=Solution(node.paths), cost=node.cost,
                          lb=base, ct_expansions=ct_expansions,
                          constraints=node.constraints)
        ct_expansions += 1
        children, ll_exp, timed_out = expand_ct_node(
            domain, node, starts, goals, config, llp, deadline, indexer, registry)
        ll_total += ll_exp
        if timed_out:
            return finish("timeout", ct_expansions=ct_expansions)
        for child in children:
            queue.insert(child)


def plan_prioritized(domain: LatticeDomain, starts, goals,
                     config: PlannerConfig | None = None,
                     order: Sequence[int] | None = None) -> PlanResult:
    """Sequential baseline: agents plan in priority order and treat earlier
    agents' paths as hard moving obstacles. Failure of any agent fails the
    whole query (incomplete by design)."""
    if config is None:
        config = PlannerConfig.make("pp")
    starts, goals = _check_instance(domain, starts, goals)
    n = len(starts)
    order = tuple(order) if order is not None else tuple(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the agents")
    t0 = time.perf_counter()
    deadline = time.monotonic() + config.timeout
    checks0 = domain.stats.geometry_checks
    ll_total = 0
    fixed: list[tuple[int, Path]] = []
    paths: dict[int, Path] = {}
    for agent in order:
        span = max((p.duration for _, p in fixed), default=0)
        base = config.horizon if config.horizon is not None \
            else min(domain.num_vertices(agent), config.tmax)
        llp = LLParams(w1=config.w1L, w2=1.0, f2="f1", horizon=base + span,
                       tmax=config.tmax)
        res = lowlevel.solve(domain, agent, starts[agent], goals[agent], (), (),
                             llp, other_paths=fixed, hard_paths=True,
                             deadline=deadline)
        ll_total += res.expansions
        status = "timeout" if res.status == "timeout" else "infeasible"
        if not res.success:
            return PlanResult(config.variant, status, ll_expansions=ll_total,
                              collision_checks=domain.stats.geometry_checks - checks0,
                              wall_time=time.perf_counter() - t0)
        fixed.append((agent, res.path))
        paths[agent] = res.path
    solution = Solution(tuple(paths[i] for i in range(n)))
    return PlanResult(config.variant, "success", solution=solution,
                      cost=solution.sum_of_costs, ll_expansions=ll_total,
                      collision_checks=domain.stats.geometry_checks - checks0,
                      wall_time=time.perf_counter() - t0,
                      constraints=frozenset())


def plan_coupled_oracle(domain: LatticeDomain, starts, goals,
                        horizon: int = 64, branching_limit: int = 4096,
                        deadline: float | None = None) -> PlanResult:
    """Exact minimum sum-of-costs solution by uniform-cost search over the
    composite timed lattice. Guarded against instances whose composite
    branching factor exceeds ``branching_limit``.

    The search state is (per-agent configs, per-agent parked-at-goal streak);
    waits at the goal are free until the agent leaves, at which point the
    streak is charged retroactively, which makes g the exact sum of costs.
    """
    starts, goals = _check_instance(domain, starts, goals)
    n = len(starts)
    t0 = time.perf_counter()
    checks0 = domain.stats.geometry_checks
    for i in range(n):
        if not domain.is_state_valid(i, starts[i]) or not domain.is_state_valid(i, goals[i]):
            raise ValueError("invalid endpoint")
    branching = 1
    for i in range(n):
        branching *= domain.max_degree(i)
    if branching > branching_limit:
        raise OracleGuardError("oracle guard exceeded")

    def finish(status, **kw):
        return PlanResult("coupled", status,
                          collision_checks=domain.stats.geometry_checks - checks0,
                          wall_time=time.perf_counter() - t0, **kw)

    def composite_ok(frm, to) -> bool:
        for i, j in itertools.combinations(range(n), 2):
            if domain.pairwise_collision(i, to[i], to[i], j, to[j], to[j]):
                return False
            moving = to[i] != frm[i] or to[j] != frm[j]
            if moving and domain.pairwise_collision(i, frm[i], to[i], j, frm[j], to[j]):
                return False
        return True

    start_cfg = tuple(starts)
    goal_cfg = tuple(goals)
    for i, j in itertools.combinations(range(n), 2):
        if domain.pairwise_collision(i, starts[i], starts[i], j, starts[j], starts[j]):
            return finish("infeasible")
    start_state = (start_cfg, (0,) * n)
    dist = {start_state: 0}
    parent: dict = {start_state: None}
    heap = [(0, start_state, 0)]
    while heap:
        g, state, depth = heapq.heappop(heap)
        if g > dist.get(state, math.inf):
            continue
        configs, waited = state
        if configs == goal_cfg:
            composites = []
            cur = state
            while cur is not None:
                composites.append(cur[0])
                cur = parent[cur]
            composites.reverse()
            sol = Solution(tuple(Path(tuple(c[i] for c in composites))
                                 for i in range(n)))
            assert sol.sum_of_costs == g
            return finish("success", solution=sol, cost=g, lb=float(g))
        if deadline is not None and time.monotonic() > deadline:
            return finish("timeout")
        if depth >= horizon:
            continue
        options = [domain.successor_configs(i, configs[i]) for i in range(n)]
        for combo in itertools.product(*options):
            if not composite_ok(configs, combo):
                continue
            step = 0
            new_waited = []
            for i in range(n):
                q, q2, w = configs[i], combo[i], waited[i]
                if q2 == q:
                    if q == goals[i]:
                        new_waited.append(w + 1)
                    else:
                        step += 1
                        new_waited.append(0)
                else:
                    step += 1 + (w if q == goals[i] else 0)
                    new_waited.append(0)
            ns = (combo, tuple(new_waited))
            g2 = g + step
            if g2 < dist.get(ns, math.inf):
                dist[ns] = g2
                parent[ns] = state
                heapq.heappush(heap, (g2, ns, depth + 1))
    return finish("exhausted")


def run_planner(domain: LatticeDomain, starts, goals,
                config: PlannerConfig) -> PlanResult:
    """Dispatch a query to the configured planner variant."""
    if config.variant == "pp":
        return plan_prioritized(domain, starts, goals, config)
    if config.variant == "coupled":
        return plan_coupled_oracle(
            domain, starts, goals,
            horizon=config.horizon if config.horizon is not None else 64,
            deadline=time.monotonic() + config.timeout)
    return plan(domain, starts, goals, config)


def validate_solution(domain: LatticeDomain, solution: Solution,
                      constraints: Sequence[Constraint] = ()) -> bool:
    """Conflict-freeness plus per-path constraint satisfaction."""
    if detect_conflicts(solution.paths, domain):
        return False
    return not any(violates(solution.paths[c.agent], c) for c in constraints)
