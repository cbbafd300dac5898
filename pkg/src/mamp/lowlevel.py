"""Single-agent planner over timed lattice states.

A focal weighted-A* search: OPEN is ordered by f1 = g + w1*h and FOCAL is
the sub-queue {s : f1(s) <= w2 * min f1} ordered by f2. A previously found
path can be passed in as a time-stripped *experience*; its still-valid
suffixes are injected into OPEN so the search can jump over regions it
already explored in an earlier query. With an empty experience the search
is exactly plain focal / weighted A*.

Tie-breaking (fixed for reproducibility): OPEN prefers larger g, then the
lexicographically smallest state; FOCAL in conflict mode prefers fewer
conflicts, then f1, then the smallest state. A solver instance owns its
queues and is single-threaded; distinct instances may run concurrently
against a read-only domain.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import Config, ConstraintIndex, Constraint, Path
from .domains.base import LatticeDomain, get_successors

State = tuple[Config, int]
INF = math.inf


@dataclass(frozen=True)
class LLParams:
    w1: float = 1.0
    w2: float = 1.0
    f2: str = "f1"                 # "f1" | "conflicts"
    horizon: int | None = None     # None: latest constraint time + min(|V|, tmax)
    tmax: int = 128
    termination: str = "simple"    # experience walk: "simple" | "path-aware"


@dataclass
class LowLevelResult:
    path: Path | None
    cost: int | None
    lower_bound: float             # min of uninflated g+h over goal and remaining OPEN
    expansions: int
    collision_checks: int
    status: str                    # success | exhausted | start-constrained | timeout
    trace: list[State] | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


class SearchNode:
    __slots__ = ("state", "g", "h", "f1", "cc", "parent", "in_open",
                 "closed", "ver", "admitted")

    def __init__(self, state: State):
        self.state = state
        self.g = INF
        self.h = 0.0
        self.f1 = INF
        self.cc = 0
        self.parent: SearchNode | None = None
        self.in_open = False
        self.closed = False
        self.ver = 0
        self.admitted = False


class FocalQueue:
    """OPEN/FOCAL pair with lazy-deletion heaps.

    Newly qualified nodes are admitted into FOCAL whenever the f1 threshold
    grows; nodes whose f1 exceeds a shrunken threshold are demoted back at
    extraction time, so the focal membership condition holds exactly at
    every extraction.
    """

    def __init__(self, w1: float = 1.0, w2: float = 1.0, f2: str = "f1",
                 h_fn: Callable[[State], float] = lambda s: 0.0,
                 cc_fn: Optional[Callable[[State, State], int]] = None):
        self.w1 = w1
        self.w2 = w2
        self.f2 = f2
        self.h_fn = h_fn
        self.cc_fn = cc_fn
        self.nodes: dict[State, SearchNode] = {}
        self._pending: list = []   # not yet in focal, ordered by f1
        self._admitted: list = []  # focal members, ordered by f1 (for min f1)
        self._focal: list = []     # focal members, ordered by f2
        self._bound: float | None = None
        self._tick = 0             # heap tiebreaker; nodes are unorderable

    # -- internals -----------------------------------------------------------

    def _open_key(self, n: SearchNode):
        return (n.f1, -n.g, n.state)

    def _f2_key(self, n: SearchNode):
        if self.f2 == "conflicts":
            return (n.cc, n.f1, n.state)
        return (n.f1, -n.g, n.state)

    def _push_admitted(self, n: SearchNode) -> None:
        n.admitted = True
        self._tick += 1
        heapq.heappush(self._admitted, (*self._open_key(n), n.ver, self._tick, n))
        heapq.heappush(self._focal, (self._f2_key(n), n.ver, self._tick, n))

    def _push_pending(self, n: SearchNode) -> None:
        n.admitted = False
        self._tick += 1
        heapq.heappush(self._pending, (*self._open_key(n), n.ver, self._tick, n))

    def _enqueue(self, n: SearchNode) -> None:
        n.in_open = True
        if self._bound is not None and n.f1 <= self._bound:
            self._push_admitted(n)
        else:
            self._push_pending(n)

    @staticmethod
    def _clean(heap: list, admitted: bool) -> None:
        while heap:
            entry = heap[0]
            node = entry[-1]
            if node.in_open and node.ver == entry[-3] and node.admitted == admitted:
                return
            heapq.heappop(heap)

    def min_f1(self) -> float | None:
        self._clean(self._pending, False)
        self._clean(self._admitted, True)
        best = None
        for heap in (self._pending, self._admitted):
            if heap and (best is None or heap[0][0] < best):
                best = heap[0][0]
        return best

    # -- queue API -------------------------------------------------------------

    def push_root(self, state: State) -> SearchNode:
        n = SearchNode(state)
        n.g = 0
        n.h = self.h_fn(state)
        n.f1 = self.w1 * n.h
        self.nodes[state] = n
        self._enqueue(n)
        return n

    def pop(self) -> SearchNode | None:
        base = self.min_f1()
        if base is None:
            return None
        self._bound = self.w2 * base
        while self._pending:
            entry = self._pending[0]
            node = entry[-1]
            if not (node.in_open and node.ver == entry[-3] and not node.admitted):
                heapq.heappop(self._pending)
                continue
            if entry[0] > self._bound:
                break
            heapq.heappop(self._pending)
            self._push_admitted(node)
        while self._focal:
            _, ver, _tick, node = heapq.heappop(self._focal)
            if not (node.in_open and node.ver == ver and node.admitted):
                continue
            if node.f1 > self._bound:  # threshold shrank since admission
                self._push_pending(node)
                continue
            node.in_open = False
            node.closed = True
            return node
        return None

    def lower_bound_remaining(self) -> float:
        live = [n.g + n.h for n in self.nodes.values() if n.in_open]
        return min(live) if live else INF


def try_insert_or_update(queue: FocalQueue, parent: SearchNode, state: State,
                         step_cost: int = 1) -> bool:
    """Relax ``state`` through ``parent``. Unseen states start at g=inf; a
    strictly better g updates cost, parent and queue position (reopening the
    state if it was closed). Returns True iff something changed."""
    node = queue.nodes.get(state)
    if node is None:
        node = SearchNode(state)
        node.h = queue.h_fn(state)
        queue.nodes[state] = node
    g_new = parent.g + step_cost
    if node.g <= g_new:
        return False
    node.g = g_new
    node.f1 = g_new + queue.w1 * node.h
    node.parent = parent
    if queue.cc_fn is not None:
        node.cc = parent.cc + queue.cc_fn(parent.state, state)
    node.ver += 1
    node.closed = False
    queue._enqueue(node)
    return True


def suffix(experience: Sequence[Config], q: Config) -> tuple[Config, ...]:
    """Experience configurations strictly after the earliest occurrence of q;
    empty when q is absent or last."""
    try:
        k = experience.index(q)
    except ValueError:
        return ()
    return tuple(experience[k + 1:])


def push_partial_experience(queue: FocalQueue, experience: Sequence[Config],
                            node: SearchNode,
                            move_ok: Callable[[Config, int, Config], bool]) -> None:
    """Walk the experience suffix after ``node``'s configuration, assigning
    times t0+1, t0+2, ... and relaxing each state, until a step fails
    ``move_ok``. The walk cursor follows the propagated state even when the
    relaxation is declined (the seen state already had a better g)."""
    q0, t0 = node.state
    cur = node
    for q in suffix(experience, q0):
        if not move_ok(q0, t0, q):
            break
        try_insert_or_update(queue, cur, (q, t0 + 1))
        cur = queue.nodes[(q, t0 + 1)]
        q0, t0 = q, t0 + 1


def heuristic(domain: LatticeDomain, agent: int, q: Config, goal: Config) -> float:
    """Admissible cost-to-go estimate in timestep units (Manhattan distance
    on grids; normalized L2 joint-angle distance on arms)."""
    return domain.heuristic(agent, q, goal)


def _normalize_experience(experience) -> tuple[tuple[Config, ...], ...]:
    if not experience:
        return ()
    first = experience[0]
    if first and isinstance(first[0], int):  # a single configuration sequence
        seqs = [tuple(tuple(c) for c in experience)]
    else:
        seqs = [tuple(tuple(c) for c in seq) for seq in experience]
    return tuple(s for s in seqs if s)


def solve(domain: LatticeDomain, agent: int, start: Config, goal: Config,
          constraints: Sequence[Constraint] | ConstraintIndex = (),
          experience=(), params: LLParams = LLParams(),
          other_paths: Sequence[tuple[int, Path]] | None = None,
          hard_paths: bool = False,
          deadline: float | None = None,
          record_trace: bool = False) -> LowLevelResult:
    """Plan a constraint-respecting path from start to goal.

    ``other_paths`` are the remaining agents' committed paths; they feed the
    conflict-count focal priority, the path-aware experience termination and
    (with ``hard_paths``, used by prioritized planning) a hard collision
    filter on successors and on goal acceptance. Failure to reach the goal
    within the horizon is reported in the result status, not raised.
    """
    start, goal = tuple(start), tuple(goal)
    if not domain.is_state_valid(agent, start) or not domain.is_state_valid(agent, goal):
        raise ValueError("invalid endpoint")
    cidx = constraints if isinstance(constraints, ConstraintIndex) \
        else ConstraintIndex(constraints, agent)

    horizon = params.horizon
    if horizon is None:
        horizon = max(0, cidx.max_time + 1) + min(domain.num_vertices(agent), params.tmax)
    elif horizon < cidx.max_time + 1:
        raise ValueError("horizon below constraint range")

    others = list(other_paths) if other_paths else []
    checks_before = domain.stats.geometry_checks

    def others_hit(q: Config, t: int, q2: Config) -> bool:
        for jid, pj in others:
            a, b = pj.at(t), pj.at(t + 1)
            if domain.pairwise_collision(agent, q2, q2, jid, b, b):
                return True
            if (q2 != q or b != a) and domain.pairwise_collision(agent, q, q2, jid, a, b):
                return True
        return False

    cc_fn = None
    if params.f2 == "conflicts" and others:
        # Conflicts accrued while parked at the goal are charged to goal
        # states up front, otherwise the tree resolves them one timestep at
        # a time. parked_after[t] = conflicts over [t, end) against the
        # others' sweeps and arrivals while this agent sits on its goal.
        last = max(p.duration for _, p in others)
        tail = sum(1 for jid, pj in others
                   if domain.pairwise_collision(agent, goal, goal, jid, pj.end, pj.end))
        parked_after = [tail] * (last + 2)
        for t in range(last, -1, -1):
            hits = 0
            for jid, pj in others:
                a, b = pj.at(t), pj.at(t + 1)
                if domain.pairwise_collision(agent, goal, goal, jid, b, b) or \
                        (b != a and domain.pairwise_collision(agent, goal, goal, jid, a, b)):
                    hits += 1
            parked_after[t] = parked_after[t + 1] + hits

        def cc_fn(s1: State, s2: State) -> int:
            q, t = s1
            q2 = s2[0]
            n = 0
            for jid, pj in others:
                a, b = pj.at(t), pj.at(t + 1)
                if domain.pairwise_collision(agent, q2, q2, jid, b, b) or \
                        ((q2 != q or b != a) and domain.pairwise_collision(agent, q, q2, jid, a, b)):
                    n += 1
            if q2 == goal:
                n += parked_after[min(t + 1, last + 1)]
            return n

    def move_ok(q: Config, t: int, q2: Config) -> bool:
        if t + 1 > horizon or not cidx.allows_move(q, t, q2):
            return False
        if not domain.is_state_valid(agent, q2):
            return False
        if q2 != q and not (domain.is_lattice_edge(agent, q, q2)
                            and domain.is_edge_valid(agent, q, q2)):
            return False
        if hard_paths and others_hit(q, t, q2):
            return False
        return True

    if params.termination == "path-aware" and others:
        def exp_move_ok(q, t, q2):
            return move_ok(q, t, q2) and not others_hit(q, t, q2)
    else:
        exp_move_ok = move_ok

    def parked_clear(t: int) -> bool:
        last = max((p.duration for _, p in others), default=0)
        for t2 in range(t, max(t, last) + 1):
            for jid, pj in others:
                a, b = pj.at(t2), pj.at(t2 + 1)
                if domain.pairwise_collision(agent, goal, goal, jid, a, a):
                    return False
                if b != a and domain.pairwise_collision(agent, goal, goal, jid, a, b):
                    return False
        return True

    queue = FocalQueue(params.w1, params.w2, params.f2,
                       h_fn=lambda s: domain.heuristic(agent, s[0], goal),
                       cc_fn=cc_fn)
    expansions = 0
    trace: list[State] | None = [] if record_trace else None

    def fail(status: str) -> LowLevelResult:
        return LowLevelResult(None, None, queue.lower_bound_remaining(), expansions,
                              domain.stats.geometry_checks - checks_before, status, trace)

    if not cidx.allows_state(start, 0):
        return fail("start-constrained")

    root = queue.push_root((start, 0))
    experiences = _normalize_experience(experience)
    members = [frozenset(seq) for seq in experiences]
    for seq in experiences:
        push_partial_experience(queue, seq, root, exp_move_ok)

    while True:
        if deadline is not None and expansions % 64 == 0 and time.monotonic() > deadline:
            return fail("timeout")
        node = queue.pop()
        if node is None:
            return fail("exhausted")
        expansions += 1
        if trace is not None:
            trace.append(node.state)
        q, t = node.state
        if q == goal and cidx.no_future_constraints(q, t) and \
                (not hard_paths or parked_clear(t)):
            waypoints = []
            cur: SearchNode | None = node
            while cur is not None:
                waypoints.append(cur.state[0])
                cur = cur.parent
            waypoints.reverse()
            lb = min(float(node.g), queue.lower_bound_remaining())
            return LowLevelResult(Path(tuple(waypoints)), node.g, lb, expansions,
                                  domain.stats.geometry_checks - checks_before,
                                  "success", trace)
        for seq, configs in zip(experiences, members):
            if q in configs:
                push_partial_experience(queue, seq, node, exp_move_ok)
        for s2, _cost in get_successors(domain, agent, node.state, cidx, horizon):
            if hard_paths and others_hit(q, t, s2[0]):
                continue
            try_insert_or_update(queue, node, s2)
