"""Shared domain plumbing: validity caching, geometry counters and
constraint-aware successor expansion.

A domain is immutable after construction except for its counters and its
internal memo tables, which only ever record verdicts that a fresh
computation would reproduce (static environment). The transition cache
supports concurrent readers with single-writer insertion; re-inserting an
existing key with the same verdict is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import Config, ConstraintIndex


@dataclass
class DomainStats:
    """Counters surfaced to benchmark telemetry.

    ``geometry_checks`` counts elementary geometric evaluations: one static
    test of a single configuration, or one body-body test of a configuration
    pair. Cache and memo hits perform zero geometric tests.
    """

    geometry_checks: int = 0
    state_queries: int = 0
    edge_queries: int = 0
    pair_queries: int = 0
    cache_hits: int = 0


class TransitionCache:
    """Per-agent memo of static validity verdicts for configurations and
    edges, reused across low-level searches within a planning query."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._states: dict[int, dict] = {}
        self._edges: dict[int, dict] = {}

    def lookup_state(self, agent: int, q: Config):
        if not self.enabled:
            return None
        return self._states.get(agent, {}).get(q)

    def store_state(self, agent: int, q: Config, ok: bool) -> None:
        if self.enabled:
            self._states.setdefault(agent, {})[q] = ok

    def lookup_edge(self, agent: int, key):
        if not self.enabled:
            return None
        return self._edges.get(agent, {}).get(key)

    def store_edge(self, agent: int, key, ok: bool) -> None:
        if self.enabled:
            self._edges.setdefault(agent, {})[key] = ok


class LatticeDomain:
    """Base class for concrete state spaces.

    Subclasses provide the raw geometry (`_check_state`, `_check_edge`,
    `_check_pairwise`, `_moves`) and this class layers caching, memoization
    and counting on top.
    """

    def __init__(self, cache: bool = True):
        self.stats = DomainStats()
        self.cache = TransitionCache(cache)
        self._pair_memo: dict[tuple, bool] = {}

    # -- hooks ------------------------------------------------------------

    def _cache_agent(self, agent: int) -> int:
        """Cache partition key; homogeneous-agent domains may collapse it."""
        return agent

    def _moves(self, agent: int, q: Config) -> list[Config]:
        raise NotImplementedError

    def _check_state(self, agent: int, q: Config) -> bool:
        raise NotImplementedError

    def _check_edge(self, agent: int, q: Config, q2: Config) -> bool:
        raise NotImplementedError

    def _check_pairwise(self, i: int, qi0: Config, qi1: Config,
                        j: int, qj0: Config, qj1: Config) -> bool:
        raise NotImplementedError

    def is_lattice_edge(self, agent: int, q: Config, q2: Config) -> bool:
        raise NotImplementedError

    def heuristic(self, agent: int, q: Config, goal: Config) -> float:
        raise NotImplementedError

    def num_vertices(self, agent: int) -> int:
        raise NotImplementedError

    def max_degree(self, agent: int) -> int:
        raise NotImplementedError

    def motion_cost_path(self, agent: int, waypoints) -> float:
        raise NotImplementedError

    # -- cached queries ----------------------------------------------------

    def is_state_valid(self, agent: int, q: Config) -> bool:
        self.stats.state_queries += 1
        key_agent = self._cache_agent(agent)
        cached = self.cache.lookup_state(key_agent, q)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached
        ok = self._check_state(agent, q)
        self.cache.store_state(key_agent, q, ok)
        return ok

    def is_edge_valid(self, agent: int, q: Config, q2: Config) -> bool:
        """Static validity of the motion q -> q2, interpolated at the domain's
        declared sub-step density. Symmetric in its endpoints."""
        self.stats.edge_queries += 1
        key_agent = self._cache_agent(agent)
        key = (q, q2) if q <= q2 else (q2, q)
        cached = self.cache.lookup_edge(key_agent, key)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached
        ok = self._check_edge(agent, key[0], key[1])
        self.cache.store_edge(key_agent, key, ok)
        return ok

    def pairwise_collision(self, i: int, qi0: Config, qi1: Config,
                           j: int, qj0: Config, qj1: Config) -> bool:
        """True iff agents i and j collide during one synchronized timestep
        of motion (interior sub-steps; self-loop vs self-loop degenerates to
        the static body-body test)."""
        self.stats.pair_queries += 1
        if i > j:
            i, qi0, qi1, j, qj0, qj1 = j, qj0, qj1, i, qi0, qi1
        key = (i, qi0, qi1, j, qj0, qj1)
        hit = self._pair_memo.get(key)
        if hit is not None:
            return hit
        out = self._check_pairwise(i, qi0, qi1, j, qj0, qj1)
        self._pair_memo[key] = out
        return out

    def successor_configs(self, agent: int, q: Config) -> list[Config]:
        """Statically valid motion primitives from q, plus the wait move,
        sorted lexicographically for determinism."""
        out = [q]
        for q2 in self._moves(agent, q):
            if self.is_state_valid(agent, q2) and self.is_edge_valid(agent, q, q2):
                out.append(q2)
        out.sort()
        return out


def get_successors(domain: LatticeDomain, agent: int, state: tuple[Config, int],
                   constraints: ConstraintIndex,
                   horizon: int | None = None) -> list[tuple[tuple[Config, int], int]]:
    """Constraint-aware timed successors of ``state``: every motion primitive
    plus wait, filtered by static validity and by vertex/edge constraints at
    the successor time. Time advances by exactly 1; all edges cost 1."""
    q, t = state
    if horizon is not None and t + 1 > horizon:
        return []
    out = []
    for q2 in domain.successor_configs(agent, q):
        if constraints.allows_move(q, t, q2):
            out.append(((q2, t + 1), 1))
    return out
