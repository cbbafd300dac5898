"""Four-connected grid world with unit-time moves and waits."""

from __future__ import annotations

from ..core import Config
from .base import LatticeDomain

_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


class GridDomain(LatticeDomain):
    """Agents are points occupying one cell each; '#' cells are blocked.

    Two agents collide when they stand on the same cell (vertex) or exchange
    cells over one timestep (edge). Point agents on distinct 4-connected
    moves cannot meet strictly inside a transition except by swapping.
    """

    kind = "grid"

    def __init__(self, width: int, height: int, blocked=(), cache: bool = True):
        super().__init__(cache)
        self.width = width
        self.height = height
        self.blocked = frozenset(tuple(b) for b in blocked)

    def _cache_agent(self, agent: int) -> int:
        return 0  # all agents share one body model

    def in_bounds(self, q: Config) -> bool:
        return 0 <= q[0] < self.width and 0 <= q[1] < self.height

    def _moves(self, agent: int, q: Config) -> list[Config]:
        x, y = q
        return [(x + dx, y + dy) for dx, dy in _MOVES
                if self.in_bounds((x + dx, y + dy))]

    def _check_state(self, agent: int, q: Config) -> bool:
        self.stats.geometry_checks += 1
        return self.in_bounds(q) and q not in self.blocked

    def _check_edge(self, agent: int, q: Config, q2: Config) -> bool:
        if not self.is_lattice_edge(agent, q, q2):
            return False
        return self.is_state_valid(agent, q) and self.is_state_valid(agent, q2)

    def is_lattice_edge(self, agent: int, q: Config, q2: Config) -> bool:
        return abs(q[0] - q2[0]) + abs(q[1] - q2[1]) <= 1

    def _check_pairwise(self, i, qi0, qi1, j, qj0, qj1) -> bool:
        self.stats.geometry_checks += 1
        if qi0 == qj0 and qi1 == qj1:  # same cell / same sweep
            return True
        return qi0 == qj1 and qi1 == qj0 and qi0 != qi1  # swap

    def heuristic(self, agent: int, q: Config, goal: Config) -> float:
        return abs(q[0] - goal[0]) + abs(q[1] - goal[1])

    def num_vertices(self, agent: int) -> int:
        return self.width * self.height - sum(1 for b in self.blocked if self.in_bounds(b))

    def max_degree(self, agent: int) -> int:
        return 5

    def motion_cost_path(self, agent: int, waypoints) -> float:
        """Motion metric for grids: total moved cell distance (waits free)."""
        return float(sum(abs(a[0] - b[0]) + abs(a[1] - b[1])
                         for a, b in zip(waypoints, waypoints[1:])))
