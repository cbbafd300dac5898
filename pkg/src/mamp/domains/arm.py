"""Planar multi-link arm lattice with capsule collision checking.

Each agent is a revolute chain anchored at a base point. A configuration is
a vector of joint indices; joint angle = index * resolution. Motion
primitives rotate exactly one joint by one lattice step (or wait). Links
are capsules of a shared radius (``thickness``); validity of a motion is
decided by sampling interpolated configurations at a declared sub-step
density (``substeps`` per joint step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..core import Config
from .base import LatticeDomain

Point = tuple[float, float]


@dataclass(frozen=True)
class ArmSpec:
    base: Point
    link_lengths: tuple[float, ...]
    resolution: float
    limits: tuple[tuple[int, int], ...]  # inclusive index range per joint

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)


@dataclass(frozen=True)
class Segment:
    ax: float
    ay: float
    bx: float
    by: float


@dataclass(frozen=True)
class Disc:
    x: float
    y: float
    r: float


def _seg_seg_dist2(p1: Point, q1: Point, p2: Point, q2: Point) -> float:
    """Squared distance between segments [p1,q1] and [p2,q2]."""
    d1x, d1y = q1[0] - p1[0], q1[1] - p1[1]
    d2x, d2y = q2[0] - p2[0], q2[1] - p2[1]
    rx, ry = p1[0] - p2[0], p1[1] - p2[1]
    a = d1x * d1x + d1y * d1y
    e = d2x * d2x + d2y * d2y
    f = d2x * rx + d2y * ry
    if a <= 1e-18 and e <= 1e-18:
        return rx * rx + ry * ry
    if a <= 1e-18:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry
        if e <= 1e-18:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y
            denom = a * e - b * b
            s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > 1e-18 else 0.0
            tn = b * s + f
            if tn < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif tn > e:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
            else:
                t = tn / e
    cx = p1[0] + d1x * s - (p2[0] + d2x * t)
    cy = p1[1] + d1y * s - (p2[1] + d2y * t)
    return cx * cx + cy * cy


def _pt_seg_dist2(p: Point, a: Point, b: Point) -> float:
    abx, aby = b[0] - a[0], b[1] - a[1]
    apx, apy = p[0] - a[0], p[1] - a[1]
    denom = abx * abx + aby * aby
    if denom <= 1e-18:
        return apx * apx + apy * apy
    t = min(max((apx * abx + apy * aby) / denom, 0.0), 1.0)
    dx = apx - abx * t
    dy = apy - aby * t
    return dx * dx + dy * dy


def forward_kinematics(arm: ArmSpec, q: Config) -> list[Point]:
    """Joint positions of the chain (base excluded), with cumulative angles:
    position i+1 = position i + L_i * (cos sum(theta), sin sum(theta))."""
    for idx, (lo, hi) in zip(q, arm.limits):
        if not lo <= idx <= hi:
            raise ValueError(f"joint index {idx} outside limits [{lo}, {hi}]")
    pts = []
    x, y = arm.base
    acc = 0.0
    for length, idx in zip(arm.link_lengths, q):
        acc += idx * arm.resolution
        x += length * math.cos(acc)
        y += length * math.sin(acc)
        pts.append((x, y))
    return pts


class ArmDomain(LatticeDomain):
    kind = "arm"

    def __init__(self, arms: list[ArmSpec], obstacles=(), thickness: float = 0.04,
                 substeps: int = 8, cache: bool = True):
        super().__init__(cache)
        self.arms = list(arms)
        self.obstacles = list(obstacles)
        self.thickness = thickness
        self.substeps = substeps
        self._fk_cache: dict[tuple[int, Config], tuple[Point, ...]] = {}
        self._pair_reach_ok: dict[tuple[int, int], bool] = {}

    @property
    def num_agents(self) -> int:
        return len(self.arms)

    # -- kinematics ---------------------------------------------------------

    def _angles(self, agent: int, q: Config) -> list[float]:
        res = self.arms[agent].resolution
        return [idx * res for idx in q]

    def _chain_at_angles(self, agent: int, thetas) -> tuple[Point, ...]:
        """Capsule chain [base, joint1, ..., jointK] at the given angles."""
        arm = self.arms[agent]
        pts = [arm.base]
        x, y = arm.base
        acc = 0.0
        for length, th in zip(arm.link_lengths, thetas):
            acc += th
            x += length * math.cos(acc)
            y += length * math.sin(acc)
            pts.append((x, y))
        return tuple(pts)

    def chain(self, agent: int, q: Config) -> tuple[Point, ...]:
        key = (agent, q)
        hit = self._fk_cache.get(key)
        if hit is None:
            hit = self._chain_at_angles(agent, self._angles(agent, q))
            self._fk_cache[key] = hit
        return hit

    # -- static geometry ----------------------------------------------------

    def _within_limits(self, agent: int, q: Config) -> bool:
        limits = self.arms[agent].limits
        return len(q) == len(limits) and all(lo <= v <= hi for v, (lo, hi) in zip(q, limits))

    def _body_ok(self, chain) -> bool:
        r2_self = (2.0 * self.thickness) ** 2
        n = len(chain) - 1
        for a in range(n):
            for b in range(a + 2, n):  # adjacent links share a joint
                if _seg_seg_dist2(chain[a], chain[a + 1], chain[b], chain[b + 1]) <= r2_self:
                    return False
        r2_seg = self.thickness ** 2
        for a in range(n):
            p, q = chain[a], chain[a + 1]
            for ob in self.obstacles:
                if isinstance(ob, Segment):
                    if _seg_seg_dist2(p, q, (ob.ax, ob.ay), (ob.bx, ob.by)) <= r2_seg:
                        return False
                else:
                    lim = self.thickness + ob.r
                    if _pt_seg_dist2((ob.x, ob.y), p, q) <= lim * lim:
                        return False
        return True

    def _check_state(self, agent: int, q: Config) -> bool:
        if not self._within_limits(agent, q):
            return False
        self.stats.geometry_checks += 1
        return self._body_ok(self.chain(agent, q))

    def _check_edge(self, agent: int, q: Config, q2: Config) -> bool:
        steps = max(abs(a - b) for a, b in zip(q, q2)) if q != q2 else 0
        if steps == 0:
            return self.is_state_valid(agent, q)
        if not (self.is_state_valid(agent, q) and self.is_state_valid(agent, q2)):
            return False
        ta = self._angles(agent, q)
        tb = self._angles(agent, q2)
        total = self.substeps * steps
        for k in range(1, total):
            s = k / total
            thetas = [a + (b - a) * s for a, b in zip(ta, tb)]
            self.stats.geometry_checks += 1
            if not self._body_ok(self._chain_at_angles(agent, thetas)):
                return False
        return True

    # -- agent-agent geometry -------------------------------------------------

    def _reach_overlaps(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        hit = self._pair_reach_ok.get(key)
        if hit is None:
            ai, aj = self.arms[key[0]], self.arms[key[1]]
            gap = math.dist(ai.base, aj.base)
            hit = gap <= ai.reach + aj.reach + 2.0 * self.thickness
            self._pair_reach_ok[key] = hit
        return hit

    def _bodies_touch(self, chain_a, chain_b) -> bool:
        r2 = (2.0 * self.thickness) ** 2
        for a in range(len(chain_a) - 1):
            p1, q1 = chain_a[a], chain_a[a + 1]
            for b in range(len(chain_b) - 1):
                if _seg_seg_dist2(p1, q1, chain_b[b], chain_b[b + 1]) <= r2:
                    return True
        return False

    def _check_pairwise(self, i, qi0, qi1, j, qj0, qj1) -> bool:
        if not self._reach_overlaps(i, j):
            return False
        si = max(abs(a - b) for a, b in zip(qi0, qi1)) if qi0 != qi1 else 0
        sj = max(abs(a - b) for a, b in zip(qj0, qj1)) if qj0 != qj1 else 0
        if si == 0 and sj == 0:
            self.stats.geometry_checks += 1
            return self._bodies_touch(self.chain(i, qi0), self.chain(j, qj0))
        ia = self._angles(i, qi0)
        ib = self._angles(i, qi1)
        ja = self._angles(j, qj0)
        jb = self._angles(j, qj1)
        total = self.substeps * max(si, sj)
        for k in range(1, total):  # endpoints are vertex checks
            s = k / total
            ci = self._chain_at_angles(i, [a + (b - a) * s for a, b in zip(ia, ib)])
            cj = self._chain_at_angles(j, [a + (b - a) * s for a, b in zip(ja, jb)])
            self.stats.geometry_checks += 1
            if self._bodies_touch(ci, cj):
                return True
        return False

    # -- lattice structure ------------------------------------------------------

    def _moves(self, agent: int, q: Config) -> list[Config]:
        out = []
        limits = self.arms[agent].limits
        for ji in range(len(q)):
            lo, hi = limits[ji]
            for d in (1, -1):
                v = q[ji] + d
                if lo <= v <= hi:
                    out.append(q[:ji] + (v,) + q[ji + 1:])
        return out

    def is_lattice_edge(self, agent: int, q: Config, q2: Config) -> bool:
        return sum(abs(a - b) for a, b in zip(q, q2)) <= 1

    def heuristic(self, agent: int, q: Config, goal: Config) -> float:
        """L2 joint-angle distance in radians, normalized by the largest
        single-primitive displacement so the estimate is in timestep units
        and never exceeds the true remaining cost."""
        res = self.arms[agent].resolution
        rad = math.sqrt(sum(((a - b) * res) ** 2 for a, b in zip(q, goal)))
        return rad / res

    def num_vertices(self, agent: int) -> int:
        total = 1
        for lo, hi in self.arms[agent].limits:
            total *= hi - lo + 1
            if total > 1_000_000:
                return 1_000_000
        return total

    def max_degree(self, agent: int) -> int:
        return 2 * len(self.arms[agent].link_lengths) + 1

    def motion_cost_path(self, agent: int, waypoints) -> float:
        """Total joint motion in radians along a waypoint sequence."""
        res = self.arms[agent].resolution
        return sum(abs(a - b) * res
                   for w1, w2 in zip(waypoints, waypoints[1:])
                   for a, b in zip(w1, w2))
