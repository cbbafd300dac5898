import itertools

import pytest

from mamp import (Conflict, Constraint, GridDomain, Path, PlannerConfig,
                  detect_conflicts, plan, plan_coupled_oracle,
                  plan_prioritized, solve, validate_solution, violates)
from mamp.core import VERTEX
from mamp.highlevel import CTNode, CTQueue, OracleGuardError, expand_ct_node, select_ct_node
from mamp.lowlevel import LLParams
import mamp.highlevel as hl

from corpus import grid_corpus
from oracles import timed_optimal_cost


def cfg(variant, **kw):
    kw.setdefault("timeout", 20.0)
    return PlannerConfig.make(variant, **kw)


SWAP = dict(domain=lambda: GridDomain(3, 2),
            starts=[(0, 0), (2, 0)], goals=[(2, 0), (0, 0)])


class TestPlanExamples:
    def test_single_agent_returns_root(self):
        r = plan(GridDomain(4, 4), [(0, 0)], [(3, 3)], cfg("cbs"))
        assert r.success and r.ct_expansions == 0 and r.cost == 6

    def test_swap_corridor_matches_oracle(self):
        r = plan(SWAP["domain"](), SWAP["starts"], SWAP["goals"], cfg("cbs"))
        o = plan_coupled_oracle(SWAP["domain"](), SWAP["starts"], SWAP["goals"],
                                horizon=12)
        assert r.success and o.success
        assert r.cost == o.cost == 6
        assert detect_conflicts(r.solution.paths, SWAP["domain"]()) == []

    def test_walled_off_goal_fails(self):
        g = GridDomain(3, 2, blocked=[(1, 0), (1, 1)])
        r = plan(g, [(0, 0), (2, 0)], [(2, 1), (2, 0)], cfg("cbs"))
        assert not r.success and r.status == "infeasible"

    def test_mismatched_agent_counts(self):
        with pytest.raises(ValueError, match="mismatched agent counts"):
            plan(GridDomain(3, 3), [(0, 0)], [(1, 1), (2, 2)], cfg("cbs"))

    def test_overlapping_starts_exhaust(self):
        g = GridDomain(2, 1)
        r = plan(g, [(0, 0), (0, 0)], [(1, 0), (0, 0)], cfg("cbs"))
        assert not r.success and r.status == "exhausted"

    def test_timeout_is_reported(self):
        r = plan(SWAP["domain"](), SWAP["starts"], SWAP["goals"],
                 cfg("cbs", timeout=0.0))
        assert not r.success and r.status == "timeout"

    def test_solution_respects_returned_constraints(self):
        r = plan(SWAP["domain"](), SWAP["starts"], SWAP["goals"], cfg("cbs"))
        assert r.constraints  # the swap cannot be solved without branching
        for c in r.constraints:
            assert not violates(r.solution.paths[c.agent], c)


class TestExpandCTNode:
    def _root(self, domain, starts, goals):
        paths = []
        for i, (s, g) in enumerate(zip(starts, goals)):
            res = solve(domain, i, s, g)
            paths.append(res.path)
        return CTNode(0, frozenset(), tuple(paths),
                      sum(len(p) - 1 for p in paths),
                      tuple(detect_conflicts(paths, domain)),
                      (0.0,) * len(paths))

    def test_two_children_each_one_new_constraint(self):
        domain = SWAP["domain"]()
        root = self._root(domain, SWAP["starts"], SWAP["goals"])
        assert root.conflicts
        children, _, timed = expand_ct_node(
            domain, root, SWAP["starts"], SWAP["goals"], cfg("cbs"),
            LLParams(), None, itertools.count(1), [[], []])
        assert not timed and len(children) == 2
        agents = set()
        for child in children:
            new = child.constraints - root.constraints
            assert len(new) == 1
            c = next(iter(new))
            agents.add(c.agent)
            for j in range(2):
                same = child.paths[j].waypoints == root.paths[j].waypoints
                assert same == (j != c.agent)
            assert child.conflicts == tuple(detect_conflicts(child.paths, domain))
        assert agents == {0, 1}

    def test_infeasible_child_discarded_sibling_survives(self):
        # parked agent 0 cannot vacate its start at t=0; the synthetic
        # conflict's other constraint leaves agent 1 a free replan
        domain = GridDomain(3, 2)
        starts = [(0, 0), (2, 0)]
        goals = [(0, 0), (2, 1)]
        root = self._root(domain, starts, goals)
        conflict = Conflict(VERTEX, (0, 1), 0, (((0, 0), (0, 0)), ((1, 0), (1, 0))))
        node = CTNode(0, frozenset(), root.paths, root.cost, (conflict,),
                      (0.0, 0.0))
        children, _, _ = expand_ct_node(
            domain, node, starts, goals, cfg("cbs"), LLParams(), None,
            itertools.count(1), [[], []])
        assert len(children) == 1
        new = next(iter(children[0].constraints))
        assert new.agent == 1
        assert children[0].conflicts == ()  # the survivor is already a solution

    def test_xcbs_replan_reuses_experience(self):
        domain = GridDomain(9, 9)
        starts = [(0, 4), (8, 4)]
        goals = [(8, 4), (0, 4)]
        pc = cfg("xcbs", w1L=50.0)
        llp = LLParams(w1=50.0)
        paths = [solve(domain, i, starts[i], goals[i], (), (), llp).path
                 for i in range(2)]
        root = CTNode(0, frozenset(), tuple(paths), 16,
                      tuple(detect_conflicts(paths, domain)), (0.0, 0.0))
        warm, warm_exp, _ = expand_ct_node(
            GridDomain(9, 9), root, starts, goals, pc, llp, None,
            itertools.count(1), [[], []])
        cold, cold_exp, _ = expand_ct_node(
            GridDomain(9, 9), root, starts, goals, cfg("bcbs", w1L=50.0),
            llp, None, itertools.count(1), [[], []])
        assert [c.cost for c in warm] == [c.cost for c in cold]
        assert warm_exp < cold_exp


def _fake_node(index, cost, lb, n_conflicts):
    conflict = Conflict(VERTEX, (0, 1), 0, (((0, 0), (0, 0)), ((0, 0), (0, 0))))
    return CTNode(index, frozenset(), (Path(((0, 0),)),), cost,
                  (conflict,) * n_conflicts, (float(lb),))


class TestSelectCTNode:
    def test_focal_prefers_fewer_conflicts(self):
        q = CTQueue(1.3, "lb", "conflicts")
        a = _fake_node(0, cost=13, lb=10, n_conflicts=4)
        b = _fake_node(1, cost=11, lb=11, n_conflicts=1)
        q.insert(a)
        q.insert(b)
        # bound = 1.3 * 10 = 13: both qualify, b has fewer conflicts
        assert select_ct_node(q) is b

    def test_unit_wh_degenerates_to_min_lb(self):
        q = CTQueue(1.0, "lb", "conflicts")
        a = _fake_node(0, cost=13, lb=10, n_conflicts=4)
        b = _fake_node(1, cost=11, lb=11, n_conflicts=1)
        q.insert(a)
        q.insert(b)
        assert select_ct_node(q) is a

    def test_f2_tie_broken_by_cost_then_fifo(self):
        q = CTQueue(2.0, "cost", "conflicts")
        a = _fake_node(0, cost=12, lb=10, n_conflicts=2)
        b = _fake_node(1, cost=11, lb=10, n_conflicts=2)
        c = _fake_node(2, cost=11, lb=10, n_conflicts=2)
        for n in (a, b, c):
            q.insert(n)
        assert select_ct_node(q) is b
        assert select_ct_node(q) is c
        assert select_ct_node(q) is a

    def test_cbs_selection_is_min_cost_fifo(self):
        q = CTQueue(1.0, "cost", "cost")
        a = _fake_node(0, cost=12, lb=0, n_conflicts=0)
        b = _fake_node(1, cost=11, lb=0, n_conflicts=5)
        c = _fake_node(2, cost=11, lb=0, n_conflicts=0)
        for n in (a, b, c):
            q.insert(n)
        assert select_ct_node(q) is b  # cost then insertion order


class TestPrioritized:
    def test_disjoint_agents_match_independent_planning(self):
        g = GridDomain(7, 7)
        starts = [(0, 0), (6, 6)]
        goals = [(0, 3), (6, 3)]
        r = plan_prioritized(GridDomain(7, 7), starts, goals)
        solo = [solve(GridDomain(7, 7), i, starts[i], goals[i]).cost
                for i in range(2)]
        assert r.success and r.cost == sum(solo)

    def test_order_dependence(self):
        blocked = [(2, 1)]
        starts = [(0, 0), (2, 0)]
        goals = [(2, 0), (0, 0)]
        bad = plan_prioritized(GridDomain(3, 2, blocked), starts, goals,
                               order=(0, 1))
        good = plan_prioritized(GridDomain(3, 2, blocked), starts, goals,
                                order=(1, 0))
        assert not bad.success and bad.status == "infeasible"
        assert good.success
        assert detect_conflicts(good.solution.paths, GridDomain(3, 2, blocked)) == []
        # CBS is complete and solves the same instance
        assert plan(GridDomain(3, 2, blocked), starts, goals, cfg("cbs")).success

    def test_single_agent_equals_low_level(self):
        g = GridDomain(4, 4, blocked=[(1, 1)])
        r = plan_prioritized(GridDomain(4, 4, blocked=[(1, 1)]), [(0, 0)], [(3, 3)])
        assert r.success
        assert r.cost == solve(g, 0, (0, 0), (3, 3)).cost

    def test_bad_order_rejected(self):
        with pytest.raises(ValueError, match="permutation"):
            plan_prioritized(GridDomain(3, 3), [(0, 0), (1, 1)],
                             [(2, 2), (0, 0)], order=(0, 0))


class TestCoupledOracle:
    def test_single_agent(self):
        r = plan_coupled_oracle(GridDomain(3, 3), [(0, 0)], [(2, 2)], horizon=10)
        assert r.success and r.cost == 4

    def test_infeasible_swap_on_a_path_graph(self):
        r = plan_coupled_oracle(GridDomain(2, 1), [(0, 0), (1, 0)],
                                [(1, 0), (0, 0)], horizon=8)
        assert not r.success and r.status == "exhausted"

    def test_guard_rejects_large_instances(self):
        g = GridDomain(8, 8)
        many = [(x, 0) for x in range(6)]
        targets = [(x, 7) for x in range(6)]
        with pytest.raises(OracleGuardError, match="oracle guard exceeded"):
            plan_coupled_oracle(g, many, targets)

    def test_parked_waits_are_free_until_leaving(self):
        # one agent must step aside and return; sum of costs is exact
        g = GridDomain(3, 2)
        r = plan_coupled_oracle(g, [(0, 0), (2, 0)], [(2, 0), (0, 0)], horizon=10)
        assert r.success
        assert r.cost == r.solution.sum_of_costs == 6


class TestCorpusProperties:
    def setup_method(self):
        self.instances = grid_corpus(seed=23, count=15)

    def test_cbs_matches_oracle_exactly(self):
        for inst in self.instances:
            o = plan_coupled_oracle(inst.domain(), inst.starts, inst.goals,
                                    horizon=10)
            r = plan(inst.domain(), inst.starts, inst.goals,
                     cfg("cbs", horizon=10))
            assert r.success == o.success
            if r.success:
                assert r.cost == o.cost

    def test_bound_satisfaction_weighted_variants(self):
        combos = [("ecbs", 1.3, 1.3, 1.3), ("ecbs", 2.0, 1.0, 2.0),
                  ("xecbs", 2.0, 1.3, 1.3), ("xcbs", 2.0, 1.0, 1.0),
                  ("bcbs", 1.3, 2.0, 1.3)]
        for k, inst in enumerate(self.instances):
            o = plan_coupled_oracle(inst.domain(), inst.starts, inst.goals,
                                    horizon=10)
            if not o.success:
                continue
            variant, w1, w2, wh = combos[k % len(combos)]
            r = plan(inst.domain(), inst.starts, inst.goals,
                     cfg(variant, w1L=w1, w2L=w2, wH=wh, horizon=10))
            assert r.success
            assert r.cost <= w1 * w2 * wh * o.cost + 1e-9

    def test_all_variants_return_valid_solutions(self):
        inst = self.instances[0]
        for variant in ("cbs", "bcbs", "ecbs", "xcbs", "xecbs"):
            kw = {} if variant in ("cbs",) else {"w1L": 2.0}
            if variant in ("bcbs", "ecbs", "xecbs"):
                kw.update(w2L=1.3, wH=1.3)
            r = plan(inst.domain(), inst.starts, inst.goals,
                     cfg(variant, **kw, horizon=10))
            if r.success:
                assert validate_solution(inst.domain(), r.solution, r.constraints)
        r = plan_prioritized(inst.domain(), inst.starts, inst.goals)
        if r.success:
            assert validate_solution(inst.domain(), r.solution)

    def test_xcbs_with_unit_weights_stays_optimal(self):
        for inst in self.instances[:8]:
            a = plan(inst.domain(), inst.starts, inst.goals, cfg("cbs", horizon=10))
            b = plan(inst.domain(), inst.starts, inst.goals,
                     cfg("xcbs", w1L=1.0, horizon=10))
            assert a.success == b.success
            if a.success:
                assert a.cost == b.cost

    def test_experience_source_ablations_agree(self):
        for inst in self.instances[:8]:
            costs = set()
            for source in ("parent-path", "branch-paths", "all-ct-paths"):
                r = plan(inst.domain(), inst.starts, inst.goals,
                         cfg("xcbs", w1L=1.0, horizon=10,
                             experience_source=source))
                assert r.success
                assert validate_solution(inst.domain(), r.solution, r.constraints)
                costs.add(r.cost)
            assert len(costs) == 1  # all optimal

    def test_min_lb_monotone_for_ecbs(self):
        orig = CTQueue.pop
        bases = []

        def spy(queue):
            node, base = orig(queue)
            if base is not None:
                bases.append(base)
            return node, base
        CTQueue.pop = spy
        try:
            for inst in self.instances[:6]:
                bases.clear()
                plan(inst.domain(), inst.starts, inst.goals,
                     cfg("ecbs", w1L=2.0, w2L=1.3, wH=1.3, horizon=10))
                assert all(a <= b + 1e-9 for a, b in zip(bases, bases[1:]))
        finally:
            CTQueue.pop = orig

    def test_incremental_conflicts_equal_full_recompute(self):
        orig = CTQueue.insert
        seen = []

        def spy(queue, node):
            seen.append(node)
            return orig(queue, node)
        CTQueue.insert = spy
        try:
            for inst in self.instances[:5]:
                seen.clear()
                domain = inst.domain()
                plan(domain, inst.starts, inst.goals, cfg("cbs", horizon=10))
                for node in seen:
                    assert node.conflicts == tuple(detect_conflicts(node.paths, domain))
        finally:
            CTQueue.insert = orig


class TestPlannerConfig:
    def test_variant_invariants_enforced(self):
        with pytest.raises(ValueError, match="requires w2L = 1"):
            PlannerConfig("xcbs", w2L=1.3, use_experience=True)
        with pytest.raises(ValueError, match="use_experience"):
            PlannerConfig("ecbs", use_experience=True)
        with pytest.raises(ValueError, match=">= 1"):
            PlannerConfig("ecbs", w1L=0.5)
        with pytest.raises(ValueError, match="unknown planner"):
            PlannerConfig("a-star")

    def test_make_fills_fixed_factors(self):
        c = PlannerConfig.make("xcbs", w1L=50.0)
        assert (c.w1L, c.w2L, c.wH, c.use_experience) == (50.0, 1.0, 1.0, True)
        assert c.f2L == "f1" and c.f1H == "cost"
        x = PlannerConfig.make("xecbs", w1L=50.0, w2L=1.3, wH=1.3)
        assert x.effective_termination == "path-aware"
        assert x.f1H == "lb" and x.f2H == "conflicts"
        assert PlannerConfig.make("ecbs").effective_termination == "simple"
