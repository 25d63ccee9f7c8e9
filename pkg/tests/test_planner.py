import itertools
import math

import numpy as np
import pytest

from coopsearch.fleet import AgentKind, AgentPath, AgentSpec, EnergyModel, Role
from coopsearch.gridworld import GridWorld, clustered_map, uniform_map
from coopsearch.metrics import metric_E, metric_TPOC
from coopsearch.planner import (AnnealConfig, Mission, MissionPlan, ObjectiveConfig, PlanningError,
                                Proposer, attraction_init, escort_loop, evaluate_objective,
                                mobile_ee_path, optimize)
from coopsearch.radio import RadioConfig

ETD = {Role.EXPLORER}
BOTH = {Role.EXPLORER, Role.RELAY}


def uav(i, budget=2000.0, roles=ETD):
    return AgentSpec(i, AgentKind.UAV, roles, budget)


def plan_of(*paths):
    return MissionPlan([AgentPath(tuple(p)) for p in paths])


# ---- escort loop ---------------------------------------------------------------

def test_perimeter_loop_10x10():
    g = uniform_map(10, 10, 1.0)
    loop = escort_loop(g)
    assert len(loop) == 36
    rim = {(c, r) for c in range(10) for r in range(10) if c in (0, 9) or r in (0, 9)}
    assert set(loop.cells) == rim
    assert all(g.adjacent(a, b) for a, b in zip(loop.cells, loop.cells[1:] + loop.cells[:1]))
    assert mobile_ee_path(g, 20).cells == loop.cells[:20]
    assert mobile_ee_path(g, 72).cells == loop.cells * 2


def test_loop_disconnected_frontier():
    valid = np.ones((5, 5), dtype=bool)
    valid[:, 2] = False
    g = GridWorld(5, 5, 1.0, np.zeros((5, 5)), valid, ((0, 0), (4, 0), (4, 4)))
    with pytest.raises(PlanningError, match=r"\(4,0\)"):
        escort_loop(g)


# ---- objective ------------------------------------------------------------------

def test_revisiting_one_cell():
    g = uniform_map(3, 3, 1.0, 0.9)
    m = Mission(g, [uav(0)], objective=ObjectiveConfig(0.005))
    J, trace = evaluate_objective(plan_of([(0, 0), (1, 0), (0, 0), (1, 0)]), m)
    assert J == pytest.approx(0.1 + 0.1 * math.exp(-0.005))
    assert metric_TPOC(trace) == pytest.approx(0.2)


def test_infeasible_plan_rejected():
    g = uniform_map(5, 5, 1.0)
    m = Mission(g, [uav(0, budget=50.0)])
    with pytest.raises(PlanningError):
        evaluate_objective(plan_of([(0, 0), (1, 0), (2, 0)]), m)
    with pytest.raises(PlanningError):
        evaluate_objective(plan_of([(0, 0), (2, 0)]), Mission(g, [uav(0)]))


def _toy_oracle(poc, paths, cell_size, eps, n_meetings):
    """Hand-rolled J for two UAVs with w1=1 using only closed forms."""
    lam = 3e8 / 2.4e9

    def csi(d):
        erp = 20.0 + 20 * math.log10(lam / (4 * math.pi * max(d, 0.1)))
        x = 0.4 * (erp + 73.0 + 1e-6)
        return x / (1 + abs(x))

    def vom(el, tau):
        t = tau / 3
        return 1.0 if el > tau else min(1.0, (2 * math.exp(el / t) - 1) / (math.exp(tau / t) - 1) - 1)

    S = len(paths[0])
    tau = S / n_meetings
    last = [0, 0]
    seen, J = set(), 0.0
    for s in range(S):
        gain = 0.0
        for p in paths:
            if p[s] not in seen:
                seen.add(p[s])
                gain += poc[p[s][1]][p[s][0]]
        (c0, r0), (c1, r1) = paths[0][s], paths[1][s]
        d = math.sqrt(((c0 - c1) * cell_size) ** 2 + ((r0 - r1) * cell_size) ** 2 + 2.0**2)
        k = csi(d)
        coop = vom(s - last[0], tau) * k + vom(s - last[1], tau) * k
        J += math.exp(-eps * s) * gain * (1 + coop)
        if k >= 0:
            last = [s, s]
    return J


def test_two_agent_toy_matches_hand_trace():
    poc = np.array([[0.05, 0.10, 0.15, 0.02], [0.08, 0.12, 0.03, 0.20]])
    g = GridWorld(4, 2, 200.0, poc, np.ones((2, 4), dtype=bool))
    paths = [[(0, 0), (1, 0), (2, 0)], [(3, 1), (2, 1), (1, 1)]]
    m = Mission(g, [uav(0, roles=BOTH), uav(1, roles=BOTH)],
                objective=ObjectiveConfig(0.01, n_meetings=1, w1=1.0, w2=0.0))
    J, trace = evaluate_objective(plan_of(*paths), m)
    expected = _toy_oracle(poc, paths, 200.0, 0.01, 1)
    assert J == pytest.approx(expected, abs=1e-12)
    assert trace.objective_value == pytest.approx(expected, abs=1e-12)
    assert trace.exchanges[1] == [(0, 1)] and trace.exchanges[0] == []


def test_meeting_step_uses_pre_meeting_vom():
    g = uniform_map(6, 1, 200.0, 0.6)
    m = Mission(g, [uav(0, roles=BOTH), uav(1, roles=BOTH)], objective=ObjectiveConfig(0.0, 1, 1.0, 0.0))
    p0 = [(0, 0), (1, 0), (2, 0), (3, 0)]
    p1 = [(5, 0), (4, 0), (3, 0), (2, 0)]
    _, t = evaluate_objective(plan_of(p0, p1), m)
    assert t.exchanges[:2] == [[], []] and t.exchanges[2] == [(0, 1)]
    tau = 4.0
    vom = lambda el: (2 * math.exp(el / (tau / 3)) - 1) / (math.exp(3) - 1) - 1
    assert t.vom[0, 2] == pytest.approx(vom(2))
    assert t.vom[0, 3] == pytest.approx(vom(1))


@pytest.mark.parametrize("eps", [0.0, 0.005])
def test_objective_degenerates_to_exploration(eps):
    g = clustered_map(6, 6, 100.0, 0.7, seed=1)
    m = Mission(g, [uav(0), uav(1)], objective=ObjectiveConfig(eps))
    plan = attraction_init(m, seed=2)
    J, trace = evaluate_objective(plan, m)
    assert J == pytest.approx(metric_E(trace, eps), abs=1e-12)
    if eps == 0:
        assert J == pytest.approx(metric_TPOC(trace), abs=1e-12)


def test_fast_objective_matches_simulation_with_ees():
    g = uniform_map(8, 8, 150.0)
    specs = [uav(0, 600.0, BOTH), uav(1, 600.0, BOTH), AgentSpec(2, AgentKind.MOBILE_EE, {Role.RELAY})]
    for rb in (False, True):
        m = Mission(g, specs, objective=ObjectiveConfig(0.005, 4, 0.3, 0.7, rb), escort_loop=escort_loop(g))
        plan = attraction_init(m, seed=5)
        J, trace = evaluate_objective(plan, m)
        assert J == pytest.approx(trace.objective_value, abs=1e-12)


def test_mission_ordering_rules():
    g = uniform_map(4, 4, 1.0)
    with pytest.raises(PlanningError):
        Mission(g, [AgentSpec(0, AgentKind.STATIC_EE, {Role.RELAY}, fixed_position=(0, 0)), uav(1)])
    with pytest.raises(PlanningError):
        Mission(g, [uav(0), AgentSpec(1, AgentKind.MOBILE_EE, {Role.RELAY})])
    with pytest.raises(PlanningError):
        Mission(g, [uav(1)])


def test_step_costs_match_fleet_model():
    from coopsearch.fleet import path_step_costs
    g = uniform_map(6, 6, 1.0)
    m = Mission(g, [uav(0)], energy=EnergyModel(23, 2, 1.4))
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = [int(rng.integers(36))]
        for _ in range(12):
            nb = [k for k in range(36) if g.adjacent(g.unflat(k), g.unflat(p[-1]))]
            p.append(int(rng.choice(nb)))
        cells = [g.unflat(k) for k in p]
        assert np.allclose(m.step_costs(np.array(p)), path_step_costs(cells, m.energy))


# ---- initialisation ----------------------------------------------------------------

def test_attraction_enters_blob():
    poc = np.zeros((9, 9))
    poc[6:9, 6:9] = 0.1
    g = GridWorld(9, 9, 1.0, poc, np.ones((9, 9), dtype=bool))
    from coopsearch.planner import attraction_paths
    m = Mission(g, [uav(0, 300.0)])
    path = attraction_paths(m, starts=[0])[0]
    first_hit = next(s for s, k in enumerate(path) if poc.ravel()[k] > 0)
    assert first_hit <= math.ceil(math.dist((0, 0), (6, 6)))


def test_attraction_spreads_agents():
    g = uniform_map(20, 20, 200.0)
    m = Mission(g, [uav(i) for i in range(3)])
    plan = attraction_init(m, seed=0)
    sets = [set(p.cells) for p in plan.paths]
    assert not (sets[0] & sets[1]) and not (sets[1] & sets[2]) and not (sets[0] & sets[2])
    m.validate(plan)


def test_zero_prior():
    g = GridWorld(4, 4, 1.0, np.zeros((4, 4)), np.ones((4, 4), dtype=bool))
    m = Mission(g, [uav(0, 100.0)])
    plan = optimize(attraction_init(m), m, AnnealConfig(chains=2, moves_per_temp=5))
    assert evaluate_objective(plan, m)[0] == 0.0


# ---- annealing -------------------------------------------------------------------

def test_hill_climb_floor():
    g = clustered_map(8, 8, 100.0, 0.7, seed=4)
    m = Mission(g, [uav(0, 400.0), uav(1, 400.0)])
    init = attraction_init(m, seed=1)
    plan = optimize(init, m, AnnealConfig(1e-4, 1e-4, chains=2, moves_per_temp=100))
    assert plan.objective_value >= init.objective_value
    assert evaluate_objective(plan, m)[0] == pytest.approx(plan.objective_value, abs=1e-12)


def test_optimize_deterministic():
    g = clustered_map(8, 8, 100.0, 0.7, seed=4)
    m = Mission(g, [uav(0, 300.0, BOTH), uav(1, 300.0, BOTH)], objective=ObjectiveConfig(w1=1.0))
    cfg = AnnealConfig(chains=2, moves_per_temp=10, seed=7)
    a = optimize(attraction_init(m, 3), m, cfg)
    b = optimize(attraction_init(m, 3), m, cfg)
    assert [p.cells for p in a.paths] == [p.cells for p in b.paths]
    assert a.objective_value == b.objective_value


def test_optimize_workers_match_serial():
    g = clustered_map(6, 6, 100.0, 0.7, seed=2)
    m = Mission(g, [uav(0, 200.0)])
    cfg = AnnealConfig(chains=2, moves_per_temp=5, seed=3)
    a = optimize(attraction_init(m), m, cfg)
    b = optimize(attraction_init(m), m, AnnealConfig(chains=2, moves_per_temp=5, seed=3, workers=2))
    assert [p.cells for p in a.paths] == [p.cells for p in b.paths]


def test_proposals_are_feasible():
    g = uniform_map(6, 6, 1.0)
    m = Mission(g, [uav(0, 160.0), uav(1, 120.0)])
    start = m.uav_flat_paths(attraction_init(m, seed=0))
    prop = Proposer(m)
    rng = np.random.default_rng(0)
    n = 0
    for _ in range(500):
        cand = prop.propose(start, rng)
        if cand is None:
            continue
        n += 1
        m.validate(m.plan_from_uav_paths(cand))
        start = cand
    assert n > 100


def test_anneal_config_validation():
    with pytest.raises(ValueError):
        AnnealConfig(t_init=1e-5, t_end=1e-3)
    with pytest.raises(ValueError):
        AnnealConfig(cooling=1.0)
    assert len(AnnealConfig().temperatures()) == 95


def _all_paths(g, max_len):
    """Every adjacent-move path of 1..max_len cells."""
    adj = {k: [n for n in range(g.n_cells) if g.adjacent(g.unflat(k), g.unflat(n))] for k in range(g.n_cells)}
    frontier = [[k] for k in range(g.n_cells)]
    out = list(frontier)
    for _ in range(max_len - 1):
        frontier = [p + [n] for p in frontier for n in adj[p[-1]]]
        out += frontier
    return out


def test_brute_force_small():
    # 3x3, lifetime 4: small enough for a quick exhaustive check
    rng = np.random.default_rng(11)
    poc = rng.random((3, 3))
    poc *= 0.8 / poc.sum()
    g = GridWorld(3, 3, 1.0, poc, np.ones((3, 3), dtype=bool))
    m = Mission(g, [uav(0, 100.0)], energy=EnergyModel(23, 2))
    best = max(m.objective_value([np.array(p)]) for p in _all_paths(g, 4)
               if m.affordable_prefix(np.array(p), 100.0) == len(p))
    plan = optimize(attraction_init(m, 0), m, AnnealConfig(chains=3, moves_per_temp=30, seed=1))
    assert plan.objective_value == pytest.approx(best, abs=1e-12)
