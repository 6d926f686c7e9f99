import math

import numpy as np
import pytest
from conftest import bf_attack

from authplan.analytics import DEFAULT_CONSTANTS, NetworkStrategy, evaluate
from authplan.errors import InputOutOfRange
from authplan.generators import random_attacks, random_dag, random_strategy
from authplan.graph import build_network, make_attack
from authplan.optimizer import enumerate_strategies
from authplan.simulator import RNG_ALGORITHM, SimulationConfig, run_block, simulate, simulate_trial

Q = DEFAULT_CONSTANTS


def strat(g, **labels):
    return NetworkStrategy.from_labels(g, labels)


def no_fires(g):
    return {e: False for e in g.edges}


def test_trial_no_attack(bf):
    base = 4 * Q.Q_T + 7 * Q.Q_R + 6 * Q.Q_A
    extra = {
        "(XF;F)": 0.0,
        "(XF;AF)": Q.Q_A,
        "(AXF;F)": 2 * Q.Q_A + Q.Q_XOR,
        "(AXF;AF)": 2 * Q.Q_A + Q.Q_XOR + Q.Q_A,
        "(XAF;F)": Q.Q_A + Q.Q_XOR,
        "(XAF;AF)": Q.Q_A + Q.Q_XOR + Q.Q_A,
    }
    for s in enumerate_strategies(bf):
        out = simulate_trial(bf, make_attack(bf), s, fires=no_fires(bf))
        assert out.decoded == {"E": True, "F": True}
        assert not any(out.polluted.values())
        assert out.energy == pytest.approx(base + extra[s.short()], rel=1e-14)


def test_trial_attack_on_ac_xaf(bf):
    fires = no_fires(bf) | {("A", "C"): True}
    out = simulate_trial(bf, make_attack(bf), strat(bf, C="XAF", D="F"), fires=fires)
    assert out.polluted[("A", "C")] and not out.polluted[("B", "C")]
    assert not out.transmitted["C"] and not out.transmitted["D"]
    assert out.decoded == {"E": False, "F": False}
    # A, B emit; C receives 2 and verifies once; E, F get one direct copy each
    expected = 2 * (Q.Q_T + Q.Q_A) + 2 * Q.Q_R + (Q.Q_A + Q.Q_XOR) + 2 * (Q.Q_R + Q.Q_A)
    assert out.energy == pytest.approx(expected, rel=1e-14)


def test_trial_attack_on_ac_axf(bf):
    fires = no_fires(bf) | {("A", "C"): True}
    out = simulate_trial(bf, make_attack(bf), strat(bf, C="AXF", D="F"), fires=fires)
    assert out.transmitted["C"] and out.transmitted["D"]
    assert not out.polluted[("C", "D")]
    # C forwards B alone: E recovers B, F lacks A
    assert out.decoded == {"E": True, "F": False}


def test_trial_attack_on_ac_xf(bf):
    fires = no_fires(bf) | {("A", "C"): True}
    out = simulate_trial(bf, make_attack(bf), strat(bf, C="XF", D="F"), fires=fires)
    assert out.polluted[("C", "D")] and out.polluted[("D", "E")] and out.polluted[("D", "F")]
    assert out.decoded == {"E": False, "F": False}


def test_trial_chain_af_drops():
    g = build_network([("s", "source"), ("r", "relay"), ("d", "destination")], [("s", "r"), ("r", "d")])
    out = simulate_trial(g, make_attack(g), strat(g, r="AF"), fires={("s", "r"): True, ("r", "d"): False})
    assert not out.transmitted["r"]
    assert not out.polluted[("r", "d")]
    assert out.decoded == {"d": False}
    assert out.energy == pytest.approx((Q.Q_T + Q.Q_A) + Q.Q_R + Q.Q_A, rel=1e-14)


def test_trial_requires_rng_or_fires(bf):
    with pytest.raises(InputOutOfRange):
        simulate_trial(bf, make_attack(bf), strat(bf, C="XF", D="F"))
    out = simulate_trial(bf, make_attack(bf), strat(bf, C="XF", D="F"), rng=np.random.default_rng(0))
    assert out.decoded == {"E": True, "F": True}


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(77)
    for _ in range(40):
        g = random_dag(rng)
        a = random_attacks(rng, g)
        s = random_strategy(rng, g)
        p = np.array([a[e] for e in g.edges])
        fires = rng.random((len(g.edges), 64)) < p[:, None]
        out = run_block(g, s, Q, fires)
        for t in range(fires.shape[1]):
            ref = simulate_trial(g, a, s, fires={e: bool(fires[j, t]) for j, e in enumerate(g.edges)})
            assert out["energy"][t] == ref.energy
            for j, n in enumerate(g.nodes):
                if n in ref.transmitted:
                    assert out["tx"][j, t] == ref.transmitted[n]
            for j, e in enumerate(g.edges):
                assert out["polluted"][j, t] == ref.polluted[e]
            for j, d in enumerate(g.destinations):
                assert out["decoded"][j, t] == ref.decoded[d]


def test_gf2_decoding_two_stage():
    # d receives a^b from c1 and b^c from c2 plus c directly: solvable only over GF(2)
    g = build_network(
        [("a", "source"), ("b", "source"), ("c", "source"), ("x", "relay"), ("y", "relay"), ("d", "destination")],
        [("a", "x"), ("b", "x"), ("b", "y"), ("c", "y"), ("x", "d"), ("y", "d"), ("c", "d")],
    )
    s = strat(g, x="XF", y="XF")
    out = simulate_trial(g, make_attack(g), s, fires=no_fires(g))
    assert out.decoded == {"d": True}
    out = simulate_trial(g, make_attack(g), s, fires=no_fires(g) | {("c", "d"): True})
    assert out.decoded == {"d": False}


def test_simulate_zero_attack(bf):
    for s in enumerate_strategies(bf):
        r = simulate(SimulationConfig(bf, make_attack(bf), s, trials=100_000, seed=1))
        assert r.est_throughput == (1.0, 0.0)
        assert r.est_forward["C"] == (1.0, 0.0)


def test_simulate_single_link_xaf(bf):
    r = simulate(SimulationConfig(bf, bf_attack(bf, AC=0.3), strat(bf, C="XAF", D="F"), trials=1_000_000, seed=42))
    m, se = r.est_forward["C"]
    assert abs(m - 0.7) <= 3 * se


def test_simulate_no_auth_energy_constant(bf):
    s = strat(bf, C="XF", D="F")
    r = simulate(SimulationConfig(bf, bf_attack(bf, AC=0.3, BC=0.6, CD=0.2), s, trials=1_000_000, seed=5))
    m, se = r.est_energy
    assert se == 0.0
    assert m == pytest.approx(4 * Q.Q_T + 7 * Q.Q_R + 6 * Q.Q_A, rel=1e-14)


def test_reproducible_and_worker_independent(bf):
    cfg = SimulationConfig(bf, bf_attack(bf, AC=0.3, CD=0.2), strat(bf, C="AXF", D="AF"), trials=300_001, seed=9)
    a = simulate(cfg, workers=1)
    b = simulate(cfg, workers=4)
    c = simulate(cfg, workers=1)
    assert a == b == c
    assert a.rng == RNG_ALGORITHM
    d = simulate(SimulationConfig(cfg.graph, cfg.attacks, cfg.strategy, trials=300_001, seed=10), workers=1)
    assert d != a


def test_worker_env(bf, monkeypatch):
    cfg = SimulationConfig(bf, bf_attack(bf, AC=0.3), strat(bf, C="XAF", D="F"), trials=200_000, seed=3)
    monkeypatch.setenv("AUTHPLAN_WORKERS", "3")
    a = simulate(cfg)
    monkeypatch.setenv("AUTHPLAN_WORKERS", "1")
    assert simulate(cfg) == a


def test_standard_error_scaling(bf):
    a = bf_attack(bf, AC=0.3, BC=0.2, CD=0.1)
    s = strat(bf, C="XAF", D="AF")
    small = simulate(SimulationConfig(bf, a, s, trials=10_000, seed=11))
    big = simulate(SimulationConfig(bf, a, s, trials=1_000_000, seed=11))
    for key in ("C", "D"):
        ratio = small.est_forward[key][1] / big.est_forward[key][1]
        assert 10 / 1.2 <= ratio <= 10 * 1.2
    ratio = small.est_energy[1] / big.est_energy[1]
    assert 10 / 1.2 <= ratio <= 10 * 1.2


def test_config_validation(bf):
    s = strat(bf, C="XF", D="F")
    with pytest.raises(InputOutOfRange):
        SimulationConfig(bf, make_attack(bf), s, trials=0)
    with pytest.raises(InputOutOfRange):
        SimulationConfig(bf, make_attack(bf), s, seed=-1)
    with pytest.raises(InputOutOfRange):
        SimulationConfig(bf, make_attack(bf), s, seed=2**64)
    r = simulate(SimulationConfig(bf, make_attack(bf), s, trials=1, seed=0))
    assert r.trials == 1 and math.isnan(r.est_energy[1])


def test_result_records(bf):
    r = simulate(SimulationConfig(bf, bf_attack(bf, AC=0.3), strat(bf, C="XAF", D="F"), trials=1000, seed=2))
    rows = r.as_records()
    assert {row["quantity"] for row in rows} == {"f", "P", "decode", "F_E", "P_th"}
    assert all(row["seed"] == "2" and row["trials"] == "1000" and row["rng"] == RNG_ALGORITHM for row in rows)


def test_random_dags_agree_with_analytic_small():
    # quick version of the acceptance-level oracle check
    rng = np.random.default_rng(40)
    for _ in range(5):
        g = random_dag(rng, 8, independent_inputs=True)
        a = random_attacks(rng, g)
        s = random_strategy(rng, g)
        st, e = evaluate(g, a, s)
        r = simulate(SimulationConfig(g, a, s, trials=200_000, seed=123))
        for n, f in st.forward.items():
            m, se = r.est_forward[n]
            assert abs(m - f) <= max(4 * se, 1e-12)
        m, se = r.est_energy
        assert abs(m - e.total) <= max(4 * se, 1e-9)
