import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from authplan.analytics import coding_relay_prob, evaluate, forwarding_relay_prob, pollution_prob
from authplan.generators import random_attacks, random_dag, random_strategy
from authplan.graph import make_attack
from authplan.optimizer import enumerate_strategies

prob = st.floats(0.0, 1.0)


@st.composite
def edge_inputs(draw, min_size=2, max_size=5):
    """(P, f) pairs with P <= f, as produced by propagation."""
    n = draw(st.integers(min_size, max_size))
    f = [draw(prob) for _ in range(n)]
    P = [draw(st.floats(0.0, fk)) for fk in f]
    return P, f


@given(edge_inputs())
def test_xaf_never_exceeds_axf(inputs):
    P, f = inputs
    assert coding_relay_prob(1, 1, P, f) <= coding_relay_prob(1, 0, P, f) + 1e-12
    assert coding_relay_prob(1, 1, P) <= coding_relay_prob(1, 0, P) + 1e-12


@given(edge_inputs())
def test_coding_prob_bounds(inputs):
    P, f = inputs
    for a in (0, 1):
        for m in (0, 1):
            v = coding_relay_prob(a, m, P, f)
            assert -1e-12 <= v <= 1 + 1e-12
            # nobody transmits more often than they receive something
            assert v <= coding_relay_prob(0, 1, P, f) + 1e-12


@given(prob, st.booleans(), prob, st.lists(prob, max_size=4))
def test_pollution_prob_bounds(f_k, a_k, p, ups):
    v = pollution_prob(f_k, a_k, p, ups)
    assert 0.0 <= v <= 1.0


@given(prob, prob, st.booleans())
def test_forwarding_prob_bounds(fk, frac, a):
    P = fk * frac
    v = forwarding_relay_prob(a, P, fk)
    assert 0.0 <= v <= fk


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_zero_attack_fixpoint(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng)
    a = make_attack(g)
    for s in list(enumerate_strategies(g))[:20]:
        state, _ = evaluate(g, a, s)
        assert all(v == 0.0 for v in state.pollute.values())
        assert all(state.forward[r] == 1.0 for r in g.relays)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_no_auth_energy_invariant(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng)
    s = next(iter(enumerate_strategies(g)))  # all XF / F
    ref = evaluate(g, make_attack(g), s)[1].total
    for _ in range(3):
        state, e = evaluate(g, random_attacks(rng, g), s)
        assert all(state.forward[r] == 1.0 for r in g.relays)
        assert e.total == ref


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_propagation_ranges(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng)
    a = random_attacks(rng, g)
    s = random_strategy(rng, g)
    state, e = evaluate(g, a, s)
    assert all(0.0 <= v <= 1.0 for v in state.forward.values())
    assert all(0.0 <= v <= 1.0 for v in state.pollute.values())
    assert all(0.0 <= v <= 1.0 for v in state.recv_any.values())
    for i, n_in in state.expected_in.items():
        assert n_in == sum(state.forward[k] for k in g.in_neighbors[i]) or abs(
            n_in - sum(state.forward[k] for k in g.in_neighbors[i])
        ) < 1e-12
    assert e.total == e.source_cost + e.relay_cost + e.destination_cost
    assert min(e.source_cost, e.relay_cost, e.destination_cost) >= 0.0
