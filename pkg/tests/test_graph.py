import itertools
import json

import numpy as np
import pytest

from onewaysim.graph import (
    CANONICAL_LC6_GRAPH,
    GraphSpec,
    assert_lc6_is_dressed_chain,
    build_c4,
    build_graph_state,
    build_lc6,
    chain,
    labelled_chain,
    pbs_expand,
    stabilizers,
)
from onewaysim.statevec import CZ, H, KET_PLUS, S, Ket, apply_gate, expectation, fidelity_with, project

SQ2 = np.sqrt(2)
k0, k1 = np.array([1, 0]), np.array([0, 1])
plus, minus = (k0 + k1) / SQ2, (k0 - k1) / SQ2


def kron(*vs):
    out = np.ones(1)
    for v in vs:
        out = np.kron(out, v)
    return out


def eq1_expansion():
    # |C4> written out term by term, register order (1,2,3,4)
    return 0.5 * (
        kron(plus, k0, k0, plus)
        + kron(plus, k1, k0, minus)
        + kron(minus, k0, k1, plus)
        - kron(minus, k1, k1, minus)
    )


def eq2_expansion():
    # register order (5,1,3,2,4,6); |0~> = |+>, |1~> = |->
    return (
        kron(kron(k0, k0) + kron(k1, k1), k0, kron(plus, k0, k0) + kron(minus, k1, k1))
        + kron(kron(k0, k0) - kron(k1, k1), k1, kron(minus, k0, k0) + kron(plus, k1, k1))
    ) / (2 * SQ2)


def brute_graph_state(n, edges):
    amps = np.empty(2**n)
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        amps[idx] = (-1) ** sum(bits[a] * bits[b] for a, b in edges)
    return amps / 2 ** (n / 2)


def test_chain_of_two():
    state = build_graph_state(chain(2))
    assert np.allclose(state.amplitudes, np.array([1, 1, 1, -1]) / 2)


def test_single_vertex():
    assert np.allclose(build_graph_state(GraphSpec(1)).amplitudes, KET_PLUS)


def test_stabilizer_examples():
    assert [str(g) for g in stabilizers(chain(3))] == ["XZI", "ZXZ", "IZX"]
    assert {str(g) for g in stabilizers(chain(2, {0: "H"}))} == {"ZZ", "XX"}
    assert [str(g) for g in stabilizers(GraphSpec(1))] == ["X"]


def test_graph_spec_validation():
    with pytest.raises(ValueError):
        GraphSpec(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        GraphSpec(2, frozenset({(0, 2)}))
    with pytest.raises(ValueError):
        GraphSpec(2, dressings={0: "S"})


def test_graph_spec_json_roundtrip():
    spec = CANONICAL_LC6_GRAPH
    doc = json.loads(spec.to_json())
    assert doc["n"] == 6 and doc["dressings"] == {"0": "H", "5": "H"}
    assert GraphSpec.from_json(spec.to_json()) == spec
    with pytest.raises(ValueError):
        GraphSpec.from_json('{"n": 2, "colour": 1}')


def test_random_graph_states_are_stabilized():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        pairs = list(itertools.combinations(range(n), 2))
        edges = frozenset(p for p in pairs if rng.random() < 0.4)
        dress = {v: "H" for v in range(n) if rng.random() < 0.3}
        spec = GraphSpec(n, edges, dress)
        state = build_graph_state(spec)
        for g in stabilizers(spec):
            assert expectation(state, g.to_observable()) == pytest.approx(1, abs=1e-10)
        if not dress:
            assert np.allclose(state.amplitudes, brute_graph_state(n, [tuple(e) for e in edges]))


def test_build_c4_matches_expansion():
    c4 = build_c4()
    ref = eq1_expansion()
    assert np.linalg.norm(ref) == pytest.approx(1)
    assert np.allclose(c4.amplitudes, ref)
    # only the |+>1|H>3|H>2|+>4 branch reaches |HHHH>: 1/2 * 1/sqrt2 * 1/sqrt2
    assert c4.amplitudes[0] == pytest.approx(0.25)
    assert np.linalg.norm(c4.amplitudes) == pytest.approx(1)


def test_pbs_expand_examples():
    out = pbs_expand(Ket(k0), 0, 1)
    assert np.allclose(out.amplitudes, kron(k0, k0))
    a, b = 0.6, 0.8j
    out = pbs_expand(Ket(np.array([a, b])), 0, 1)
    assert np.allclose(out.amplitudes, a * kron(k0, k0) + b * kron(k1, k1))


def test_pbs_expand_then_x_measurement_recovers_plus():
    out = pbs_expand(Ket(KET_PLUS), 0, 1)
    prob, post = project(out, 1, KET_PLUS)
    assert prob == pytest.approx(0.5)
    assert np.allclose(post.amplitudes, KET_PLUS)


def test_pbs_expand_insert_before_polarization():
    state = Ket(kron(k1, plus))
    out = pbs_expand(state, 0, 0)  # new qubit in front of the copied one
    assert np.allclose(out.amplitudes, kron(k1, k1, plus))


def test_pbs_expand_is_isometry():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = Ket.from_vector(rng.normal(size=8) + 1j * rng.normal(size=8))
        b = Ket.from_vector(rng.normal(size=8) + 1j * rng.normal(size=8))
        q, pos = int(rng.integers(3)), int(rng.integers(4))
        ea, eb = pbs_expand(a, q, pos), pbs_expand(b, q, pos)
        assert np.vdot(ea.amplitudes, eb.amplitudes) == pytest.approx(np.vdot(a.amplitudes, b.amplitudes))


def _clifford_group():
    group = [np.eye(2, dtype=complex)]
    frontier = list(group)
    while frontier:
        nxt = []
        for g in frontier:
            for gen in (H, S):
                c = gen @ g
                if not any(abs(abs(np.trace(c.conj().T @ e)) - 2) < 1e-9 for e in group):
                    group.append(c)
                    nxt.append(c)
        frontier = nxt
    return group


def test_pbs_expand_equals_cz_with_ancilla_up_to_local_clifford():
    cliffords = _clifford_group()
    assert len(cliffords) == 24
    rng = np.random.default_rng(2)
    inputs = [Ket.from_vector(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(5)]
    matches = []
    for u in cliffords:
        ok = True
        for psi in inputs:
            cz = apply_gate(Ket(np.kron(psi.amplitudes, KET_PLUS)), [0, 1], CZ)
            cz = apply_gate(cz, [1], u)
            if fidelity_with(pbs_expand(psi, 0, 1), cz) < 1 - 1e-10:
                ok = False
                break
        if ok:
            matches.append(u)
    assert matches
    assert any(abs(abs(np.trace(m.conj().T @ H)) - 2) < 1e-9 for m in matches)


def test_build_lc6_matches_expansion():
    lc6 = build_lc6()
    ref = eq2_expansion()
    assert abs(np.vdot(ref, lc6.amplitudes)) ** 2 == pytest.approx(1, abs=1e-10)
    assert lc6.amplitudes[0] == pytest.approx(0.25)


def test_lc6_stabilizers():
    lc6 = build_lc6()
    for g in stabilizers(CANONICAL_LC6_GRAPH):
        assert expectation(lc6, g.to_observable()) == pytest.approx(1, abs=1e-10)


def test_dressed_chain_report():
    report = assert_lc6_is_dressed_chain()
    assert report.passed and report.overlap == pytest.approx(1, abs=1e-10)
    assert len(report.stabilizer_values) == 6
    assert all(v == pytest.approx(1) for v in report.stabilizer_values.values())


def test_dressed_chain_rejects_wrong_graphs():
    wrong_edges = labelled_chain((5, 1, 2, 3, 4, 6), hadamards=(5, 6))
    assert not assert_lc6_is_dressed_chain(wrong_edges).passed
    undressed = labelled_chain((5, 1, 3, 2, 4, 6))
    assert not assert_lc6_is_dressed_chain(undressed).passed


def test_canonical_graph_agrees_with_brute_force():
    # H on slots 0 and 5 applied to the brute-force chain amplitudes
    amps = brute_graph_state(6, [(i, i + 1) for i in range(5)]).astype(complex)
    state = apply_gate(apply_gate(Ket(amps), [0], H), [5], H)
    assert fidelity_with(state, Ket(eq2_expansion())) == pytest.approx(1, abs=1e-10)
