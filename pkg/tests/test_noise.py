import numpy as np
import pytest

from onewaysim.characterize import (
    TABLE1_LAYOUT,
    SettingValue,
    ideal_setting_values,
    load_table1,
    parse_setting,
    witness_b,
)
from onewaysim.counts import expectation_from_counts, parity_map
from onewaysim.graph import CANONICAL_LC6_GRAPH, build_lc6, stabilizers
from onewaysim.noise import (
    NoiseModel,
    apply_model,
    expected_sigma,
    fit_white_noise,
    outcome_probabilities,
    simulate_counts,
)
from onewaysim.statevec import DensityOp, ObservableExpr, expectation, fidelity_with


@pytest.fixture(scope="module")
def lc6():
    return build_lc6()


def test_apply_model_examples(lc6):
    rho = apply_model(lc6, NoiseModel(1.0))
    assert fidelity_with(lc6, rho) == pytest.approx(1, abs=1e-12)
    assert np.allclose(apply_model(lc6, NoiseModel(0.0, dephase=0.2)).matrix, np.eye(64) / 64)
    rho = apply_model(lc6, NoiseModel(0.611))
    assert expectation(rho, witness_b()) == pytest.approx(0.611, abs=1e-10)


def test_witness_equals_white_p(lc6):
    b = witness_b()
    for p in np.linspace(0, 1, 20):
        assert expectation(apply_model(lc6, NoiseModel(p)), b) == pytest.approx(p, abs=1e-10)


def test_dephasing_single_qubit_example():
    plus = np.array([1, 1]) / np.sqrt(2)
    from onewaysim.statevec import Ket

    rho = apply_model(Ket(plus), NoiseModel(dephase=0.1))
    # off-diagonal shrinks by 1 - 2r
    assert rho.matrix[0, 1] == pytest.approx(0.5 * 0.8)
    rho = apply_model(Ket(plus), NoiseModel(depol=1.0))
    assert np.allclose(rho.matrix, np.eye(2) / 2)


def test_channel_legality_random_models(lc6):
    rng = np.random.default_rng(0)
    for _ in range(100):
        model = NoiseModel(
            float(rng.random()),
            {int(q): float(rng.uniform(0, 0.5)) for q in rng.choice(6, size=2, replace=False)},
            float(rng.uniform(0, 0.2)) if rng.random() < 0.5 else {},
        )
        rho = apply_model(lc6, model)  # DensityOp validates its invariants
        assert np.trace(rho.matrix).real == pytest.approx(1)
        assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-9


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(1.2)
    with pytest.raises(ValueError):
        NoiseModel(dephase=0.6)
    with pytest.raises(ValueError):
        NoiseModel(depol={0: -0.1})


def test_noise_model_parsing_and_json():
    m = NoiseModel.from_string("white_p=0.6,dephase=0.05,depol=0.01")
    assert m.white_p == 0.6 and m.dephase == {0: 0.05, 5: 0.05} and m.depol == 0.01
    assert NoiseModel.from_dict(m.to_dict()) == m
    assert NoiseModel.from_string("") == NoiseModel()
    with pytest.raises(ValueError):
        NoiseModel.from_string("white=0.5")
    with pytest.raises(ValueError):
        NoiseModel.from_string("white_p")
    with pytest.raises(ValueError):
        NoiseModel.from_dict({"white_p": 1, "colour": 0})


def test_fit_examples():
    ideal = ideal_setting_values()
    assert fit_white_noise([SettingValue(l, v) for l, v in ideal.items()]) == pytest.approx(1)
    assert fit_white_noise([SettingValue(l, 0.0) for l in ideal]) == 0
    p_hat = fit_white_noise(load_table1())
    assert p_hat == pytest.approx(0.60, abs=0.01)
    assert p_hat == pytest.approx(0.61, abs=0.02)
    with pytest.raises(ValueError):
        fit_white_noise([])


def test_fit_round_trip(lc6):
    for p in (0.2, 0.611, 0.95):
        rho = apply_model(lc6, NoiseModel(p))
        values = [SettingValue(l, expectation(rho, parse_setting(l))) for l, _ in TABLE1_LAYOUT]
        assert fit_white_noise(values) == pytest.approx(p, abs=1e-10)


def test_outcome_probabilities_match_expectation(lc6):
    rho = apply_model(lc6, NoiseModel(0.7, dephase={0: 0.1}))
    for label, _ in TABLE1_LAYOUT:
        obs = parse_setting(label)
        probs = outcome_probabilities(rho, obs)
        assert probs.sum() == pytest.approx(1)
        parity = parity_map(obs)
        from_probs = sum(probs[int(k, 2)] * v for k, v in parity.items())
        assert from_probs == pytest.approx(expectation(rho, obs), abs=1e-10)


def test_simulated_stabilizer_counts_large_n(lc6):
    for i, g in enumerate(stabilizers(CANONICAL_LC6_GRAPH)):
        obs = g.to_observable()
        table = simulate_counts(lc6, obs, n_events=10**6, seed=i, label=str(g))
        e, _ = expectation_from_counts(table, parity_map(obs))
        assert e == pytest.approx(1, abs=0.01)


def test_simulated_counts_on_mixed_state_equiprobable():
    table = simulate_counts(DensityOp.maximally_mixed(6), "X5Y1Y3I2X4X6", n_events=64000, seed=3)
    counts = np.array([table.counts.get(format(i, "06b"), 0) for i in range(64)])
    # 1000 expected per outcome; Poisson-multinomial spread ~ 32
    assert np.all(np.abs(counts - counts.sum() / 64) < 6 * np.sqrt(1000))


def test_simulated_counts_reproducible(lc6):
    a = simulate_counts(lc6, "P-51X3Z2P+46", seed=11)
    b = simulate_counts(lc6, "P-51X3Z2P+46", seed=11)
    assert a == b and a.k == 6 and a.label == "P-51X3Z2P+46"


def test_simulated_sigma_range(lc6):
    rho = apply_model(lc6, NoiseModel(0.611))
    rng = np.random.default_rng(4)
    for label, _ in TABLE1_LAYOUT:
        table = simulate_counts(rho, label, n_events=400, seed=rng)
        _, sigma = expectation_from_counts(table, parity_map(parse_setting(label)))
        assert 0.03 <= sigma <= 0.05


def test_simulate_counts_rejects_non_product_setting(lc6):
    obs = ObservableExpr.term(6, {0: "X"}) + ObservableExpr.term(6, {0: "Z"})
    with pytest.raises(ValueError):
        simulate_counts(lc6, obs, label="bad")
    with pytest.raises(ValueError):
        simulate_counts(lc6, ObservableExpr.term(6, {0: "X"}))


def test_expected_sigma():
    assert expected_sigma(0.6, 400) == pytest.approx(0.04)
    assert expected_sigma(1.0) == 0
