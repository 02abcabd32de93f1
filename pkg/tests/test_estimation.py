import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogcap.errors import ConfigError, DegenerateInputError, DomainError, UnsupportedCombinationError
from cogcap.estimation import (
    SCENARIOS,
    NoisePriors,
    TrainingPowers,
    estimation_stats,
    linear_mmse_coefficient,
    mismatched_coefficient,
    noise_priors,
    observation_power,
    pilot_and_data_powers,
    scenario_of,
    scenario_stats,
    true_mmse_estimate,
    true_mmse_prepass,
)
from cogcap.params import EstimatorKind, PowerPolicy, SystemParams
from cogcap.sensing import SensingOperatingPoint
from cogcap.simulator import estimator_mse

P = SystemParams()
PF = SystemParams(power_unit="frame")
SENSE = SensingOperatingPoint.from_probabilities(0.92, 0.24)
PERFECT = SensingOperatingPoint.from_probabilities(1.0, 0.0)

variances = st.floats(0.1, 10.0)
pilot = st.floats(0.0, 100.0)


def test_scenario_numbering():
    for s, (busy, det) in SCENARIOS.items():
        assert scenario_of(busy, det) == s


def test_pilot_and_data_powers_frame_units():
    tp = pilot_and_data_powers(PowerPolicy(1.0, 1.0, eta=0.1), PF)
    assert tp.p_tb == pytest.approx(0.01, rel=1e-12)
    assert tp.p_db == pytest.approx((0.1 - 0.01) / 89, rel=1e-12)
    assert tp.p_db == pytest.approx(1.0112e-3, rel=1e-4)


def test_pilot_and_data_powers_symbol_units():
    # a frame at unit power per symbol carries T*B = 100 energy units
    tp = pilot_and_data_powers(PowerPolicy(1.0, 2.0, eta=0.1), P)
    assert tp.p_tb == pytest.approx(10.0)
    assert tp.p_ti == pytest.approx(20.0)
    assert tp.p_tb + P.data_symbols * tp.p_db == pytest.approx(100.0)
    assert tp.p_ti + P.data_symbols * tp.p_di == pytest.approx(200.0)


def test_pilot_power_vanishes_with_eta():
    tp = pilot_and_data_powers(PowerPolicy(1.0, 1.0, eta=1e-12), PF)
    assert tp.p_tb == pytest.approx(0.0, abs=1e-12)
    assert tp.p_db == pytest.approx(0.1 / 89, rel=1e-10)


def test_silent_transmitter():
    tp = pilot_and_data_powers(PowerPolicy(1.0, 0.0), P)
    assert tp.p_ti == 0.0 and tp.p_di == 0.0


def test_data_symbol_count_checked():
    with pytest.raises(ConfigError):
        SystemParams(T=0.011, N=0.01)


def test_priors_examples():
    assert noise_priors(True, 1.0, 0.0, 0.9, 0.1).p_noise_only == 0.0
    assert noise_priors(True, 0.8, 0.3, 0.4, 0.4).p_noise_only == pytest.approx(0.3 / 1.1)
    q = noise_priors(True, 0.92, 0.24, 0.9, 0.1)
    assert q.p_noise_only == pytest.approx(0.216 / 0.308, rel=1e-12)
    assert round(q.p_noise_only, 4) == 0.7013
    assert q.p_noise_only + q.p_noise_plus_signal == pytest.approx(1.0, abs=1e-15)


def test_priors_idle_branch():
    q = noise_priors(False, 0.92, 0.24, 0.9, 0.1)
    assert q.p_noise_only == pytest.approx(0.9 * 0.76 / (0.9 * 0.76 + 0.1 * 0.08))


def test_priors_bayes_monte_carlo():
    # two-state chain with stationary start, then a sensing draw per frame
    rng = np.random.default_rng(3)
    n = 10**6
    busy = rng.random(n) < 0.1
    u = rng.random(n)
    detected = np.where(busy, u < 0.92, u < 0.24)
    idle_given_det = (~busy[detected]).mean()
    se = math.sqrt(idle_given_det * (1 - idle_given_det) / detected.sum())
    assert abs(idle_given_det - noise_priors(True, 0.92, 0.24, 0.9, 0.1).p_noise_only) <= 3 * se


def test_priors_degenerate():
    with pytest.raises(DegenerateInputError):
        noise_priors(True, 0.0, 0.0, 0.9, 0.1)
    with pytest.raises(DomainError):
        noise_priors(True, 1.2, 0.0, 0.9, 0.1)
    with pytest.raises(DomainError):
        NoisePriors(0.4, 0.4)


def test_mismatched_examples():
    assert mismatched_coefficient(0.0, True, P) == 0.0
    assert mismatched_coefficient(1.0, False, P) == 0.5
    assert mismatched_coefficient(1.0, True, P) == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        mismatched_coefficient(-1.0, True, P)


def test_linear_examples():
    p = SystemParams(sigma_s2=2.0)
    k = linear_mmse_coefficient(1.0, True, NoisePriors(0.5, 0.5), p)
    assert k == pytest.approx(1 / 3, rel=1e-14)
    assert linear_mmse_coefficient(1.0, True, NoisePriors(1.0, 0.0), P) == mismatched_coefficient(1.0, False, P)


def test_linear_coefficient_monte_carlo():
    # K = E{h y*} / E{|y|^2} for the two-component noise mixture
    p = SystemParams(sigma_s2=2.0)
    rng = np.random.default_rng(8)
    n = 10**6
    h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    var = np.where(rng.random(n) < 0.5, 1.0, 3.0)
    w = np.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    y = h + w
    num = (h * y.conj()).real
    den = np.abs(y) ** 2
    k_hat = num.mean() / den.mean()
    # delta-method standard error of the ratio of means
    g = (num - k_hat * den) / den.mean()
    se = g.std(ddof=1) / math.sqrt(n)
    k = linear_mmse_coefficient(1.0, True, NoisePriors(0.5, 0.5), p)
    assert abs(k_hat - k) <= 3 * se


@pytest.mark.parametrize("detected", [True, False])
def test_perfect_sensing_convergence(detected):
    priors = noise_priors(detected, 1.0, 0.0, P.a, P.b)
    for p_t in (0.0, 0.01, 1.0, 10.0):
        km = mismatched_coefficient(p_t, detected, P)
        kl = linear_mmse_coefficient(p_t, detected, priors, P)
        assert abs(km - kl) <= 1e-12
        y = np.array([0.3 + 0.1j, -2.0 + 1.0j, 5.0j])
        assert np.max(np.abs(true_mmse_estimate(y, p_t, detected, priors, P) - km * y)) <= 1e-12


@given(pilot, st.floats(0.0, 1.0), variances, variances, variances)
def test_linear_between_mismatched(p_t, q, sh, sn, ss):
    p = SystemParams(sigma_h2=sh, sigma_n2=sn, sigma_s2=ss)
    priors = NoisePriors(q, 1.0 - q)
    lo = mismatched_coefficient(p_t, True, p)
    hi = mismatched_coefficient(p_t, False, p)
    k = linear_mmse_coefficient(p_t, True, priors, p)
    assert lo * (1 - 1e-12) <= k <= hi * (1 + 1e-12)


def test_true_mmse_collapses():
    y = np.linspace(-3, 3, 7) + 1j
    est = true_mmse_estimate(y, 0.5, True, NoisePriors(1.0, 0.0), P)
    assert np.array_equal(est, mismatched_coefficient(0.5, False, P) * y)
    p0 = SystemParams(sigma_s2=0.0)
    est = true_mmse_estimate(y, 0.5, True, NoisePriors(0.3, 0.7), p0)
    assert np.allclose(est, mismatched_coefficient(0.5, True, p0) * y, rtol=0, atol=1e-15)


def test_true_mmse_lowest_mse():
    res = estimator_mse(10**6, 21, PowerPolicy(1.0, 1.0), SENSE, PF)
    d_tl = res["diff"][("true", "linear")]
    d_lm = res["diff"][("linear", "mismatched")]
    assert d_tl[0] <= 2 * d_tl[1]
    assert d_lm[0] <= 2 * d_lm[1]
    worst = max(res[EstimatorKind.MISMATCHED]["busy"][0], res[EstimatorKind.MISMATCHED]["idle"][0])
    assert res[EstimatorKind.LINEAR]["all"][0] <= worst + 2 * res[EstimatorKind.LINEAR]["all"][1]


def test_scenario1_variance_frame_units():
    tp = pilot_and_data_powers(PowerPolicy(1.0, 1.0, eta=0.1), PF)
    st1 = estimation_stats("mismatched", 1, tp, None, PF)
    assert st1.sigma_hhat2 == pytest.approx(0.01 / (0.01 + 2.0), rel=1e-12)
    assert round(st1.sigma_hhat2, 6) == pytest.approx(4.975e-3, abs=1e-6)


def test_scenario2_at_least_scenario4():
    tp = TrainingPowers(1.0, 1.0, 0.0, 0.0)
    s2 = estimation_stats("mismatched", 2, tp, None, P)
    s4 = estimation_stats("mismatched", 4, tp, None, P)
    assert s2.sigma_hhat2 >= s4.sigma_hhat2


def test_perfect_training_limit():
    tp = TrainingPowers(1.0, 1e12, 0.0, 0.0)
    s4 = estimation_stats("mismatched", 4, tp, None, P)
    assert s4.sigma_hhat2 == pytest.approx(1.0, rel=1e-9)
    assert s4.sigma_htilde2 == pytest.approx(0.0, abs=1e-9)


def test_true_kind_rejected_on_closed_form():
    tp = TrainingPowers(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(UnsupportedCombinationError):
        estimation_stats("true", 1, tp, None, P)
    with pytest.raises(UnsupportedCombinationError):
        scenario_stats("true", tp, SENSE, P)
    with pytest.raises(DomainError):
        estimation_stats("mismatched", 5, tp, None, P)
    with pytest.raises(DomainError):
        estimation_stats("linear", 1, tp, None, P)


@given(pilot, pilot, variances, variances, st.floats(0.0, 10.0), st.sampled_from(["mismatched", "linear"]))
def test_variances_nonnegative(pt_b, pt_i, sh, sn, ss, kind):
    p = SystemParams(sigma_h2=sh, sigma_n2=sn, sigma_s2=ss)
    tp = TrainingPowers(pt_b, pt_i, 0.0, 0.0)
    for s in scenario_stats(kind, tp, SENSE, p).values():
        assert s.sigma_hhat2 >= 0.0 and s.sigma_htilde2 >= 0.0


@pytest.mark.parametrize("kind", ["mismatched", "linear"])
@pytest.mark.parametrize("scenario", [1, 2, 3, 4])
def test_variances_monte_carlo(kind, scenario):
    tp = pilot_and_data_powers(PowerPolicy(0.02, 0.05, eta=0.1), P)
    stats = scenario_stats(kind, tp, SENSE, P)[scenario]
    busy, detected = SCENARIOS[scenario]
    p_t = tp.pilot(detected)
    rng = np.random.default_rng(100 + scenario)
    n = 10**6
    h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    var = P.sigma_n2 + (P.sigma_s2 if busy else 0.0)
    w = math.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    y = math.sqrt(p_t) * h + w
    est = stats.k * y
    for sample, target in ((np.abs(est) ** 2, stats.sigma_hhat2), (np.abs(h - est) ** 2, stats.sigma_htilde2)):
        se = sample.std(ddof=1) / math.sqrt(n)
        assert abs(sample.mean() - target) <= 3 * se


def test_observation_power():
    assert observation_power(1, 2.0, P) == 4.0
    assert observation_power(3, 2.0, P) == 3.0


def test_true_prepass():
    tp = pilot_and_data_powers(PowerPolicy(0.05, 0.05, eta=0.1), P)
    out = true_mmse_prepass(tp, SENSE, P, n_samples=10**5, seed=4)
    again = true_mmse_prepass(tp, SENSE, P, n_samples=10**5, seed=4)
    assert out == again
    for s in out.values():
        assert s.approximate
        assert s.sigma_hhat2 + s.sigma_htilde2 == pytest.approx(P.sigma_h2)
        assert 0 <= s.sigma_hhat2 <= P.sigma_h2


def test_prepass_matches_closed_form_at_perfect_sensing():
    tp = pilot_and_data_powers(PowerPolicy(0.05, 0.05, eta=0.1), P)
    mc = true_mmse_prepass(tp, PERFECT, P, n_samples=10**6, seed=9)
    cf = scenario_stats("mismatched", tp, PERFECT, P)
    for s in (1, 4):
        assert mc[s].sigma_hhat2 == pytest.approx(cf[s].sigma_hhat2, rel=0.01)
