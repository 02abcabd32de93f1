"""Single-pilot channel estimation when the noise variance is uncertain.

Scenario numbering (truth, sensing decision):

    1: busy, detected busy      2: busy, detected idle
    3: idle, detected busy      4: idle, detected idle

The sensing decision picks the pilot power and the estimator coefficient; the
true channel state decides whether the primary signal inflates the
observation variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, DomainError, UnsupportedCombinationError
from .params import EstimatorKind, PowerPolicy, SystemParams

# scenario -> (primary user busy, detected busy)
SCENARIOS = {1: (True, True), 2: (True, False), 3: (False, True), 4: (False, False)}


def scenario_of(pu_busy, detected_busy):
    return 1 + 2 * (not pu_busy) + (not detected_busy)


@dataclass(frozen=True)
class TrainingPowers:
    p_tb: float
    p_ti: float
    p_db: float
    p_di: float

    def pilot(self, detected_busy):
        return self.p_tb if detected_busy else self.p_ti

    def data(self, detected_busy):
        return self.p_db if detected_busy else self.p_di


@dataclass(frozen=True)
class NoisePriors:
    """Posterior-free probabilities of the two noise variances given the sensing outcome."""

    p_noise_only: float
    p_noise_plus_signal: float

    def __post_init__(self):
        for v in (self.p_noise_only, self.p_noise_plus_signal):
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"prior must be a probability, got {v!r}")
        if abs(self.p_noise_only + self.p_noise_plus_signal - 1.0) > 1e-12:
            raise DomainError("priors must sum to 1")


@dataclass(frozen=True)
class EstimationStats:
    k: float
    sigma_hhat2: float
    sigma_htilde2: float
    approximate: bool = False


def pilot_and_data_powers(policy: PowerPolicy, params: SystemParams) -> TrainingPowers:
    m = params.data_symbols
    if m < 1:
        raise ConfigError("(T - N)B - 1 must be at least 1", key="T")
    e1 = params.frame_energy(policy.p1_bar)
    e2 = params.frame_energy(policy.p2_bar)
    p_tb = policy.eta * e1
    p_ti = policy.eta * e2
    return TrainingPowers(p_tb=p_tb, p_ti=p_ti, p_db=(e1 - p_tb) / m, p_di=(e2 - p_ti) / m)


def noise_priors(detected_busy, p_d, p_f, a, b) -> NoisePriors:
    """Probability that the training observation carries primary-user signal.

    Bayes' rule over the stationary primary-user law (idle a/(a+b), busy
    b/(a+b)) and the sensing outcome.
    """
    for name, v in (("p_d", p_d), ("p_f", p_f), ("a", a), ("b", b)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
    if detected_busy:
        idle, busy = a * p_f, b * p_d
    else:
        idle, busy = a * (1.0 - p_f), b * (1.0 - p_d)
    total = idle + busy
    if total <= 0.0:
        raise DegenerateInputError("sensing outcome has zero probability; priors undefined")
    q = idle / total
    return NoisePriors(p_noise_only=q, p_noise_plus_signal=1.0 - q)


def sensing_priors(detected_busy, sensing, params: SystemParams) -> NoisePriors:
    return noise_priors(detected_busy, sensing.p_d, sensing.p_f, params.a, params.b)


def _check_pt(p_t):
    if p_t < 0 or math.isnan(p_t):
        raise DomainError(f"pilot power must be non-negative, got {p_t!r}")


def mismatched_coefficient(p_t, detected_busy, params: SystemParams):
    """Fixed-variance MMSE gain that trusts the sensing decision."""
    _check_pt(p_t)
    noise = params.sigma_n2 + (params.sigma_s2 if detected_busy else 0.0)
    return math.sqrt(p_t) * params.sigma_h2 / (p_t * params.sigma_h2 + noise)


def linear_mmse_coefficient(p_t, detected_busy, priors: NoisePriors, params: SystemParams):
    _check_pt(p_t)
    ph = p_t * params.sigma_h2
    ey2 = priors.p_noise_only * (ph + params.sigma_n2) + priors.p_noise_plus_signal * (
        ph + params.sigma_n2 + params.sigma_s2
    )
    return math.sqrt(p_t) * params.sigma_h2 / ey2


def true_mmse_estimate(y, p_t, detected_busy, priors: NoisePriors, params: SystemParams):
    """Conditional mean E{h | y}: the two fixed-variance estimates mixed by
    the posterior probability of each noise variance.

    Works elementwise on arrays of observations.
    """
    _check_pt(p_t)
    y = np.asarray(y)
    ph = p_t * params.sigma_h2
    v0 = ph + params.sigma_n2
    v1 = v0 + params.sigma_s2
    k0 = math.sqrt(p_t) * params.sigma_h2 / v0
    k1 = math.sqrt(p_t) * params.sigma_h2 / v1
    pi0, pi1 = priors.p_noise_only, priors.p_noise_plus_signal
    if pi1 == 0.0 or k0 == k1:
        return k0 * y
    if pi0 == 0.0:
        return k1 * y
    r2 = np.abs(y) ** 2
    # log of pi_j * f(y | v_j); the 1/pi factor cancels
    l0 = math.log(pi0) - math.log(v0) - r2 / v0
    l1 = math.log(pi1) - math.log(v1) - r2 / v1
    w0 = 1.0 / (1.0 + np.exp(np.clip(l1 - l0, -700, 700)))
    return (w0 * k0 + (1.0 - w0) * k1) * y


def observation_power(scenario, p_t, params: SystemParams):
    """E{|y|^2} of the training observation under the scenario's true state."""
    pu_busy, _ = SCENARIOS[scenario]
    return p_t * params.sigma_h2 + params.sigma_n2 + (params.sigma_s2 if pu_busy else 0.0)


def estimation_stats(kind, scenario, powers: TrainingPowers, priors, params: SystemParams) -> EstimationStats:
    """Estimate and error variances for one scenario.

    ``priors`` must be the noise priors of the scenario's sensing decision;
    it is ignored for the mismatched estimator.
    """
    kind = EstimatorKind.parse(kind)
    if scenario not in SCENARIOS:
        raise DomainError(f"scenario must be 1..4, got {scenario!r}")
    _, detected_busy = SCENARIOS[scenario]
    p_t = powers.pilot(detected_busy)
    if kind is EstimatorKind.MISMATCHED:
        k = mismatched_coefficient(p_t, detected_busy, params)
    elif kind is EstimatorKind.LINEAR:
        if priors is None:
            raise DomainError("linear MMSE needs noise priors")
        k = linear_mmse_coefficient(p_t, detected_busy, priors, params)
    else:
        raise UnsupportedCombinationError(
            "true MMSE statistics have no closed form; use true_mmse_prepass"
        )
    hhat = k * k * observation_power(scenario, p_t, params)
    htilde = (1.0 - 2.0 * k * math.sqrt(p_t)) * params.sigma_h2 + hhat
    return EstimationStats(k=k, sigma_hhat2=hhat, sigma_htilde2=max(htilde, 0.0))


def true_mmse_prepass(powers: TrainingPowers, sensing, params: SystemParams, n_samples=10**6, seed=0):
    """Monte-Carlo variances of the true MMSE estimate, one per scenario.

    The error variance is set to sigma_h2 - E|h_hat|^2 (orthogonality of the
    conditional-mean error). That identity is exact given the sensing
    decision; per scenario it is an approximation, as is the Gaussian
    treatment of the normalised estimate downstream. Results are flagged
    ``approximate``.
    """
    streams = np.random.SeedSequence(seed).spawn(4)
    out = {}
    for scenario, ss in zip(sorted(SCENARIOS), streams):
        pu_busy, detected_busy = SCENARIOS[scenario]
        rng = np.random.default_rng(ss)
        p_t = powers.pilot(detected_busy)
        priors = sensing_priors(detected_busy, sensing, params)
        y = _draw_observations(rng, n_samples, p_t, pu_busy, params)[1]
        hhat = true_mmse_estimate(y, p_t, detected_busy, priors, params)
        v = float(np.mean(np.abs(hhat) ** 2))
        out[scenario] = EstimationStats(
            k=math.nan, sigma_hhat2=v, sigma_htilde2=max(params.sigma_h2 - v, 0.0), approximate=True
        )
    return out


def _cn(rng, n, var):
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _draw_observations(rng, n, p_t, pu_busy, params):
    h = _cn(rng, n, params.sigma_h2)
    noise = _cn(rng, n, params.sigma_n2)
    if pu_busy and params.sigma_s2 > 0:
        noise = noise + _cn(rng, n, params.sigma_s2)
    return h, math.sqrt(p_t) * h + noise


def scenario_stats(kind, powers: TrainingPowers, sensing, params: SystemParams, true_stats=None):
    """EstimationStats for scenarios 1..4 as a dict.

    For the true MMSE estimator ``true_stats`` (from :func:`true_mmse_prepass`)
    must be supplied.
    """
    kind = EstimatorKind.parse(kind)
    if kind is EstimatorKind.TRUE:
        if true_stats is None:
            raise UnsupportedCombinationError(
                "true MMSE on the analytic path requires Monte-Carlo pre-pass statistics"
            )
        return dict(true_stats)
    out = {}
    for scenario, (_, detected_busy) in SCENARIOS.items():
        priors = sensing_priors(detected_busy, sensing, params) if kind is EstimatorKind.LINEAR else None
        out[scenario] = estimation_stats(kind, scenario, powers, priors, params)
    return out
