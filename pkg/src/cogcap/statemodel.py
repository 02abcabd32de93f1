"""Eight-state ON/OFF model of the secondary link.

State k in 1..8 is (scenario, reliability): states 2s-1 and 2s are the ON and
OFF states of scenario s. Rows of the transition matrix depend only on
whether the originating state had a busy (1-4) or idle (5-8) channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .estimation import SCENARIOS, pilot_and_data_powers, scenario_stats
from .params import EstimatorKind, PowerPolicy, RatePolicy, SystemParams


@dataclass(frozen=True)
class ScenarioSnrs:
    snr1: float
    snr2: float
    snr3: float
    snr4: float
    approximate: bool = False

    def __post_init__(self):
        if any(not v >= 0 for v in self.as_tuple()):
            raise DomainError("SNRs must be non-negative")

    def as_tuple(self):
        return (self.snr1, self.snr2, self.snr3, self.snr4)


@dataclass(frozen=True, eq=False)
class TransitionModel:
    p_b: np.ndarray = field(repr=False)
    p_i: np.ndarray = field(repr=False)
    alphas: tuple

    def matrix(self):
        """The full 8x8 matrix: rows 1-4 equal p_b, rows 5-8 equal p_i."""
        return np.vstack([np.tile(self.p_b, (4, 1)), np.tile(self.p_i, (4, 1))])


def scenario_snrs(policy: PowerPolicy, kind, sensing, params: SystemParams, true_stats=None) -> ScenarioSnrs:
    """Effective SNR per scenario with the estimation error treated as noise.

    ``true_stats`` supplies Monte-Carlo variances when ``kind`` is the true
    MMSE estimator.
    """
    kind = EstimatorKind.parse(kind)
    powers = pilot_and_data_powers(policy, params)
    stats = scenario_stats(kind, powers, sensing, params, true_stats=true_stats)
    snrs = []
    for scenario, (pu_busy, detected_busy) in SCENARIOS.items():
        st = stats[scenario]
        p_data = powers.data(detected_busy)
        noise = params.sigma_n2 + (params.sigma_s2 if pu_busy else 0.0)
        snrs.append(p_data * st.sigma_hhat2 / (p_data * st.sigma_htilde2 + noise))
    return ScenarioSnrs(*snrs, approximate=kind is EstimatorKind.TRUE)


def rate_gap(rate, params: SystemParams):
    """2^(rT/((T-N)B-1)) - 1: the |w|^2-scaled SNR needed to carry ``rate``."""
    return 2.0 ** (rate * params.T / params.data_symbols) - 1.0


def rate_thresholds(rates: RatePolicy, snrs: ScenarioSnrs, params: SystemParams):
    """alpha_1..alpha_4; scenario 1 and 3 use r1, 2 and 4 use r2.

    A positive rate over a zero-SNR scenario yields ``math.inf``.
    """
    out = []
    for snr, r in zip(snrs.as_tuple(), (rates.r1, rates.r2, rates.r1, rates.r2)):
        g = rate_gap(r, params)
        if g == 0.0:
            out.append(0.0)
        elif snr == 0.0:
            out.append(math.inf)
        else:
            out.append(g / snr)
    return tuple(out)


def on_probability(alpha):
    """Pr{z > alpha} for z exponential with unit mean."""
    if math.isnan(alpha) or alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha!r}")
    return math.exp(-alpha)


def transition_rows(sensing, alphas, params: SystemParams) -> TransitionModel:
    p_d, p_f = sensing.p_d, sensing.p_f
    a, b = params.a, params.b
    on = [on_probability(al) for al in alphas]

    def row(stay_busy, to_idle):
        return np.array(
            [
                stay_busy * p_d * on[0],
                stay_busy * p_d * (1.0 - on[0]),
                stay_busy * (1.0 - p_d) * on[1],
                stay_busy * (1.0 - p_d) * (1.0 - on[1]),
                to_idle * p_f * on[2],
                to_idle * p_f * (1.0 - on[2]),
                to_idle * (1.0 - p_f) * on[3],
                to_idle * (1.0 - p_f) * (1.0 - on[3]),
            ]
        )

    return TransitionModel(p_b=row(1.0 - a, a), p_i=row(b, 1.0 - b), alphas=tuple(alphas))


def build_transition_model(rates: RatePolicy, policy: PowerPolicy, sensing, kind, params: SystemParams, true_stats=None):
    snrs = scenario_snrs(policy, kind, sensing, params, true_stats=true_stats)
    return transition_rows(sensing, rate_thresholds(rates, snrs, params), params)
