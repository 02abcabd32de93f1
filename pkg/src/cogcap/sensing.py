"""Energy-detection channel sensing.

The test statistic Y is the average of NB squared magnitudes of circularly
symmetric complex Gaussian samples, so NB*Y/sigma^2 is Gamma(NB, 1)
distributed. The detection threshold therefore enters the incomplete gamma
function as the integration limit, with NB as the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import inv_reg_lower_gamma, reg_upper_gamma
from .params import SystemParams


@dataclass(frozen=True)
class SensingOperatingPoint:
    lam: float
    p_f: float
    p_d: float

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError("threshold must be non-negative")
        for name in ("p_f", "p_d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be a probability, got {v!r}")

    @classmethod
    def from_probabilities(cls, p_d, p_f):
        """Operating point quoted as a (P_d, P_f) pair; the threshold is left as NaN."""
        return cls(lam=math.nan, p_f=p_f, p_d=p_d)


def _tail(lam, variance, nb):
    if lam < 0 or math.isnan(lam):
        raise DomainError(f"threshold must be non-negative, got {lam!r}")
    if variance == 0:
        return 0.0 if lam > 0 else 1.0
    return reg_upper_gamma(nb, nb * lam / variance)


def false_alarm_prob(lam, params: SystemParams):
    """Pr{Y > lam | channel idle}."""
    return _tail(lam, params.sigma_n2, params.nb)


def detection_prob(lam, params: SystemParams):
    """Pr{Y > lam | channel busy}."""
    return _tail(lam, params.sigma_n2 + params.sigma_s2, params.nb)


def operating_point_from_pd(target_pd, params: SystemParams):
    """Threshold achieving detection probability ``target_pd`` and its P_f."""
    if not 0.0 < target_pd < 1.0:
        raise DomainError(f"target P_d must lie in (0, 1), got {target_pd!r}")
    nb = params.nb
    lam = (params.sigma_n2 + params.sigma_s2) / nb * inv_reg_lower_gamma(nb, 1.0 - target_pd)
    return SensingOperatingPoint(lam=lam, p_f=false_alarm_prob(lam, params), p_d=detection_prob(lam, params))


def roc_curve(pd_grid, params: SystemParams):
    grid = [float(v) for v in pd_grid]
    if any(not 0.0 < v < 1.0 for v in grid):
        raise DomainError("P_d grid values must lie in (0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("P_d grid must be strictly increasing")
    return [operating_point_from_pd(v, params) for v in grid]


def monte_carlo_sensing(lams, params: SystemParams, n_trials=10**7, seed=0, busy=False, chunk=500_000):
    """Empirical Pr{Y > lam} from simulated complex Gaussian samples.

    Returns (estimates, standard_errors) as arrays aligned with ``lams``.
    Draws NB complex samples per trial under the requested hypothesis.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    nb = params.nb
    var = params.sigma_n2 + (params.sigma_s2 if busy else 0.0)
    rng = np.random.default_rng(seed)
    counts = np.zeros(lams.shape, dtype=np.int64)
    done = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        # |y|^2 of a CN(0, var) sample is exponential with mean var.
        re = rng.standard_normal((m, nb))
        im = rng.standard_normal((m, nb))
        y = (re * re + im * im).mean(axis=1) * (var / 2.0)
        counts += (y[:, None] > lams[None, :]).sum(axis=0)
        done += m
    est = counts / n_trials
    se = np.sqrt(np.maximum(est * (1 - est), 0.0) / n_trials)
    return est, se
