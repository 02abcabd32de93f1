"""Parameter containers shared by every stage of the link model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError

POWER_UNITS = ("symbol", "frame")


class EstimatorKind(enum.Enum):
    MISMATCHED = "mismatched"
    LINEAR = "linear"
    TRUE = "true"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "mismatched": cls.MISMATCHED,
            "mismatched_mmse": cls.MISMATCHED,
            "m_mmse": cls.MISMATCHED,
            "linear": cls.LINEAR,
            "linear_mmse": cls.LINEAR,
            "l_mmse": cls.LINEAR,
            "true": cls.TRUE,
            "true_mmse": cls.TRUE,
            "mmse": cls.TRUE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown estimator kind {value!r}") from None


def db_to_lin(db):
    return 10.0 ** (db / 10.0)


def lin_to_db(lin):
    if lin <= 0:
        return -math.inf
    return 10.0 * math.log10(lin)


def _is_int(x, tol=1e-9):
    return abs(x - round(x)) <= tol * max(1.0, abs(x))


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the secondary link and its frame structure.

    Defaults are the numerical-study parameter set: 0.1 s frames with 10 ms
    of sensing at 1 kHz, unit variances, theta = 0.1, a = 0.9, b = 0.1.

    ``a`` is the busy->idle and ``b`` the idle->busy transition probability
    of the primary-user chain.

    ``power_unit`` fixes how an average power maps to energy per frame:

    * ``"symbol"``: the average power is energy per symbol period, so a frame
      carries ``P * T * B`` (this is what reproduces the published curves).
    * ``"frame"``: the average power is per second, a frame carries ``P * T``.
    """

    T: float = 0.1
    N: float = 0.01
    B: float = 1000.0
    sigma_h2: float = 1.0
    sigma_n2: float = 1.0
    sigma_s2: float = 1.0
    theta: float = 0.1
    a: float = 0.9
    b: float = 0.1
    power_unit: str = "symbol"

    def __post_init__(self):
        for name in ("T", "N", "B", "sigma_h2", "sigma_n2", "sigma_s2", "theta", "a", "b"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number, got {v!r}", key=name)
        if not 0 < self.N < self.T:
            raise ConfigError("sensing duration N must satisfy 0 < N < T", key="N")
        if self.B <= 0:
            raise ConfigError("bandwidth B must be positive", key="B")
        nb = self.N * self.B
        if not _is_int(nb) or round(nb) < 1:
            raise ConfigError(f"NB = N*B must be a positive integer, got {nb!r}", key="NB")
        if self.sigma_h2 <= 0 or self.sigma_n2 <= 0:
            raise ConfigError("sigma_h2 and sigma_n2 must be positive", key="sigma_n2")
        if self.sigma_s2 < 0:
            raise ConfigError("sigma_s2 must be non-negative", key="sigma_s2")
        if self.theta <= 0:
            raise ConfigError("theta must be positive", key="theta")
        for name in ("a", "b"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]", key=name)
        if self.a + self.b <= 0:
            raise ConfigError("a + b must be positive (chain needs a stationary law)", key="a")
        if self.data_symbols < 1:
            raise ConfigError("(T - N)*B - 1 must be at least 1", key="T")
        if self.power_unit not in POWER_UNITS:
            raise ConfigError(f"power_unit must be one of {POWER_UNITS}", key="power_unit")

    @property
    def nb(self) -> int:
        """Number of complex samples collected while sensing."""
        return int(round(self.N * self.B))

    @property
    def data_symbols(self) -> float:
        """(T - N)B - 1: symbols left for data after the single pilot."""
        return round((self.T - self.N) * self.B, 9) - 1.0

    @property
    def p_idle(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def p_busy(self) -> float:
        return self.b / (self.a + self.b)

    def frame_energy(self, p_bar):
        """Energy budget of a frame transmitted at average power ``p_bar``."""
        scale = self.T * self.B if self.power_unit == "symbol" else self.T
        return p_bar * scale


@dataclass(frozen=True)
class PowerPolicy:
    """Average powers when the channel is sensed busy (p1_bar) or idle (p2_bar)."""

    p1_bar: float
    p2_bar: float
    eta: float = 0.1
    p_avg: float = math.inf
    p_peak: float = math.inf

    def __post_init__(self):
        if self.p1_bar < 0 or self.p2_bar < 0:
            raise DomainError("average powers must be non-negative")
        if not 0 < self.eta < 1:
            raise DomainError("training fraction eta must lie in (0, 1)")

    def check_constraints(self, p_d, tol=1e-9):
        """Raise if the peak or average-interference constraint is violated."""
        if self.p1_bar > self.p_peak + tol or self.p2_bar > self.p_peak + tol:
            raise DomainError("peak power constraint violated")
        if p_d * self.p1_bar + (1 - p_d) * self.p2_bar > self.p_avg + tol:
            raise DomainError("average interference constraint violated")

    def slack(self, p_d):
        """Residuals (peak1, peak2, average); all non-negative when feasible."""
        return (
            self.p_peak - self.p1_bar,
            self.p_peak - self.p2_bar,
            self.p_avg - (p_d * self.p1_bar + (1 - p_d) * self.p2_bar),
        )


@dataclass(frozen=True)
class RatePolicy:
    """Fixed rates in bits/s when sensed busy (r1) or idle (r2)."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (self.r1 >= 0 and self.r2 >= 0):
            raise DomainError("rates must be non-negative")
