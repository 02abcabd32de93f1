"""Randomized admissible configurations shared by property and acceptance tests."""

from dataclasses import dataclass

import numpy as np

from cogcap.params import EstimatorKind, PowerPolicy, RatePolicy, SystemParams
from cogcap.sensing import SensingOperatingPoint
from cogcap.statemodel import TransitionModel, build_transition_model


@dataclass(frozen=True)
class Case:
    params: SystemParams
    sensing: SensingOperatingPoint
    powers: PowerPolicy
    rates: RatePolicy
    kind: EstimatorKind
    rows: TransitionModel
    theta: float


def random_case(rng) -> Case:
    params = SystemParams(
        sigma_h2=float(rng.uniform(0.2, 5.0)),
        sigma_n2=float(rng.uniform(0.2, 5.0)),
        sigma_s2=float(rng.uniform(0.0, 5.0)),
        theta=float(10 ** rng.uniform(-3, 0)),
        a=float(rng.uniform(0.01, 1.0)),
        b=float(rng.uniform(0.01, 1.0)),
        power_unit=str(rng.choice(["symbol", "frame"])),
    )
    pd = float(rng.uniform(0.01, 0.99))
    sensing = SensingOperatingPoint.from_probabilities(pd, float(rng.uniform(0.0, pd)))
    # frame units spend P*T per frame instead of P*T*B; rescale to comparable energies
    scale = params.B if params.power_unit == "frame" else 1.0
    p1, p2 = (float(scale * 10 ** rng.uniform(-2, 1)) for _ in range(2))
    powers = PowerPolicy(p1, p2, eta=float(rng.uniform(0.02, 0.9)))
    rates = RatePolicy(float(rng.uniform(0, 1500)), float(rng.uniform(0, 1500)))
    kind = EstimatorKind.MISMATCHED if rng.random() < 0.5 else EstimatorKind.LINEAR
    rows = build_transition_model(rates, powers, sensing, kind, params)
    return Case(params, sensing, powers, rates, kind, rows, params.theta)


def random_cases(n, seed):
    rng = np.random.default_rng(seed)
    return [random_case(rng) for _ in range(n)]
