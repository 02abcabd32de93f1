"""Frame-level Monte-Carlo model of the cognitive link.

Each frame draws the primary-user state from the two-state chain, a sensing
decision, a block-fading coefficient and the training noise, forms the
channel estimate and declares the frame ON when the fixed rate is below the
achievable rate at the realized estimate. Every random component has its
own stream split off one SeedSequence, so changing how one component is
drawn leaves the others untouched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, InsufficientDataError
from .estimation import (
    SCENARIOS,
    linear_mmse_coefficient,
    mismatched_coefficient,
    pilot_and_data_powers,
    scenario_stats,
    sensing_priors,
    true_mmse_estimate,
    true_mmse_prepass,
)
from .params import EstimatorKind, PowerPolicy, RatePolicy, SystemParams
from .statemodel import rate_gap

STREAMS = ("pu", "sensing", "fading", "noise")


@dataclass(frozen=True)
class FrameRecord:
    index: int
    pu_busy: bool
    detected_busy: bool
    scenario: int
    z: float
    on: bool
    service_bits: float


@dataclass(eq=False)
class Trajectory:
    """Column-wise record of a simulated run."""

    pu_busy: np.ndarray
    detected_busy: np.ndarray
    scenario: np.ndarray
    z: np.ndarray
    on: np.ndarray
    service_bits: np.ndarray
    T: float
    B: float
    rates: RatePolicy
    powers: PowerPolicy
    approximate: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.service_bits)

    def __getitem__(self, i):
        return FrameRecord(
            index=int(i),
            pu_busy=bool(self.pu_busy[i]),
            detected_busy=bool(self.detected_busy[i]),
            scenario=int(self.scenario[i]),
            z=float(self.z[i]),
            on=bool(self.on[i]),
            service_bits=float(self.service_bits[i]),
        )

    def records(self):
        for i in range(len(self)):
            yield self[i]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "scenario", "on", "service_bits"])
            for i in range(len(self)):
                w.writerow([i, int(self.scenario[i]), int(self.on[i]), repr(float(self.service_bits[i]))])


def spawn_streams(seed):
    seqs = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, seqs)}


def primary_user_chain(n, params: SystemParams, rng):
    """Busy flags of the two-state chain started from its stationary law.

    Sojourn times are geometric (busy: leave w.p. a, idle: leave w.p. b), so
    the path is assembled from run lengths instead of a per-frame loop.
    """
    a, b = params.a, params.b
    busy = bool(rng.random() < params.p_busy)
    out = np.empty(n, dtype=bool)
    pos = 0
    while pos < n:
        leave = a if busy else b
        run = n - pos if leave == 0.0 else int(rng.geometric(leave))
        end = min(n, pos + run)
        out[pos:end] = busy
        pos = end
        busy = not busy
    return out


def _cn(rng, n, var):
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _observe(n, pu_busy, detected, powers, params, streams):
    """True fading and the training observation for every frame."""
    h = _cn(streams["fading"], n, params.sigma_h2)
    noise = _cn(streams["noise"], n, params.sigma_n2)
    interference = _cn(streams["noise"], n, params.sigma_s2) if params.sigma_s2 > 0 else np.zeros(n, complex)
    p_t = np.where(detected, powers.p_tb, powers.p_ti)
    y = np.sqrt(p_t) * h + noise + np.where(pu_busy, interference, 0.0)
    return h, y


def _estimate(kind, y, detected, powers, sensing, params):
    hhat = np.empty_like(y)
    for det in (True, False):
        m = detected == det
        if not np.any(m):
            continue
        p_t = powers.pilot(det)
        if kind is EstimatorKind.MISMATCHED:
            hhat[m] = mismatched_coefficient(p_t, det, params) * y[m]
        elif kind is EstimatorKind.LINEAR:
            hhat[m] = linear_mmse_coefficient(p_t, det, sensing_priors(det, sensing, params), params) * y[m]
        else:
            hhat[m] = true_mmse_estimate(y[m], p_t, det, sensing_priors(det, sensing, params), params)
    return hhat


def simulate_frames(
    n_frames,
    seed,
    params: SystemParams,
    rates: RatePolicy,
    powers: PowerPolicy,
    sensing,
    kind=EstimatorKind.MISMATCHED,
    prepass_samples=10**6,
) -> Trajectory:
    """Simulate ``n_frames`` frames; identical seeds give identical runs."""
    if n_frames < 1:
        raise DomainError("n_frames must be at least 1")
    kind = EstimatorKind.parse(kind)
    streams = spawn_streams(seed)
    tp = pilot_and_data_powers(powers, params)
    true_stats = None
    if kind is EstimatorKind.TRUE:
        true_stats = true_mmse_prepass(tp, sensing, params, n_samples=prepass_samples, seed=[seed, 1])
    stats = scenario_stats(kind, tp, sensing, params, true_stats=true_stats)

    pu_busy = primary_user_chain(n_frames, params, streams["pu"])
    u = streams["sensing"].random(n_frames)
    detected = np.where(pu_busy, u < sensing.p_d, u < sensing.p_f)
    scenario = (1 + 2 * (~pu_busy) + (~detected)).astype(np.int8)
    _, y = _observe(n_frames, pu_busy, detected, tp, params, streams)
    hhat = _estimate(kind, y, detected, tp, sensing, params)

    hhat_var = np.array([np.nan] + [stats[s].sigma_hhat2 for s in (1, 2, 3, 4)])[scenario]
    htilde_var = np.array([np.nan] + [stats[s].sigma_htilde2 for s in (1, 2, 3, 4)])[scenario]
    p_data = np.where(detected, tp.p_db, tp.p_di)
    noise = params.sigma_n2 + np.where(pu_busy, params.sigma_s2, 0.0)
    r = np.where(detected, rates.r1, rates.r2)
    h2 = np.abs(hhat) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        z = h2 / hhat_var
        snr_eff = p_data * h2 / (p_data * htilde_var + noise)
    # r < ((T-N)B-1)/T * log2(1 + snr_eff)  <=>  gap(r) < snr_eff
    on = rate_gap(r, params) < snr_eff
    service = np.where(on, params.T * r, 0.0)
    return Trajectory(
        pu_busy=pu_busy,
        detected_busy=detected,
        scenario=scenario,
        z=z,
        on=on,
        service_bits=service,
        T=params.T,
        B=params.B,
        rates=rates,
        powers=powers,
        approximate=kind is EstimatorKind.TRUE,
        meta={"seed": seed, "kind": kind.value},
    )


@dataclass(frozen=True)
class EmpiricalEffCap:
    value: float
    stderr: float
    n_blocks: int
    block_len: int


def _log_mean_exp(x):
    m = np.max(x)
    return m + math.log(np.mean(np.exp(x - m)))


def empirical_effective_capacity(traj, theta, T, B, block_len=100, min_blocks=200, min_frames=10**4):
    """Batch-means estimate of -Lambda(-theta)/(theta T B) with a jackknife error.

    Non-overlapping blocks of ``block_len`` frames; log E exp(-theta S) of a
    block, divided by its length, estimates the per-frame log-MGF. Blocks
    must be long compared with the memory of the service process.
    """
    s = np.asarray(traj.service_bits if hasattr(traj, "service_bits") else traj, dtype=float)
    if not theta > 0:
        raise DomainError("theta must be positive")
    if block_len < 1:
        raise DomainError("block_len must be positive")
    n_blocks = len(s) // block_len
    if len(s) < min_frames or n_blocks < min_blocks:
        raise InsufficientDataError(
            f"need >= {min_frames} frames and >= {min_blocks} blocks, got {len(s)} frames / {n_blocks} blocks"
        )
    blocks = s[: n_blocks * block_len].reshape(n_blocks, block_len).sum(axis=1)
    x = -theta * blocks
    scale = theta * T * B * block_len

    value = -_log_mean_exp(x) / scale
    m = np.max(x)
    w = np.exp(x - m)
    total = w.sum()
    loo_sum = np.maximum(total - w, np.finfo(float).tiny)
    loo = -(m + np.log(loo_sum / (n_blocks - 1))) / scale
    se = math.sqrt((n_blocks - 1) / n_blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return EmpiricalEffCap(value=float(value), stderr=se, n_blocks=n_blocks, block_len=block_len)


@dataclass(frozen=True)
class QueueTrace:
    arrival_rate: float
    queue_samples: np.ndarray = field(repr=False)
    tail_estimates: tuple


@dataclass(frozen=True)
class QueueTailFit:
    decay_rate: float
    trace: QueueTrace
    empty: bool = False


def queue_lengths(service_bits, arrival_bits):
    """Lindley recursion Q_{k+1} = max(0, Q_k + arrival - service_k) from an empty queue."""
    drift = np.cumsum(arrival_bits - np.asarray(service_bits, dtype=float))
    walk = np.concatenate([[0.0], drift])
    return (walk - np.minimum.accumulate(walk))[1:]


def queue_tail_exponent(traj, arrival_rate, params: SystemParams, p_lo=1e-4, p_hi=1e-1, n_points=40):
    """Fit the exponential decay rate of Pr{Q >= q} for a constant-rate source.

    ``arrival_rate`` is in bits/s; the queue is fed T*arrival_rate bits per
    frame. The fit uses q values whose empirical tail lies in [p_lo, p_hi].
    """
    s = np.asarray(traj.service_bits, dtype=float)
    per_frame = params.T * arrival_rate
    if arrival_rate < 0:
        raise DomainError("arrival rate must be non-negative")
    if per_frame > s.mean():
        raise DivergenceError("arrival rate exceeds the mean service rate; queue is unstable")
    q = queue_lengths(s, per_frame)
    q_hi = float(np.quantile(q, 1.0 - p_lo))
    q_lo = float(np.quantile(q, 1.0 - p_hi))
    if not q_hi > q_lo:
        return QueueTailFit(decay_rate=math.nan, trace=QueueTrace(arrival_rate, q, ()), empty=True)
    grid = np.linspace(q_lo, q_hi, n_points)
    qs = np.sort(q)
    tail = 1.0 - np.searchsorted(qs, grid, side="left") / len(qs)
    keep = (tail >= p_lo) & (tail <= p_hi) & (tail > 0)
    if keep.sum() < 3:
        return QueueTailFit(decay_rate=math.nan, trace=QueueTrace(arrival_rate, q, ()), empty=True)
    slope = np.polyfit(grid[keep], np.log(tail[keep]), 1)[0]
    pairs = tuple((float(g), float(math.log(t))) for g, t in zip(grid, tail) if t > 0)
    return QueueTailFit(decay_rate=float(-slope), trace=QueueTrace(arrival_rate, q, pairs))


def interference_audit(traj: Trajectory, mean_gain, seed=0):
    """Average interference power at the primary receiver over busy frames.

    |h_sp|^2 is drawn exponential with mean ``mean_gain``. Returns (mean, stderr).
    """
    rng = np.random.default_rng(seed)
    busy = traj.pu_busy
    gains = rng.exponential(mean_gain, size=int(busy.sum()))
    power = np.where(traj.detected_busy[busy], traj.powers.p1_bar, traj.powers.p2_bar)
    x = power * gains
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def estimator_mse(n, seed, powers: PowerPolicy, sensing, params: SystemParams):
    """Per-branch mean squared error of the three estimators on common draws.

    Returns {kind: {"busy": (mse, se), "idle": (mse, se), "all": (mse, se)}}
    plus paired-difference errors under the key ``"diff"``.
    """
    streams = spawn_streams(seed)
    tp = pilot_and_data_powers(powers, params)
    pu_busy = streams["pu"].random(n) < params.p_busy
    u = streams["sensing"].random(n)
    detected = np.where(pu_busy, u < sensing.p_d, u < sensing.p_f)
    h, y = _observe(n, pu_busy, detected, tp, params, streams)
    err = {k: np.abs(h - _estimate(k, y, detected, tp, sensing, params)) ** 2 for k in EstimatorKind}

    def summary(x):
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))

    out = {}
    for k, e in err.items():
        out[k] = {"busy": summary(e[detected]), "idle": summary(e[~detected]), "all": summary(e)}
    out["diff"] = {
        ("true", "linear"): summary(err[EstimatorKind.TRUE] - err[EstimatorKind.LINEAR]),
        ("linear", "mismatched"): summary(err[EstimatorKind.LINEAR] - err[EstimatorKind.MISMATCHED]),
        ("linear", "mismatched", "busy"): summary((err[EstimatorKind.LINEAR] - err[EstimatorKind.MISMATCHED])[detected]),
        ("linear", "mismatched", "idle"): summary((err[EstimatorKind.LINEAR] - err[EstimatorKind.MISMATCHED])[~detected]),
    }
    return out


def scenario_frequencies(traj: Trajectory):
    counts = np.bincount(traj.scenario, minlength=5)[1:]
    return counts / len(traj)


def expected_scenario_frequencies(sensing, params: SystemParams):
    pb, pi = params.p_busy, params.p_idle
    return np.array([pb * sensing.p_d, pb * (1 - sensing.p_d), pi * sensing.p_f, pi * (1 - sensing.p_f)])


__all__ = [
    "FrameRecord",
    "Trajectory",
    "SCENARIOS",
    "simulate_frames",
    "empirical_effective_capacity",
    "queue_tail_exponent",
    "interference_audit",
    "estimator_mse",
]
