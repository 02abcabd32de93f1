"""Effective capacity of the eight-state Markov-modulated service process."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalConsistencyError
from .params import PowerPolicy, RatePolicy, SystemParams
from .statemodel import TransitionModel, build_transition_model, rate_gap

_SERVICE_SLOTS = np.array([1, 0, 2, 0, 1, 0, 2, 0])


@dataclass(frozen=True)
class EffCapResult:
    value: float
    sp: float
    rates_used: RatePolicy
    powers_used: PowerPolicy
    theta: float
    approximate: bool = False


def state_bits(rates: RatePolicy, T):
    """Bits delivered per frame in each of the eight states."""
    r = np.array([0.0, rates.r1, rates.r2])
    return T * r[_SERVICE_SLOTS]


def mgf_diagonal(theta, T, rates: RatePolicy):
    """Per-state moment generating functions of the frame service, at ``theta``."""
    return np.exp(theta * state_bits(rates, T))


def _rank2_blocks(phi, p_b, p_i):
    m11 = phi[:4] @ p_b[:4]
    m12 = phi[4:] @ p_b[4:]
    m21 = phi[:4] @ p_i[:4]
    m22 = phi[4:] @ p_i[4:]
    return m11, m12, m21, m22


def _rank2_root(m11, m12, m21, m22):
    d = m11 - m22
    rad = d * d + 4.0 * m12 * m21
    if rad < 0:
        if rad < -1e-12:
            raise NumericalConsistencyError(f"negative radicand {rad!r} in rank-2 spectral radius")
        rad = 0.0
    return 0.5 * (m11 + m22) + 0.5 * math.sqrt(rad)


def spectral_radius_closed(theta, rows: TransitionModel, rates: RatePolicy, T):
    """Spectral radius of diag(mgf) @ R from the 2x2 reduction of the rank-2 matrix.

    The nonzero eigenvalues of ``phi R`` are those of the 2x2 matrix of
    busy/idle block sums, whence the quadratic-root expression.
    """
    phi = mgf_diagonal(theta, T, rates)
    return _rank2_root(*_rank2_blocks(phi, rows.p_b, rows.p_i))


def _decay_gap(beta, gamma, d_b1, d_b2, d_i1, d_i2, disc_sqrt):
    """1 - sp for a row-stochastic rank-2 model with phi <= 1.

    Each block sum is its row mass minus a non-negative deficit
    d = sum p_k (1 - phi_k). Writing sp = 1 - s turns the characteristic
    quadratic into s^2 - (2 - tr) s + f = 0 whose small root is evaluated in
    the cancellation-free form 2f / ((2 - tr) + sqrt(disc)). This keeps full
    relative accuracy when sp is within machine epsilon of 1.
    """
    f = beta * (d_i1 + d_i2) + gamma * (d_b1 + d_b2) + (d_b1 * d_i2 - d_b2 * d_i1)
    two_minus_tr = beta + gamma + d_b1 + d_i2
    return 2.0 * f / (two_minus_tr + disc_sqrt)


def log_spectral_radius(theta, rows: TransitionModel, rates: RatePolicy, T):
    """log of :func:`spectral_radius_closed`, safe against exponent underflow
    and accurate when the radius is close to 1 (theta <= 0)."""
    expo = theta * state_bits(rates, T)
    live = (rows.p_b + rows.p_i) > 0
    if theta <= 0:
        deficit = -np.expm1(expo)
        d_b1, d_b2 = deficit[:4] @ rows.p_b[:4], deficit[4:] @ rows.p_b[4:]
        d_i1, d_i2 = deficit[:4] @ rows.p_i[:4], deficit[4:] @ rows.p_i[4:]
        m11, m12, m21, m22 = _rank2_blocks(np.exp(expo), rows.p_b, rows.p_i)
        rad = max((m11 - m22) ** 2 + 4.0 * m12 * m21, 0.0)
        gap = _decay_gap(rows.p_b[4:].sum(), rows.p_i[:4].sum(), d_b1, d_b2, d_i1, d_i2, math.sqrt(rad))
        if gap < 0.5:
            return math.log1p(-gap)
    shift = float(np.max(expo[live])) if np.any(live) else 0.0
    phi = np.where(live, np.exp(np.where(live, expo - shift, 0.0)), 0.0)
    sp = _rank2_root(*_rank2_blocks(phi, rows.p_b, rows.p_i))
    if sp <= 0:
        return -math.inf
    return math.log(sp) + shift


def effective_capacity(theta, rates: RatePolicy, powers: PowerPolicy, sensing, kind, params: SystemParams, true_stats=None):
    """Normalized effective capacity in bits/s/Hz for fixed rates and powers."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    rows = build_transition_model(rates, powers, sensing, kind, params, true_stats=true_stats)
    value = effective_capacity_from_rows(theta, rows, rates, params)
    sp = spectral_radius_closed(-theta, rows, rates, params.T)
    return EffCapResult(
        value=value, sp=sp, rates_used=rates, powers_used=powers, theta=theta, approximate=true_stats is not None
    )


def effective_capacity_from_rows(theta, rows: TransitionModel, rates: RatePolicy, params: SystemParams):
    log_sp = log_spectral_radius(-theta, rows, rates, params.T)
    return -log_sp / (theta * params.T * params.B)


def stationary_distribution(rows: TransitionModel):
    """Stationary law over the eight states.

    Every busy-origin row equals p_b and every idle-origin row equals p_i, so
    the law is beta*p_b + (1-beta)*p_i where beta is the busy-origin mass
    solving beta = beta*sum(p_b[:4]) + (1-beta)*sum(p_i[:4]).
    """
    sb = rows.p_b[:4].sum()
    si = rows.p_i[:4].sum()
    denom = 1.0 - sb + si
    if denom <= 0:
        raise DomainError("transition rows admit no unique stationary law")
    beta = si / denom
    return beta * rows.p_b + (1.0 - beta) * rows.p_i


def mean_service_rate(rows: TransitionModel, rates: RatePolicy, T, B):
    """Long-run average service in bits/s/Hz (the theta -> 0 limit)."""
    pi = stationary_distribution(rows)
    return float(pi @ state_bits(rates, T)) / (T * B)


def effcap_kernel(theta, r1, r2, snrs, p_d, p_f, params: SystemParams):
    """Vectorized effective capacity over broadcastable rate/SNR arrays.

    ``snrs`` is a 4-sequence of arrays. Used by the optimizer, where the
    scalar path would be too slow; agrees with :func:`effective_capacity`.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    g1 = rate_gap(r1, params)
    g2 = rate_gap(r2, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        on = []
        for snr, g in zip(snrs, (g1, g2, g1, g2)):
            snr = np.asarray(snr, dtype=float)
            alpha = np.where(g == 0.0, 0.0, np.where(snr > 0, g / np.where(snr > 0, snr, 1.0), np.inf))
            on.append(np.exp(-alpha))
    a, b = params.a, params.b
    y1 = -np.expm1(-theta * params.T * r1)
    y2 = -np.expm1(-theta * params.T * r2)
    # per-half deficits 1 - sum(phi * p) / mass, split by destination half
    u_b = p_d * on[0] * y1 + (1.0 - p_d) * on[1] * y2
    u_i = p_f * on[2] * y1 + (1.0 - p_f) * on[3] * y2
    m11, m12 = (1.0 - a) * (1.0 - u_b), a * (1.0 - u_i)
    m21, m22 = b * (1.0 - u_b), (1.0 - b) * (1.0 - u_i)
    d = m11 - m22
    root = np.sqrt(np.maximum(d * d + 4.0 * m12 * m21, 0.0))
    gap = _decay_gap(a, b, (1.0 - a) * u_b, a * u_i, b * u_b, (1.0 - b) * u_i, root)
    sp = 0.5 * (m11 + m22) + 0.5 * root
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sp = np.where(gap < 0.5, np.log1p(-np.minimum(gap, 0.5)), np.log(sp))
    return -log_sp / (theta * params.T * params.B)


def effcap_scalar(theta, r1, r2, snrs, p_d, p_f, params: SystemParams):
    """Scalar twin of :func:`effcap_kernel` without array overhead (optimizer inner loop)."""
    m = params.data_symbols
    g1 = 2.0 ** (r1 * params.T / m) - 1.0
    g2 = 2.0 ** (r2 * params.T / m) - 1.0
    on = []
    for snr, g in zip(snrs, (g1, g2, g1, g2)):
        if g == 0.0:
            on.append(1.0)
        elif snr > 0.0:
            on.append(math.exp(-g / snr))
        else:
            on.append(0.0)
    y1 = -math.expm1(-theta * params.T * r1)
    y2 = -math.expm1(-theta * params.T * r2)
    u_b = p_d * on[0] * y1 + (1.0 - p_d) * on[1] * y2
    u_i = p_f * on[2] * y1 + (1.0 - p_f) * on[3] * y2
    a, b = params.a, params.b
    m11, m12 = (1.0 - a) * (1.0 - u_b), a * (1.0 - u_i)
    m21, m22 = b * (1.0 - u_b), (1.0 - b) * (1.0 - u_i)
    d = m11 - m22
    root = math.sqrt(max(d * d + 4.0 * m12 * m21, 0.0))
    gap = _decay_gap(a, b, (1.0 - a) * u_b, a * u_i, b * u_b, (1.0 - b) * u_i, root)
    if gap < 0.5:
        return -math.log1p(-gap) / (theta * params.T * params.B)
    sp = 0.5 * (m11 + m22) + 0.5 * root
    if sp <= 0.0:
        return math.inf
    return -math.log(sp) / (theta * params.T * params.B)
