"""Constrained maximization of effective capacity over (r1, r2, P1, P2).

The search is deterministic: a coarse grid over the feasible power region
(including its outer edge) crossed with log-spaced rates, then cyclic
golden-section refinement of each coordinate. One extra coordinate slides
along the average-interference edge, since plain coordinate moves stall
once that constraint is active.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .effcap import effcap_kernel, effcap_scalar
from .errors import DomainError, InfeasibleError, UnsupportedCombinationError
from .estimation import sensing_priors
from .params import EstimatorKind, SystemParams, lin_to_db
from .sensing import SensingOperatingPoint, operating_point_from_pd

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizationProblem:
    params: SystemParams
    sensing: SensingOperatingPoint
    p_avg: float
    p_peak: float
    kind: EstimatorKind = EstimatorKind.MISMATCHED
    eta: float = 0.1
    r_max: float | None = None
    power_points: int = 17
    rate_points: int = 40
    rate_tol: float = 1e-3
    power_tol: float = 1e-4
    max_cycles: int = 60

    def __post_init__(self):
        object.__setattr__(self, "kind", EstimatorKind.parse(self.kind))
        if self.power_points < 8 or self.rate_points < 8:
            raise DomainError("grid resolution must be at least 8 points per axis")
        if not (math.isfinite(self.p_peak) and self.p_peak > 0):
            raise DomainError("p_peak must be positive and finite")
        if not math.isfinite(self.p_avg):
            raise DomainError("p_avg must be finite")
        if self.r_max is not None and not (math.isfinite(self.r_max) and self.r_max > 0):
            raise DomainError("r_max must be positive and finite")
        if not 0 < self.eta < 1:
            raise DomainError("eta must lie in (0, 1)")


@dataclass(frozen=True)
class Optimum:
    r1_star: float
    r2_star: float
    p1_star: float
    p2_star: float
    eff_cap: float
    constraint_slack: tuple
    coarse_eff_cap: float = field(default=math.nan, compare=False)


class _Objective:
    """Effective capacity as a function of (r1, r2, P1, P2) for one problem."""

    def __init__(self, problem: OptimizationProblem):
        if problem.kind is EstimatorKind.TRUE:
            raise UnsupportedCombinationError("the optimizer needs closed-form estimator statistics")
        self.pr = problem
        params = problem.params
        s = problem.sensing
        self.priors = {}
        if problem.kind is EstimatorKind.LINEAR:
            self.priors = {det: sensing_priors(det, s, params) for det in (True, False)}

    def branch_snrs(self, p_bar, detected_busy):
        """(SNR if truly busy, SNR if truly idle) for the given sensing decision."""
        pr, prm = self.pr, self.pr.params
        p_bar = np.asarray(p_bar, dtype=float)
        energy = prm.frame_energy(p_bar)
        p_t = pr.eta * energy
        p_data = (energy - p_t) / prm.data_symbols
        sh, sn, ss = prm.sigma_h2, prm.sigma_n2, prm.sigma_s2
        ph = p_t * sh
        if pr.kind is EstimatorKind.MISMATCHED:
            denom = ph + sn + (ss if detected_busy else 0.0)
        else:
            q = self.priors[detected_busy]
            denom = q.p_noise_only * (ph + sn) + q.p_noise_plus_signal * (ph + sn + ss)
        k = np.sqrt(p_t) * sh / denom
        out = []
        for truly_busy in (True, False):
            extra = ss if truly_busy else 0.0
            hhat = k * k * (ph + sn + extra)
            htilde = np.maximum((1.0 - 2.0 * k * np.sqrt(p_t)) * sh + hhat, 0.0)
            out.append(p_data * hhat / (p_data * htilde + sn + extra))
        return out

    def snrs(self, p1, p2):
        s1, s3 = self.branch_snrs(p1, True)
        s2, s4 = self.branch_snrs(p2, False)
        return s1, s2, s3, s4

    def _branch_scalar(self, p_bar, detected_busy):
        pr, prm = self.pr, self.pr.params
        energy = prm.frame_energy(p_bar)
        p_t = pr.eta * energy
        p_data = (energy - p_t) / prm.data_symbols
        sh, sn, ss = prm.sigma_h2, prm.sigma_n2, prm.sigma_s2
        ph = p_t * sh
        if pr.kind is EstimatorKind.MISMATCHED:
            denom = ph + sn + (ss if detected_busy else 0.0)
        else:
            q = self.priors[detected_busy]
            denom = q.p_noise_only * (ph + sn) + q.p_noise_plus_signal * (ph + sn + ss)
        k = math.sqrt(p_t) * sh / denom
        out = []
        for extra in (ss, 0.0):
            hhat = k * k * (ph + sn + extra)
            htilde = max((1.0 - 2.0 * k * math.sqrt(p_t)) * sh + hhat, 0.0)
            out.append(p_data * hhat / (p_data * htilde + sn + extra))
        return out

    def __call__(self, r1, r2, p1, p2):
        s = self.pr.sensing
        s1, s3 = self._branch_scalar(float(p1), True)
        s2, s4 = self._branch_scalar(float(p2), False)
        return effcap_scalar(self.pr.params.theta, float(r1), float(r2), (s1, s2, s3, s4), s.p_d, s.p_f, self.pr.params)


def _p1_cap(pr, p2):
    pd = pr.sensing.p_d
    if pd <= 0:
        return pr.p_peak
    return min(pr.p_peak, (pr.p_avg - (1.0 - pd) * p2) / pd)


def _p2_cap(pr, p1):
    pd = pr.sensing.p_d
    if pd >= 1:
        return pr.p_peak
    return min(pr.p_peak, (pr.p_avg - pd * p1) / (1.0 - pd))


def _power_axis(hi, n):
    """Uniform nodes plus log-spaced nodes toward zero, where small-power optima hide."""
    if hi <= 0:
        return np.zeros(1)
    return np.unique(np.concatenate([np.linspace(0.0, hi, n), np.geomspace(hi * 1e-2, hi, n)]))


def _power_candidates(pr: OptimizationProblem):
    """Feasible (P1, P2) nodes: axis grid plus the outer edge, sorted lexicographically."""
    n = pr.power_points
    p1_hi = max(_p1_cap(pr, 0.0), 0.0)
    p2_hi = max(_p2_cap(pr, 0.0), 0.0)
    g1 = _power_axis(p1_hi, n)
    g2 = _power_axis(p2_hi, n)
    pts = set()
    for x in g1:
        for y in g2:
            if pr.sensing.p_d * x + (1 - pr.sensing.p_d) * y <= pr.p_avg * (1 + 1e-12) + 1e-15:
                pts.add((float(x), float(y)))
        cap = _p2_cap(pr, x)
        if cap >= 0:
            pts.add((float(x), float(cap)))
    for y in g2:
        cap = _p1_cap(pr, y)
        if cap >= 0:
            pts.add((float(cap), float(y)))
    return sorted(pts)


def default_r_max(pr: OptimizationProblem, obj: _Objective):
    """Rate beyond which even the best scenario is almost surely OFF."""
    best = max(float(np.max(v)) for v in obj.snrs(pr.p_peak, pr.p_peak))
    if best <= 0:
        return 1.0
    prm = pr.params
    return prm.data_symbols / prm.T * math.log2(1.0 + 40.0 * best)


def _golden_max(f, lo, hi, tol):
    """Maximize a (presumed unimodal) f on [lo, hi]; returns (x, f(x)) of the best point seen."""
    best_x, best_v = lo, f(lo)
    v_hi = f(hi)
    if v_hi > best_v:
        best_x, best_v = hi, v_hi
    if hi - lo <= tol:
        return best_x, best_v
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    for x, v in ((c, fc), (d, fd)):
        if v > best_v or (v == best_v and x < best_x):
            best_x, best_v = x, v
    return best_x, best_v


def _coarse(pr: OptimizationProblem, obj: _Objective, r_max):
    """Evaluate the coarse grid; returns the start points for refinement.

    Besides the overall best node, the best node with the busy branch active
    (P1 > 0 and r1 > 0) and the best with the idle branch active are kept:
    from a corner where a branch is switched off, moving its power or its
    rate alone never helps, so coordinate search cannot leave it.
    """
    nodes = _power_candidates(pr)
    if not nodes:
        raise InfeasibleError("no feasible power allocation")
    p1 = np.array([n[0] for n in nodes])
    p2 = np.array([n[1] for n in nodes])
    rg = np.concatenate([[0.0], np.geomspace(r_max * 1e-4, r_max, pr.rate_points - 1)])
    snrs = [s[:, None, None] for s in obj.snrs(p1, p2)]
    s = pr.sensing
    vals = effcap_kernel(pr.params.theta, rg[None, :, None], rg[None, None, :], snrs, s.p_d, s.p_f, pr.params)

    def pick(mask):
        masked = np.where(mask, vals, -np.inf)
        idx = int(np.argmax(masked))
        if not np.isfinite(masked.flat[idx]):
            return None
        i, j, k = np.unravel_index(idx, vals.shape)
        return [float(rg[j]), float(rg[k]), float(p1[i]), float(p2[i])], float(vals.flat[idx])

    busy_on = (p1[:, None, None] > 0) & (rg[None, :, None] > 0)
    idle_on = (p2[:, None, None] > 0) & (rg[None, None, :] > 0)
    starts = []
    for mask in (np.ones_like(vals, dtype=bool), busy_on, idle_on):
        got = pick(mask)
        if got is not None and all(got[0] != x for x, _ in starts):
            starts.append(got)
    return starts, rg


def optimize(problem: OptimizationProblem) -> Optimum:
    pr = problem
    if pr.p_avg <= 0:
        raise InfeasibleError("average power cap must be positive")
    obj = _Objective(pr)
    r_max = pr.r_max if pr.r_max is not None else default_r_max(pr, obj)
    starts, rg = _coarse(pr, obj, r_max)
    coarse = starts[0][1]
    x, fx = None, -math.inf
    for x0, f0 in starts:
        xr, fr = _refine(pr, obj, list(x0), f0, rg, r_max)
        if fr > fx:
            x, fx = xr, fr
    # a branch with zero power or zero rate carries no bits; report it as (0, 0)
    for r_i, p_i in ((0, 2), (1, 3)):
        if x[r_i] == 0.0 or x[p_i] == 0.0:
            x[r_i] = x[p_i] = 0.0
    fx = obj(*x)
    pd = pr.sensing.p_d
    slack = (pr.p_peak - x[2], pr.p_peak - x[3], pr.p_avg - (pd * x[2] + (1 - pd) * x[3]))
    return Optimum(
        r1_star=float(x[0]),
        r2_star=float(x[1]),
        p1_star=float(x[2]),
        p2_star=float(x[3]),
        eff_cap=float(fx),
        constraint_slack=slack,
        coarse_eff_cap=coarse,
    )


def _refine(pr: OptimizationProblem, obj: _Objective, x, fx, rg, r_max):
    """Cyclic golden-section refinement from ``x``; returns the improved (x, f)."""
    pd = pr.sensing.p_d
    ratio = rg[-1] / rg[-2]
    dp1 = max(_p1_cap(pr, 0.0), 0.0) / (pr.power_points - 1)
    dp2 = max(_p2_cap(pr, 0.0), 0.0) / (pr.power_points - 1)
    widths = [None, None, dp1, dp2, max(dp1, dp2)]
    tols = [pr.rate_tol, pr.rate_tol, pr.power_tol, pr.power_tol, pr.power_tol]
    rate_floor = r_max * 1e-4

    def f(v):
        return obj(v[0], v[1], v[2], v[3])

    for _ in range(pr.max_cycles):
        improved = False
        for c in range(5):
            if c < 2:
                r = x[c]
                w = widths[c] if widths[c] is not None else max(r * (ratio - 1.0), rate_floor)
                lo, hi = max(0.0, r - w), r + w

                def g(t, c=c):
                    y = list(x)
                    y[c] = t
                    return f(y)

            elif c == 2:
                lo, hi = max(0.0, x[2] - widths[2]), min(_p1_cap(pr, x[3]), x[2] + widths[2])

                def g(t):
                    return f([x[0], x[1], t, x[3]])

            elif c == 3:
                lo, hi = max(0.0, x[3] - widths[3]), min(_p2_cap(pr, x[2]), x[3] + widths[3])

                def g(t):
                    return f([x[0], x[1], x[2], t])

            else:
                # slide along P_d*P1 + (1-P_d)*P2 = p_avg
                if not (0.0 < pd < 1.0) or pr.p_avg - (pd * x[2] + (1 - pd) * x[3]) > 1e-9:
                    continue
                slope = pd / (1.0 - pd)
                t_lo = max(-x[2], (x[3] - pr.p_peak) / slope, -widths[4])
                t_hi = min(pr.p_peak - x[2], x[3] / slope, widths[4])
                lo, hi = t_lo, t_hi
                base = list(x)

                def g(t, base=base, slope=slope):
                    return f([base[0], base[1], base[2] + t, max(base[3] - slope * t, 0.0)])

            if hi <= lo:
                continue
            t, v = _golden_max(g, lo, hi, tols[c])
            if v > fx:
                if c < 4:
                    x[c] = t
                else:
                    x[2], x[3] = x[2] + t, max(x[3] - slope * t, 0.0)
                fx = v
                improved = True
        if not improved:
            shrunk = False
            for c in range(5):
                cur = widths[c] if widths[c] is not None else max(x[c] * (ratio - 1.0), rate_floor)
                if cur > 4 * tols[c]:
                    widths[c] = max(cur / 4.0, 4 * tols[c])
                    shrunk = True
            if not shrunk:
                break

    return x, fx


def objective(problem: OptimizationProblem):
    """The callable effective-capacity objective used by :func:`optimize`."""
    return _Objective(problem)


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _row(opt: Optimum, **extra):
    row = dict(extra)
    row.update(
        eff_cap=opt.eff_cap,
        r1=opt.r1_star,
        r2=opt.r2_star,
        p1_lin=opt.p1_star,
        p2_lin=opt.p2_star,
        p1_db=lin_to_db(opt.p1_star),
        p2_db=lin_to_db(opt.p2_star),
    )
    return row


def _solve_pd(args):
    pd, template = args
    point = operating_point_from_pd(pd, template.params)
    opt = optimize(replace(template, sensing=point))
    return _row(opt, pd=point.p_d, pf=point.p_f)


def sweep_pd(pd_grid, template: OptimizationProblem, workers=None):
    """Optimum per detection probability; the threshold is re-derived at each point."""
    grid = [float(v) for v in pd_grid]
    if any(not 0 < v < 1 for v in grid):
        raise DomainError("P_d grid values must lie in (0, 1)")
    return _map(_solve_pd, [(v, template) for v in grid], workers)


def _solve_eta(args):
    eta, template = args
    opt = optimize(replace(template, eta=eta))
    return _row(opt, eta=eta)


def sweep_eta(eta_grid, template: OptimizationProblem, workers=None):
    """Re-optimize rates and powers for each training fraction at a fixed sensing point.

    Returns (rows, argmax_eta); ties go to the smallest eta.
    """
    grid = [float(v) for v in eta_grid]
    if any(not 0 < v < 1 for v in grid):
        raise DomainError("eta grid values must lie in (0, 1)")
    rows = _map(_solve_eta, [(v, template) for v in grid], workers)
    best = max(range(len(rows)), key=lambda i: (rows[i]["eff_cap"], -i))
    return rows, rows[best]["eta"]


def optimal_eta_vs_pd(pd_grid, template: OptimizationProblem, eta_grid, workers=None):
    out = []
    for pd in pd_grid:
        point = operating_point_from_pd(float(pd), template.params)
        rows, eta_star = sweep_eta(eta_grid, replace(template, sensing=point), workers=workers)
        best = next(r for r in rows if r["eta"] == eta_star)
        out.append({"pd": point.p_d, "pf": point.p_f, "eta_star": eta_star, "eff_cap": best["eff_cap"]})
    return out


def compare_estimators(grid, template: OptimizationProblem, axis="p_avg", workers=None):
    """Optimized effective capacity under mismatched and linear MMSE along one axis.

    ``axis`` is ``"p_avg"`` (grid in linear power) or ``"pd"``.
    """
    if axis not in ("p_avg", "pd"):
        raise DomainError("axis must be 'p_avg' or 'pd'")
    out = []
    for x in grid:
        x = float(x)
        base = template
        row = {}
        if axis == "p_avg":
            base = replace(template, p_avg=x)
            row.update(p_avg_lin=x, p_avg_db=lin_to_db(x))
        else:
            point = operating_point_from_pd(x, template.params)
            base = replace(template, sensing=point)
            row.update(pd=point.p_d, pf=point.p_f)
        for kind in (EstimatorKind.MISMATCHED, EstimatorKind.LINEAR):
            row[f"eff_cap_{kind.value}"] = optimize(replace(base, kind=kind)).eff_cap
        out.append(row)
    return out


def p_avg_from_interference(i_avg, mean_gain):
    """Average power cap that keeps the mean interference at the primary below i_avg."""
    if not mean_gain > 0:
        raise DomainError("mean channel gain to the primary receiver must be positive")
    if not i_avg > 0:
        raise DomainError("interference cap must be positive")
    return i_avg / mean_gain
