"""Performance theory: bucketing-forest information, cutoff exponent, bounds and planner.

All logarithms are natural.  Per-coordinate quantities are computed on the
distinct coordinate rows of a model and summed with multiplicities, so a
homogeneous model costs the same as a single coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .exponents import NumericalError, solve_exponents
from .model import CoordinateDistribution, DataModel, ModelArrays

R_STEPS = 90
LAMBDA_STEPS = 90
MAX_DOUBLINGS = 200


class NotEnoughInformation(ArithmeticError):
    """The coordinates cannot separate ``n0`` points: the try count is unbounded."""


class BoundResult(NamedTuple):
    value: float
    vacuous: bool


@dataclass(frozen=True)
class ForestInfoResult:
    f_value: float
    r_star: float
    q: tuple[float, ...]
    duality_gap: float


@dataclass
class PlannerResult:
    lam: float
    r: np.ndarray
    epsilon: float
    delta: float
    big_n: float
    ln_tries: float
    e_u: float
    e_v: float
    e_w: float
    var_u: float
    var_v: float
    conditions_ok: tuple[bool, bool, bool]
    degenerate: bool = False
    residual: float = 0.0
    thresholds: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    @property
    def tries(self) -> int:
        return max(1, math.ceil(math.exp(min(self.ln_tries, 700.0))))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "N": self.big_n,
            "ln_tries": self.ln_tries,
            "tries": self.tries,
            "E_U": self.e_u,
            "E_V": self.e_v,
            "E_W": self.e_w,
            "Var_U": self.var_u,
            "Var_V": self.var_v,
            "conditions_ok": list(self.conditions_ok),
            "thresholds": list(self.thresholds),
            "degenerate": self.degenerate,
            "residual": self.residual,
            "r": [float(v) for v in self.r],
        }


# ---------------------------------------------------------------------------
# per-coordinate profile at a given lambda
# ---------------------------------------------------------------------------


@dataclass
class _Profile:
    r: np.ndarray  # optimal r per row
    f: np.ndarray  # F(P, lam)
    e_v: np.ndarray  # dF/dlam = sum_j p_j r ln(1/p_j*) / D_j
    var_u: np.ndarray  # V(P, lam): variance of ln(p/q) under p
    var_v: np.ndarray
    e_w: np.ndarray
    q: np.ndarray  # (m, bmax + 1), last column is the disagreement outcome


def _profile(arr: ModelArrays, lam: float) -> _Profile:
    diag, marg, pb = arr.diag, arr.marg, arr.disagreement
    m = diag.shape[0]
    log_m = np.log(marg)
    s = np.exp(lam * log_m)
    live = diag > 0
    with np.errstate(divide="ignore", over="ignore"):
        at_zero = np.where(live, diag / s, 0.0).sum(axis=1)

    def excess(r):
        denom = (1.0 - r)[:, None] * s + r[:, None]
        return np.where(live, diag / denom, 0.0).sum(axis=1) - 1.0

    r = np.zeros(m)
    active = at_zero > 1.0
    full = active & (pb <= 0.0)
    r[full] = 1.0
    solve = active & ~full
    if solve.any():
        lo = np.zeros(m)
        hi = np.ones(m)
        for _ in range(R_STEPS):
            mid = 0.5 * (lo + hi)
            pos = excess(mid) > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        r[solve] = (0.5 * (lo + hi))[solve]

    denom = (1.0 - r)[:, None] * s + r[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        u_agree = np.where(live, np.log(denom) - lam * log_m, 0.0)
        u_dis = np.where(pb > 0, np.log1p(-r), 0.0)
        v_agree = np.where(live, r[:, None] * (-log_m) / denom, 0.0)
        w_agree = np.where(live, r[:, None] * (1.0 - r)[:, None] * log_m**2 / denom**2, 0.0)
    f = (diag * u_agree).sum(axis=1) + pb * u_dis
    f = np.where(r > 0, np.maximum(f, 0.0), 0.0)
    var_u = (diag * u_agree**2).sum(axis=1) + pb * u_dis**2 - f**2
    var_u = np.where(r > 0, np.maximum(var_u, 0.0), 0.0)
    e_v = (diag * v_agree).sum(axis=1)
    mean_v = e_v
    var_v = (diag * (v_agree - mean_v[:, None]) ** 2 * live).sum(axis=1)
    e_w = (diag * w_agree).sum(axis=1)

    q = np.zeros((m, diag.shape[1] + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        q[:, :-1] = np.where(live, diag * s / denom, 0.0)
        q_b = np.where(r < 1.0, pb / (1.0 - r), 1.0 - q[:, :-1].sum(axis=1))
    q[:, -1] = q_b
    return _Profile(r, f, e_v, var_u, var_v, e_w, q)


def _single(coord: CoordinateDistribution) -> ModelArrays:
    return DataModel((coord,)).arrays


def _totals(model: DataModel, lam: float) -> tuple[_Profile, np.ndarray, np.ndarray]:
    sub, counts, inverse = model.compressed
    return _profile(sub, lam), counts, inverse


def _sum_ev(model: DataModel, lam: float) -> float:
    prof, counts, _ = _totals(model, lam)
    return float(counts @ prof.e_v)


def _ev_limit(model: DataModel) -> float:
    """``lim_{lam -> inf}`` of the summed slope: ``sum_i sum_j p_ij ln(1/p_ij*)``."""
    sub, counts, _ = model.compressed
    per = (sub.diag * -np.log(sub.marg)).sum(axis=1)
    return float(counts @ per)


def _solve_slope(model: DataModel, target: float) -> float:
    """Smallest ``lam`` at which the summed slope ``sum_i dF_i/dlam`` reaches ``target``."""
    if target <= 0:
        return 0.0
    if _ev_limit(model) <= target:
        raise NotEnoughInformation(
            f"total coordinate information {_ev_limit(model):.6g} nats cannot reach {target:.6g}"
        )
    lo, hi = 0.0, 1.0
    for _ in range(MAX_DOUBLINGS):
        if _sum_ev(model, hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NotEnoughInformation(f"slope target {target:.6g} not reached for lambda <= {hi:.3g}")
    for _ in range(LAMBDA_STEPS):
        mid = 0.5 * (lo + hi)
        if _sum_ev(model, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# forest information
# ---------------------------------------------------------------------------


def _check_lambda(lam: float) -> None:
    if not lam >= 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")


def forest_information(coord: CoordinateDistribution, lam: float, tol: float = 1e-10) -> ForestInfoResult:
    """Bucketing-forest information ``F(P, lam)`` with its dual certificate.

    ``F`` is the maximum over ``r`` in ``[0, 1]`` of
    ``sum_{j<b} p_j ln(1 - r + r p_{j*}**-lam) + p_b ln(1 - r)``.  The matching
    ``q`` minimizes ``sum_j p_j ln(p_j / q_j)`` over distributions on
    ``{0..b}`` with ``sum_{j<b} q_j p_{j*}**-lam <= 1``; ``duality_gap`` is the
    larger of that objective's distance from ``F`` and the constraint slack
    violations at ``q``.
    """
    _check_lambda(lam)
    arr = _single(coord)
    prof = _profile(arr, lam)
    b = coord.alphabet_size
    r = float(prof.r[0])
    f = float(prof.f[0])
    q = np.concatenate([prof.q[0, :b], prof.q[0, -1:]])
    p = np.concatenate([arr.diag[0, :b], arr.disagreement[:1]])
    live = p > 0
    primal = float(np.sum(p[live] * (np.log(p[live]) - np.log(q[live])))) if np.all(q[live] > 0) else math.inf
    log_ratio = np.log(np.maximum(q[:b], 1e-300)) - lam * np.log(np.asarray(coord.x0_marginal))
    used = np.where(q[:b] > 0, np.exp(log_ratio), 0.0).sum()
    gap = max(abs(primal - f), abs(q.sum() - 1.0), max(0.0, used - 1.0))
    return ForestInfoResult(f, r, tuple(float(v) for v in q), gap)


def forest_information_total(model: DataModel, lam: float) -> float:
    _check_lambda(lam)
    prof, counts, _ = _totals(model, lam)
    return float(counts @ prof.f)


def variance_v(coord: CoordinateDistribution, lam: float) -> float:
    """Variance of ``ln(p_Y / q_Y)`` for ``Y ~ p`` with ``q`` the minimizer behind ``F``."""
    _check_lambda(lam)
    return float(_profile(_single(coord), lam).var_u[0])


def variance_v_total(model: DataModel, lam: float) -> float:
    _check_lambda(lam)
    prof, counts, _ = _totals(model, lam)
    return float(counts @ prof.var_u)


def cutoff_exponent(model: DataModel, n0: float, tol: float = 1e-8) -> tuple[float, float]:
    """Maximize ``lam ln n0 - sum_i F(P_i, lam)`` over ``lam >= 0``.

    The objective is concave and its derivative is ``ln n0`` minus the summed
    slope of ``F``, so the maximizer is found by bisection on the slope.
    Returns ``(lambda_cut, predicted ln T)``.
    """
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    ln_n = math.log(n0)
    if ln_n == 0.0:
        return 0.0, 0.0
    lam = _solve_slope(model, ln_n)
    value = lam * ln_n - forest_information_total(model, lam)
    return lam, value


# ---------------------------------------------------------------------------
# homogeneous closed forms and the classic baseline
# ---------------------------------------------------------------------------


def mutual_information(p: float) -> float:
    """Mutual information (nats) of one marginally Bernoulli(1/2) bit pair."""
    terms = [p * math.log(2 * p) if p > 0 else 0.0, (1 - p) * math.log(2 * (1 - p)) if p < 1 else 0.0]
    return sum(terms)


def information_budget(p: float, d: int, n0: int, n1: int) -> float:
    """``ln M = ln n0 + ln n1 - d I(p)`` for ``d`` marginally Bernoulli(1/2) bits."""
    if not 0.5 < p < 1.0:
        raise ValueError(f"p must lie in (1/2, 1), got {p}")
    return math.log(n0) + math.log(n1) - d * mutual_information(p)


def _log_comb(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def classic_expected_tries(p: float, d: int, n0: int, k: int, mode: str = "typical") -> float:
    """Expected tries of the classic random-``k``-coordinate bucketing.

    ``typical`` conditions on the planted pair agreeing on ``floor(p d)``
    coordinates: ``n0 * prod_{i<k} (d - i) / (2 (floor(pd) - i))``.
    ``tail`` averages the binomial terms over ``j >= floor(p d)``; ``unconditional``
    sums every ``j`` (infinite once ``k > 0``, since ``j < k`` has positive
    probability and can never succeed).
    """
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, d], got {k}")
    agree = math.floor(p * d + 1e-9)
    if mode == "typical":
        if k > agree:
            raise ValueError(f"k={k} exceeds floor(p d)={agree}: bucket unreachable")
        i = np.arange(k)
        return float(n0 * math.exp(np.sum(np.log(d - i) - np.log(2.0 * (agree - i)))))
    if mode not in ("tail", "unconditional"):
        raise ValueError(f"unknown mode {mode!r}")
    start = agree if mode == "tail" else 0
    j = np.arange(start, d + 1)
    if k > 0 and (j < k).any() and p < 1:
        return math.inf
    with np.errstate(divide="ignore"):
        log_pmf = _log_comb(d, j) + j * math.log(p) + (d - j) * (math.log1p(-p) if p < 1 else -np.inf)
    log_terms = log_pmf + _log_comb(d, k) - _log_comb(j, k)
    if mode == "tail":
        log_terms = log_terms - logsumexp(log_pmf)
    return float(n0 * 2.0**-k * np.exp(logsumexp(log_terms)))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _log_tree_factor(model: DataModel, lam: float) -> float:
    """``sum_i max(0, ln sum_{j<b} p_ij p_ij*^-lam)``."""
    sub, counts, _ = model.compressed
    with np.errstate(divide="ignore"):
        log_terms = np.where(sub.diag > 0, np.log(sub.diag) - lam * np.log(sub.marg), -np.inf)
    per = logsumexp(log_terms, axis=1)
    per = np.where(np.isfinite(per), np.maximum(per, 0.0), 0.0)
    return float(counts @ per)


def tree_success_bound(model: DataModel, lam: float, big_n: float) -> BoundResult:
    """Upper bound ``N**-lam prod_i max(1, sum_j p_j p_{j*}**-lam)`` on one tree's success."""
    _check_lambda(lam)
    if big_n < 1:
        raise ValueError("N must be at least 1")
    log_value = -lam * math.log(big_n) + _log_tree_factor(model, lam)
    value = math.exp(min(log_value, 700.0))
    return BoundResult(value, value >= 1.0)


def forest_tries_lower_bound(model: DataModel, lam: float, big_n: float, success: float) -> BoundResult:
    """Lower bound on ``ln T`` for any bucketing forest reaching success ``S``."""
    _check_lambda(lam)
    if not 0.0 < success < 1.0:
        raise ValueError("success must lie in (0, 1)")
    prof, counts, _ = _totals(model, lam)
    f_total = float(counts @ prof.f)
    v_total = float(counts @ prof.var_u)
    value = lam * math.log(big_n) + math.log(success / 2) - math.sqrt(4.0 / success * v_total) - f_total
    return BoundResult(value, value <= 0.0)


def _semilex_n(n0: float, a: float) -> float:
    return max(1.0, 2.0 * n0 / a)


def semilex_success_bound(model: DataModel, lam: float, n0: float, a: float) -> BoundResult:
    """Success bound for a semi-lexicographic tree with random value order, ``0 <= lam <= 1``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("semi-lexicographic bound holds only for 0 <= lambda <= 1")
    big_n = _semilex_n(n0, a)
    log_value = math.log(2.0 * (4.5 + math.log(big_n))) - lam * math.log(big_n) + _log_tree_factor(model, lam)
    value = math.exp(min(log_value, 700.0))
    return BoundResult(value, value >= 1.0)


def semilex_tries_lower_bound(model: DataModel, lam: float, n0: float, a: float, success: float) -> BoundResult:
    """Forest version of the semi-lexicographic bound: a lower bound on ``ln T``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("semi-lexicographic bound holds only for 0 <= lambda <= 1")
    big_n = _semilex_n(n0, a)
    base = forest_tries_lower_bound(model, lam, big_n, success).value
    value = base - math.log(2.0 * math.log(math.exp(4.5) * big_n))
    return BoundResult(value, value <= 0.0)


# ---------------------------------------------------------------------------
# planner
# ---------------------------------------------------------------------------


def plan_tries(
    model: DataModel, n0: float, a: float, epsilon: float, delta: float, tol: float = 1e-8
) -> PlannerResult:
    """Try budget guaranteeing success ``>= 1 - 7 delta`` when the variance conditions hold.

    ``lam`` solves ``E[V] = (1 + eps) ln N`` with ``N = 2 n0 / a`` and every
    ``r_i`` at its per-coordinate optimum; ``ln T = ln(1/delta) +
    (1 + 3 eps) lam ln N - E[U]``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0 / 7.0:
        raise ValueError("delta must lie in (0, 1/7)")
    if a < 1:
        raise ValueError("window a must be at least 1")
    big_n = 2.0 * n0 / a
    d = model.d
    if big_n <= 1.0:
        return PlannerResult(
            0.0, np.zeros(d), epsilon, delta, big_n, math.log(1.0 / delta),
            0.0, 0.0, 0.0, 0.0, 0.0, (True, True, True), degenerate=True,
        )
    ln_n = math.log(big_n)
    target = (1.0 + epsilon) * ln_n
    lam = _solve_slope(model, target)
    prof, counts, inverse = _totals(model, lam)
    e_u = float(counts @ prof.f)
    e_v = float(counts @ prof.e_v)
    e_w = float(counts @ prof.e_w)
    var_u = float(counts @ prof.var_u)
    var_v = float(counts @ prof.var_v)
    residual = abs(e_v - target)
    if residual > tol:
        raise NumericalError(f"planner slope residual {residual:.3e} exceeds tol {tol:.1e}")
    scale = epsilon**2 * delta * ln_n**2
    thresholds = (scale * lam**2, scale / 4.0, scale / 8.0)
    ok = (var_u <= thresholds[0], var_v <= thresholds[1], e_w <= thresholds[2])
    ln_tries = math.log(1.0 / delta) + (1.0 + 3.0 * epsilon) * lam * ln_n - e_u
    return PlannerResult(
        lam, prof.r[inverse].copy(), epsilon, delta, big_n, ln_tries,
        e_u, e_v, e_w, var_u, var_v, ok, residual=residual, thresholds=thresholds,
    )


def imp_residual(coord: CoordinateDistribution, lam: float, r: float) -> float:
    """``|sum_j p_j / ((1-r) p_{j*}**lam + r) - 1|``."""
    total = 0.0
    for pj, mj in zip(coord.diag, coord.x0_marginal):
        if pj > 0:
            total += pj / ((1.0 - r) * mj**lam + r)
    return abs(total - 1.0)


# ---------------------------------------------------------------------------
# dimensionality reduction comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimRedComparison:
    c: float
    ideal_dimred_exp: float
    im_exp: float
    direct_exp_exact: float
    direct_exp_approx: float

    def tries(self, n: float) -> dict[str, float]:
        return {
            "ideal_dimred": n**self.ideal_dimred_exp,
            "im": n**self.im_exp,
            "direct_exact": n**self.direct_exp_exact,
            "direct_approx": n**self.direct_exp_approx,
        }


def dimred_comparison(p01: float, p11: float, p1_star: float, n: float | None = None) -> DimRedComparison:
    """Compare try exponents with and without an ideal dimensionality reduction.

    Symmetric rare features: ``p10 = p01`` and ``p_{1*} = p01 + p11``.  ``n`` is
    accepted for symmetry with the CLI; use :meth:`DimRedComparison.tries`.
    """
    if p01 <= 0:
        raise ValueError("p01 must be positive")
    if abs(p1_star - (p01 + p11)) > 1e-9:
        raise ValueError(f"inconsistent marginal: p1*={p1_star} but p01+p11={p01 + p11}")
    p0_star = 1.0 - p1_star
    c = p0_star * p1_star / p01
    if c <= 1.0:
        raise ValueError(f"c={c:.4g} <= 1: planted pair is not closer than a random pair")
    p00 = 1.0 - p1_star - p01
    exact = float(solve_exponents([[p00, p11]], [[p0_star, p1_star]], 0.0)[0])
    return DimRedComparison(
        c=c,
        ideal_dimred_exp=math.log2(2 * c / (2 * c - 1)),
        im_exp=1.0 / c,
        direct_exp_exact=exact,
        direct_exp_approx=math.log((c + 1) / (c - 1)) / math.log(1.0 / p1_star),
    )
