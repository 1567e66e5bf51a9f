"""Solvers for the per-coordinate exponent equations.

The random exponent of a coordinate for a uniform draw ``r`` is the root
``lam >= 0`` of::

    sum_j p_j / ((1 - r) * p_{j*}**lam + r) = 1

or ``inf`` when the left side never reaches one.  ``r = 0`` gives the greedy
exponent.  Exponents are plain floats; ``math.inf`` marks an unusable
coordinate and orders after every finite value.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .model import CoordinateDistribution, DataModel, ModelArrays

DEFAULT_TOL = 1e-10
MAX_DOUBLINGS = 1023
BISECTION_STEPS = 80


class NumericalError(ArithmeticError):
    """A solver failed to certify its answer."""


class UnusableCoordinateWarning(UserWarning):
    """A coordinate has no agreement mass and can never be used."""


class SparsityWarning(UserWarning):
    """Parameters fall outside the sparse asymptotic regime."""


def _imp_lhs(diag: np.ndarray, log_marg: np.ndarray, r: np.ndarray, lam: np.ndarray) -> np.ndarray:
    powered = np.exp(lam[:, None] * log_marg)
    denom = (1.0 - r)[:, None] * powered + r[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(diag > 0, diag / denom, 0.0)
    return terms.sum(axis=1)


def solve_exponents(diag: np.ndarray, marg: np.ndarray, r, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorized random-exponent solver over rows of ``diag``/``marg``.

    Bisection with initial bracket ``[0, 1]``; the upper end is doubled until
    the left side exceeds one.  Rows whose left side stays below one as
    ``lam -> inf`` get ``inf``.  Every finite root is certified to satisfy the
    equation within ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    diag = np.atleast_2d(np.asarray(diag, dtype=float))
    marg = np.atleast_2d(np.asarray(marg, dtype=float))
    m = diag.shape[0]
    r = np.broadcast_to(np.asarray(r, dtype=float), (m,)).copy()
    if ((r < 0) | (r >= 1)).any():
        raise ValueError("r must lie in [0, 1)")
    with np.errstate(divide="ignore"):
        log_marg = np.where(marg > 0, np.log(marg), -np.inf)
    log_marg = np.where(diag > 0, log_marg, 0.0)

    total = diag.sum(axis=1)
    shrinking = diag * (log_marg < 0)
    shrink_mass = shrinking.sum(axis=1)
    fixed_mass = total - shrink_mass
    with np.errstate(divide="ignore", invalid="ignore"):
        limit = np.where(shrink_mass > 0, np.where(r > 0, shrink_mass / r, np.inf), 0.0) + fixed_mass
    at_zero = total >= 1.0
    finite = at_zero | (limit > 1.0)

    lam = np.full(m, np.inf)
    lam[at_zero] = 0.0
    work = np.flatnonzero(finite & ~at_zero)
    if work.size == 0:
        return lam
    dg, lm, rr = diag[work], log_marg[work], r[work]
    lo = np.zeros(work.size)
    hi = np.ones(work.size)
    below = _imp_lhs(dg, lm, rr, hi) < 1.0
    for _ in range(MAX_DOUBLINGS):
        if not below.any():
            break
        lo[below] = hi[below]
        hi[below] *= 2.0
        below[below] = _imp_lhs(dg[below], lm[below], rr[below], hi[below]) < 1.0
    stuck = below
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        up = _imp_lhs(dg, lm, rr, mid) < 1.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    root = 0.5 * (lo + hi)
    root[stuck] = np.inf
    resid = np.abs(_imp_lhs(dg, lm, rr, np.where(stuck, 0.0, root)) - 1.0)
    bad = (~stuck) & (resid > tol)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"exponent residual {resid[k]:.3e} exceeds tol {tol:.1e}")
    lam[work] = root
    return lam


def random_exponent(coord: CoordinateDistribution, r: float, tol: float = DEFAULT_TOL) -> float:
    """Random exponent of ``coord`` for the uniform draw ``r`` in ``(0, 1)``."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    return float(solve_exponents([coord.diag], [coord.x0_marginal], r, tol)[0])


def random_exponents(model: DataModel | ModelArrays, r, coords=None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Random exponents of the model's coordinates (or of the subset ``coords``)."""
    arr = model.arrays if isinstance(model, DataModel) else model
    if coords is None:
        return solve_exponents(arr.diag, arr.marg, r, tol)
    coords = np.asarray(coords, dtype=np.int64)
    return solve_exponents(arr.diag[coords], arr.marg[coords], r, tol)


def bernoulli_exponent(p: float, r: float) -> float:
    """Closed form ``-log2(max((p - r) / (1 - r), 0))`` for marginally Bernoulli(1/2) bits."""
    if not 0.5 < p < 1.0:
        raise ValueError(f"p must lie in (1/2, 1), got {p}")
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    if p <= r:
        return math.inf
    return -math.log2((p - r) / (1.0 - r))


def greedy_exponent(coord: CoordinateDistribution, tol: float = DEFAULT_TOL) -> float:
    """Root of ``sum_j p_j * p_{j*}**(-lam) = 1``, the ``r -> 0`` limit of the random exponent."""
    if coord.agreement_mass == 0.0:
        warnings.warn("coordinate has no agreement mass; exponent is infinite", UnusableCoordinateWarning, stacklevel=2)
        return math.inf
    return float(solve_exponents([coord.diag], [coord.x0_marginal], 0.0, tol)[0])


def greedy_exponents(model: DataModel | ModelArrays, tol: float = DEFAULT_TOL) -> np.ndarray:
    arr = model.arrays if isinstance(model, DataModel) else model
    return solve_exponents(arr.diag, arr.marg, 0.0, tol)


def _sparse_params(coord: CoordinateDistribution) -> tuple[float, float, float]:
    if coord.alphabet_size != 2:
        raise ValueError("sparse exponents need a binary coordinate")
    p11 = coord.diag[1]
    p1 = coord.x0_marginal[1]
    if p1 >= 1.0:
        raise ValueError("sparse exponents need P(x=1) < 1")
    return p11, coord.disagreement_mass, p1


def sparse_exponent(
    coord: CoordinateDistribution, r: float, mode: str = "conservative", delta: float = 0.1
) -> float:
    """Approximate random exponent of a rare binary feature.

    ``asymptotic``: ``ln(1 - 1/((1-r)(1 + p11/(p01+p10)))) / ln p_{1*}``.
    ``conservative``: ``1 / ((1-r) * p11/(p01+p10) * ln(1/p_{1*}))``.
    """
    p11, noise, p1 = _sparse_params(coord)
    if p11 < delta * noise:
        warnings.warn(
            f"p11={p11:g} < {delta:g}*(p01+p10); outside the sparse regime", SparsityWarning, stacklevel=2
        )
    if mode == "asymptotic":
        ratio = math.inf if noise == 0 else p11 / noise
        arg = 1.0 - 1.0 / ((1.0 - r) * (1.0 + ratio))
        if arg <= 0.0:
            return math.inf
        return math.log(arg) / math.log(p1)
    if mode == "conservative":
        return float(conservative_exponents(np.array([p11]), np.array([noise]), np.array([p1]), r)[0])
    raise ValueError(f"unknown sparse exponent mode {mode!r}")


def conservative_exponents(p11, noise, p1, r) -> np.ndarray:
    """Vectorized conservative sparse exponent; ``inf`` where no agreement on 1 is possible."""
    p11, noise, p1, r = (np.asarray(v, dtype=float) for v in (p11, noise, p1, r))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = (1.0 - r) * (p11 / noise) * np.log(1.0 / p1)
        lam = np.where(noise == 0, np.where(p11 > 0, 0.0, np.inf), 1.0 / inv)
    return np.where(np.isnan(lam), np.inf, lam)
