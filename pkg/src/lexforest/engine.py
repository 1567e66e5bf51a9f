"""Search algorithms: randomized lexicographic forests, classic bucketing, greedy trained orders.

One try sorts every point of ``X0`` and ``X1`` lexicographically, visiting
coordinates in ascending order of their per-try random exponent, and compares
each ``X1`` point with the ``a`` nearest ``X0`` points on either side of it in
the merged order.  Dense datasets are sorted with packed integer keys that are
refined chunk by chunk until every point has a distinct rank.  Sparse datasets
are sorted as words over the exponent ranks of their present features.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .exponents import conservative_exponents, greedy_exponents, solve_exponents
from .information import cutoff_exponent, plan_tries
from .model import DataModel, Dataset, ModelError, estimate_model

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KEY_BITS = 62
DEFAULT_WINDOW = 4
MAX_BRUTE_PAIRS = 10**9


class SearchError(ValueError):
    """A search was requested with inconsistent inputs."""


# ---------------------------------------------------------------------------
# Per-try randomness
# ---------------------------------------------------------------------------


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hash_uniform(seed: int, t: int, ids, salt: int = 0) -> np.ndarray:
    """Stateless uniform draws in the open interval (0, 1) keyed by ``(seed, t, id)``."""
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN * np.uint64(salt + 1))
        base = _mix64(base + _GOLDEN * np.uint64(t & 0xFFFFFFFFFFFFFFFF))
        z = _mix64(base + _GOLDEN * (ids + np.uint64(1)))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) / float(1 << 53)


@dataclass(frozen=True, eq=False)
class TryPlan:
    """Randomness of one try.

    ``coords`` lists the coordinate (or feature) ids the plan covers; ``r`` and
    ``lambdas`` are aligned with it.  ``order`` holds the coordinate ids with a
    finite exponent, ascending in exponent with ties broken by id.
    """

    t: int
    coords: np.ndarray
    r: np.ndarray
    lambdas: np.ndarray
    order: np.ndarray
    master_seed: int = 0

    @property
    def usable_count(self) -> int:
        return int(self.order.size)


def _exponents(model: DataModel, coords: np.ndarray, r: np.ndarray, mode: str) -> np.ndarray:
    arr = model.arrays
    if mode == "exact":
        return solve_exponents(arr.diag[coords], arr.marg[coords], r)
    if mode == "conservative":
        if not model.is_binary:
            raise SearchError("conservative exponents need binary coordinates")
        p11 = arr.diag[coords, 1]
        noise = arr.disagreement[coords]
        p1 = arr.marg[coords, 1]
        return conservative_exponents(p11, noise, p1, r)
    raise SearchError(f"unknown exponent mode {mode!r}")


def make_try_plan(
    model: DataModel, master_seed: int, t: int, coords=None, exponent_mode: str = "exact"
) -> TryPlan:
    """Draw ``r_i = hash(master_seed, t, i)`` and sort the coordinates by their random exponents."""
    coords = np.arange(model.d, dtype=np.int64) if coords is None else np.asarray(coords, dtype=np.int64)
    if coords.size and (coords.min() < 0 or coords.max() >= model.d):
        raise SearchError("coordinate id outside the model")
    r = hash_uniform(master_seed, t, coords)
    lam = _exponents(model, coords, r, exponent_mode)
    finite = np.isfinite(lam)
    keep = coords[finite]
    order = keep[np.lexsort((keep, lam[finite]))]
    return TryPlan(t=t, coords=coords, r=r, lambdas=lam, order=order, master_seed=master_seed)


def fixed_plan(order: Sequence[int], t: int = 0) -> TryPlan:
    """A plan that just follows ``order``; used for trained orders and hand-made examples."""
    order = np.asarray(order, dtype=np.int64)
    ranks = np.arange(order.size, dtype=float)
    return TryPlan(t=t, coords=order, r=np.full(order.size, np.nan), lambdas=ranks, order=order)


# ---------------------------------------------------------------------------
# Configuration and reports
# ---------------------------------------------------------------------------


@dataclass
class SearchConfig:
    window: int = DEFAULT_WINDOW
    tries: int | str = 1
    master_seed: int = 0
    score_floor: float = -math.inf
    stop_on_planted: bool = False
    collect_candidates: bool = True
    score: bool = True
    value_order: str = "canonical"  # or "random": per-try hashed value permutation
    exponent_mode: str = "exact"  # sparse path may use "conservative"
    swap_roles: bool = False
    max_tries: int = 1_000_000
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if int(self.window) < 1:
            raise SearchError("window must be at least 1")
        if isinstance(self.tries, str):
            if self.tries != "auto":
                raise SearchError(f"tries must be an integer or 'auto', got {self.tries!r}")
        elif int(self.tries) < 0:
            raise SearchError("tries must be nonnegative")
        if self.value_order not in ("canonical", "random"):
            raise SearchError(f"unknown value order {self.value_order!r}")
        if (self.epsilon is None) != (self.delta is None):
            raise SearchError("epsilon and delta must be given together")


@dataclass(frozen=True)
class Candidate:
    x0_index: int
    x1_index: int
    score: float
    first_try_seen: int


@dataclass(frozen=True)
class TryStats:
    comparisons: int
    prefix_length: int
    unresolved: int  # points still tied with a neighbour after the whole key


@dataclass
class SearchReport:
    tries_executed: int = 0
    total_comparisons: int = 0
    candidates: list[Candidate] = field(default_factory=list)
    success: bool = False
    first_success_try: int | None = None
    per_try: list[TryStats] = field(default_factory=list)
    learned_orders: list[list[int]] | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["candidates"] = [asdict(c) for c in self.candidates]
        out["per_try"] = [asdict(s) for s in self.per_try]
        return out

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, default=_json_default)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def write_candidates_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x0_index", "x1_index", "score", "first_try_seen"])
            for c in self.candidates:
                writer.writerow([c.x0_index, c.x1_index, repr(c.score), c.first_try_seen])


def _json_default(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value)!r}")


@dataclass
class TryResult:
    x0_index: np.ndarray
    x1_index: np.ndarray
    comparisons: int
    prefix_length: int
    unresolved: int
    planted_hit: bool | None


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def _weights(model: DataModel) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log(model.arrays.marg)


class AgreementScorer:
    """Counts agreeing coordinates."""

    def score_pairs(self, dataset: Dataset, i0, i1) -> np.ndarray:
        i0, i1 = np.asarray(i0, dtype=np.int64), np.asarray(i1, dtype=np.int64)
        if dataset.sparse:
            out = np.empty(i0.size)
            for k, (a, b) in enumerate(zip(i0, i1)):
                s0, s1 = set(dataset.x0[a]), set(dataset.x1[b])
                out[k] = dataset.d - len(s0 ^ s1)
            return out
        return (dataset.x0[i0] == dataset.x1[i1]).sum(axis=1).astype(float)


class RarityScorer:
    """Sums ``ln(1/p_{v*})`` over coordinates where both points take the value ``v``."""

    def __init__(self, model: DataModel):
        self.weights = _weights(model)
        if model.is_binary:
            self.w0 = self.weights[:, 0]
            self.w1 = self.weights[:, 1]
            self.total0 = float(self.w0.sum())

    def score_pairs(self, dataset: Dataset, i0, i1) -> np.ndarray:
        i0, i1 = np.asarray(i0, dtype=np.int64), np.asarray(i1, dtype=np.int64)
        if dataset.sparse:
            out = np.empty(i0.size)
            for k, (a, b) in enumerate(zip(i0, i1)):
                s0, s1 = set(dataset.x0[a]), set(dataset.x1[b])
                shared = list(s0 & s1)
                union = list(s0 | s1)
                out[k] = self.total0 + self.w1[shared].sum() - self.w0[union].sum()
            return out
        out = np.zeros(i0.size)
        step = max(1, (1 << 22) // max(1, dataset.d))
        cols = np.arange(dataset.d)
        for s in range(0, i0.size, step):
            v0 = dataset.x0[i0[s : s + step]].astype(np.int64)
            v1 = dataset.x1[i1[s : s + step]].astype(np.int64)
            w = self.weights[cols, v0]
            out[s : s + step] = np.where(v0 == v1, w, 0.0).sum(axis=1)
        return out


# ---------------------------------------------------------------------------
# One try
# ---------------------------------------------------------------------------


def _refine_ranks(rank: np.ndarray, key: np.ndarray) -> np.ndarray:
    idx = np.lexsort((key, rank))
    r_sorted, k_sorted = rank[idx], key[idx]
    change = np.empty(idx.size, dtype=bool)
    change[0] = False
    change[1:] = (r_sorted[1:] != r_sorted[:-1]) | (k_sorted[1:] != k_sorted[:-1])
    new = np.empty(idx.size, dtype=np.int64)
    new[idx] = np.cumsum(change)
    return new


def _value_permutation(plan: TryPlan, coord: int, size: int) -> np.ndarray:
    """Per-try random ranking of the values of one coordinate."""
    ids = np.uint64(coord) * np.uint64(1 << 16) + np.arange(size, dtype=np.uint64)
    draws = hash_uniform(plan.master_seed, plan.t, ids, salt=1)
    perm = np.empty(size, dtype=np.int64)
    perm[np.argsort(draws, kind="stable")] = np.arange(size)
    return perm


def _dense_ranks(dataset: Dataset, plan: TryPlan, value_order: str) -> tuple[np.ndarray, int]:
    """Rank of every merged point (X0 first, then X1) under the try's lexicographic key."""
    n = dataset.n0 + dataset.n1
    rank = np.zeros(n, dtype=np.int64)
    order = plan.order
    widths = np.array([max(1, int(dataset.alphabet[c] - 1).bit_length()) for c in order], dtype=np.int64)
    pos = 0
    while pos < order.size and (n == 0 or rank.max() < n - 1):
        used = np.cumsum(widths[pos:])
        stop = pos + max(1, int(np.searchsorted(used, _KEY_BITS, side="right")))
        cols = order[pos:stop]
        block = np.concatenate([dataset.x0[:, cols], dataset.x1[:, cols]]).astype(np.uint64)
        if value_order == "random":
            for k, c in enumerate(cols):
                perm = _value_permutation(plan, int(c), int(dataset.alphabet[c]))
                block[:, k] = perm[block[:, k].astype(np.int64)].astype(np.uint64)
        key = np.zeros(n, dtype=np.uint64)
        for k in range(cols.size):
            key = (key << np.uint64(widths[pos + k])) | block[:, k]
        rank = _refine_ranks(rank, key)
        pos = stop
    return rank, pos


def _sparse_ranks(dataset: Dataset, plan: TryPlan) -> tuple[np.ndarray, int]:
    # Dense order puts 0 before 1, so at the first differing feature the point
    # holding the later-ranked feature sorts first: keys are negated ranks.
    rank_of = {int(f): k for k, f in enumerate(plan.order)}
    keys = []
    longest = 0
    for side, points in enumerate((dataset.x0, dataset.x1)):
        for idx, feats in enumerate(points):
            word = sorted(rank_of[f] for f in feats if f in rank_of)
            longest = max(longest, len(word))
            keys.append((tuple(-k for k in word), side, idx))
    order = sorted(range(len(keys)), key=keys.__getitem__)
    rank = np.empty(len(keys), dtype=np.int64)
    run = 0
    for pos, k in enumerate(order):
        if pos and keys[k][0] != keys[order[pos - 1]][0]:
            run += 1
        rank[k] = run
    return rank, longest


def _window_pairs(rank: np.ndarray, n0: int, n1: int, a: int):
    # Ties keep X0 before X1 and lower indices first.
    merged = np.lexsort((np.arange(n0 + n1), rank))
    is_x0 = merged < n0
    x0_sorted = merged[is_x0]
    kb = np.cumsum(is_x0)[~is_x0]  # X0 points preceding each X1 point
    x1_ids = merged[~is_x0] - n0
    offsets = np.arange(-a, a)
    cols = kb[:, None] + offsets[None, :]
    valid = (cols >= 0) & (cols < n0)
    i0 = x0_sorted[cols[valid]]
    i1 = np.broadcast_to(x1_ids[:, None], cols.shape)[valid]
    unresolved = int(np.count_nonzero(np.diff(np.sort(rank)) == 0))
    x0_pos = np.empty(n0, dtype=np.int64)
    x0_pos[x0_sorted] = np.arange(n0)
    x1_kb = np.empty(n1, dtype=np.int64)
    x1_kb[x1_ids] = kb
    return i0, i1, x0_pos, x1_kb, unresolved


def run_try(dataset: Dataset, plan: TryPlan, config: SearchConfig | None = None) -> TryResult:
    """Sort both sets by the plan's key and compare each X1 point with its ``2a`` nearest X0 points."""
    config = config or SearchConfig()
    if dataset.n0 == 0 or dataset.n1 == 0:
        raise SearchError("both point sets must be nonempty")
    a = int(config.window)
    if dataset.sparse:
        if config.value_order != "canonical":
            raise SearchError("sparse sorting supports only the canonical value order")
        rank, prefix = _sparse_ranks(dataset, plan)
    else:
        rank, prefix = _dense_ranks(dataset, plan, config.value_order)
    i0, i1, x0_pos, x1_kb, unresolved = _window_pairs(rank, dataset.n0, dataset.n1, a)
    comparisons = int(i0.size)
    assert comparisons <= 2 * a * dataset.n1, "comparison budget exceeded"
    hit = None
    if dataset.planted is not None:
        p0, p1 = dataset.planted
        gap = x0_pos[p0] - x1_kb[p1]
        hit = bool(-a <= gap < a)
    return TryResult(i0, i1, comparisons, prefix, unresolved, hit)


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------


def resolve_tries(config: SearchConfig, model: DataModel | None, n0: int) -> int:
    if config.tries != "auto":
        return int(config.tries)
    if model is None:
        raise SearchError("an automatic try budget needs a model")
    if config.epsilon is not None:
        planned = plan_tries(model, n0, config.window, config.epsilon, config.delta)
        tries = planned.tries
    else:
        _, ln_t = cutoff_exponent(model, n0)
        tries = math.ceil(math.exp(min(ln_t, 700.0)))
    return int(min(max(tries, 1), config.max_tries))


class _Collector:
    def __init__(self, dataset: Dataset, config: SearchConfig, scorer):
        self.dataset = dataset
        self.config = config
        self.scorer = scorer
        self.report = SearchReport()
        self.seen: dict[tuple[int, int], Candidate] = {}

    def add(self, t: int, result: TryResult, flip: bool) -> bool:
        rep = self.report
        rep.tries_executed += 1
        rep.total_comparisons += result.comparisons
        rep.per_try.append(TryStats(result.comparisons, result.prefix_length, result.unresolved))
        if result.planted_hit and not rep.success:
            rep.success = True
            rep.first_success_try = t + 1
        if self.config.collect_candidates and result.x0_index.size:
            i0, i1 = (result.x1_index, result.x0_index) if flip else (result.x0_index, result.x1_index)
            pairs = np.unique(np.stack([i0, i1], axis=1), axis=0)
            fresh = [(int(u), int(v)) for u, v in pairs if (int(u), int(v)) not in self.seen]
            if fresh:
                arr = np.array(fresh, dtype=np.int64)
                if self.config.score and self.scorer is not None:
                    scores = self.scorer.score_pairs(self.dataset, arr[:, 0], arr[:, 1])
                else:
                    scores = np.full(arr.shape[0], math.nan)
                for (u, v), s in zip(fresh, scores):
                    self.seen[(u, v)] = Candidate(u, v, float(s), t)
        return rep.success and self.config.stop_on_planted

    def finish(self) -> SearchReport:
        floor = self.config.score_floor
        cands = sorted(self.seen.values(), key=lambda c: (c.x0_index, c.x1_index))
        if floor > -math.inf:
            cands = [c for c in cands if c.score >= floor]
        self.report.candidates = cands
        return self.report


def _oriented(dataset: Dataset, model: DataModel | None, config: SearchConfig):
    if config.swap_roles:
        return dataset.swapped(), (model.swapped() if model is not None else None)
    return dataset, model


def _scorer(model: DataModel | None, config: SearchConfig):
    if not config.score:
        return None
    return RarityScorer(model) if model is not None else AgreementScorer()


def search(dataset: Dataset, model: DataModel | None, config: SearchConfig) -> SearchReport:
    """Run ``T`` randomized lexicographic tries; sparse datasets go through the sparse path."""
    if dataset.sparse:
        return sparse_search(dataset, model, config)
    tries = resolve_tries(config, model, dataset.n0)
    if model is None:
        raise SearchError("the forest search needs a model for its exponents")
    if model.d != dataset.d:
        raise SearchError(f"model has {model.d} coordinates, dataset has {dataset.d}")
    work, wmodel = _oriented(dataset, model, config)
    col = _Collector(dataset, config, _scorer(model, config))
    for t in range(tries):
        plan = make_try_plan(wmodel, config.master_seed, t)
        if col.add(t, run_try(work, plan, config), config.swap_roles):
            break
    return col.finish()


def sparse_search(dataset: Dataset, model: DataModel, config: SearchConfig) -> SearchReport:
    """Lexicographic forest over feature sets; only features present in the data are hashed."""
    if not dataset.sparse:
        dataset = dataset.to_sparse()
    if model is None or not model.is_binary:
        raise SearchError("sparse search needs a model with binary coordinates")
    present = sorted({f for pts in (dataset.x0, dataset.x1) for p in pts for f in p})
    if present and present[-1] >= model.d:
        raise SearchError(f"feature id {present[-1]} outside the model")
    tries = resolve_tries(config, model, dataset.n0)
    work, wmodel = _oriented(dataset, model, config)
    col = _Collector(dataset, config, _scorer(model, config))
    for t in range(tries):
        plan = make_try_plan(wmodel, config.master_seed, t, coords=present, exponent_mode=config.exponent_mode)
        if col.add(t, run_try(work, plan, config), config.swap_roles):
            break
    return col.finish()


def classic_search(dataset: Dataset, p: float | None, k: int, config: SearchConfig) -> SearchReport:
    """Bucket on ``k`` random coordinates per try and compare every X0 x X1 pair sharing a bucket.

    ``p`` is the agreement probability of the homogeneous model; it is used only
    for the automatic try budget.
    """
    if dataset.sparse:
        dataset = dataset.to_dense()
    if not 0 <= k <= dataset.d:
        raise SearchError(f"k={k} must lie in [0, d={dataset.d}]")
    if config.tries == "auto":
        if p is None:
            raise SearchError("an automatic classic budget needs p")
        from .information import classic_expected_tries

        tries = min(config.max_tries, max(1, math.ceil(classic_expected_tries(p, dataset.d, dataset.n0, k))))
    else:
        tries = int(config.tries)
    n0, n1 = dataset.n0, dataset.n1
    col = _Collector(dataset, config, AgreementScorer() if config.score else None)
    for t in range(tries):
        rng = np.random.default_rng([config.master_seed & 0xFFFFFFFFFFFFFFFF, t])
        cols = np.sort(rng.choice(dataset.d, size=k, replace=False))
        plan = fixed_plan(cols, t)
        rank, prefix = _dense_ranks(dataset, plan, "canonical") if k else (np.zeros(n0 + n1, np.int64), 0)
        r0, r1 = rank[:n0], rank[n0:]
        o0 = np.argsort(r0, kind="stable")
        s0 = r0[o0]
        lo = np.searchsorted(s0, r1, side="left")
        hi = np.searchsorted(s0, r1, side="right")
        counts = hi - lo
        comparisons = int(counts.sum())
        hit = None
        if dataset.planted is not None:
            hit = bool(r0[dataset.planted[0]] == r1[dataset.planted[1]])
        if config.collect_candidates and comparisons:
            i1 = np.repeat(np.arange(n1), counts)
            starts = np.repeat(lo, counts)
            within = np.arange(comparisons) - np.repeat(np.cumsum(counts) - counts, counts)
            i0 = o0[starts + within]
        else:
            i0 = i1 = np.empty(0, dtype=np.int64)
        result = TryResult(i0, i1, comparisons, prefix, 0, hit)
        if col.add(t, result, False):
            break
    return col.finish()


def _dense_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, Dataset):
        return np.asarray(pairs.x0), np.asarray(pairs.x1)
    if isinstance(pairs, tuple) and len(pairs) == 2 and not np.isscalar(pairs[0]):
        t0, t1 = np.asarray(pairs[0]), np.asarray(pairs[1])
        if t0.ndim == 2:
            return t0, t1
    pairs = list(pairs)
    if not pairs:
        raise SearchError("training pairs must be nonempty")
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def learn_greedy_orders(
    train, window: int = DEFAULT_WINDOW, smoothing: float = 1.0, max_rounds: int = 64, alphabet_sizes=None
) -> tuple[list[np.ndarray], int, int]:
    """Learn the sequence of coordinate orders of the greedy trained algorithm.

    Each round estimates the model from the remaining pairs, sorts coordinates
    by ascending greedy exponent, runs one try over the training pairs, and
    drops the pairs that were compared.  Rounds stop once at most a third of
    the pairs remain, when a round separates nothing, or after ``max_rounds``.
    Returns ``(orders, remaining, initial)``.
    """
    t0, t1 = _dense_pairs(train)
    if t0.shape[0] == 0:
        raise SearchError("training pairs must be nonempty")
    if alphabet_sizes is None:
        alphabet_sizes = np.maximum(t0.max(axis=0), t1.max(axis=0)).astype(int) + 1
        alphabet_sizes = np.maximum(alphabet_sizes, 2)
    n = t0.shape[0]
    target = math.ceil(n / 3)
    alive = np.arange(n)
    orders: list[np.ndarray] = []
    while alive.size > target and len(orders) < max_rounds:
        est = estimate_model((t0[alive], t1[alive]), smoothing, alphabet_sizes)
        lam = greedy_exponents(est)
        finite = np.flatnonzero(np.isfinite(lam))
        if finite.size == 0:
            break
        order = finite[np.lexsort((finite, lam[finite]))]
        sub = Dataset(t0[alive], t1[alive], t0.shape[1], tuple(int(b) for b in alphabet_sizes))
        res = run_try(sub, fixed_plan(order), SearchConfig(window=window, score=False))
        found = res.x0_index[res.x0_index == res.x1_index]
        if found.size == 0:
            break
        orders.append(order)
        alive = np.delete(alive, np.unique(found))
    return orders, int(alive.size), n


def greedy_trained_search(train, dataset: Dataset, config: SearchConfig, smoothing: float = 1.0, max_rounds: int = 64) -> SearchReport:
    """Apply the learned greedy orders to ``dataset``, one order per try (cycled when tries exceed them)."""
    if dataset.sparse:
        dataset = dataset.to_dense()
    orders, _, _ = learn_greedy_orders(train, config.window, smoothing, max_rounds, dataset.alphabet)
    if not orders:
        raise SearchError("training never separated any pair; estimates are degenerate")
    tries = len(orders) if config.tries == "auto" else int(config.tries)
    col = _Collector(dataset, config, AgreementScorer() if config.score else None)
    for t in range(tries):
        plan = fixed_plan(orders[t % len(orders)], t)
        if col.add(t, run_try(dataset, plan, config), False):
            break
    report = col.finish()
    report.learned_orders = [o.tolist() for o in orders]
    return report


@dataclass(frozen=True)
class BruteForceResult:
    x0_index: int
    x1_index: int
    score: float


def brute_force(dataset: Dataset, scorer=None, max_pairs: int = MAX_BRUTE_PAIRS) -> BruteForceResult:
    """Exact best pair under ``scorer``; ties go to the lowest ``(x0, x1)`` index pair."""
    n0, n1 = dataset.n0, dataset.n1
    if n0 == 0 or n1 == 0:
        raise SearchError("both point sets must be nonempty")
    if n0 * n1 > max_pairs:
        raise SearchError(f"{n0}*{n1} pairs exceed the brute-force guard {max_pairs}")
    scorer = scorer or AgreementScorer()
    best = (-math.inf, 0, 0)
    all1 = np.arange(n1)
    for i in range(n0):
        scores = scorer.score_pairs(dataset, np.full(n1, i), all1)
        j = int(np.argmax(scores))
        if scores[j] > best[0]:
            best = (float(scores[j]), i, j)
    return BruteForceResult(best[1], best[2], best[0])


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def projection(points: np.ndarray, plan: TryPlan, model: DataModel) -> np.ndarray:
    """Map points into ``[0, 1]`` so that numeric order equals the try's lexicographic order.

    Each coordinate contributes the marginal mass of the smaller values,
    scaled by the marginal mass of the prefix.  Floating point only; sorting
    never uses it.
    """
    points = np.atleast_2d(np.asarray(points))
    marg = model.arrays.marg
    cum = np.cumsum(marg, axis=1) - marg
    out = np.zeros(points.shape[0])
    scale = np.ones(points.shape[0])
    for c in plan.order:
        v = points[:, c].astype(np.int64)
        out += scale * cum[c, v]
        scale = scale * marg[c, v]
    return out


def projection_uniformity(dataset: Dataset, plan: TryPlan, model: DataModel) -> float:
    """Kolmogorov-Smirnov distance of the X0 projections from the uniform law."""
    x0 = dataset.to_dense().x0 if dataset.sparse else dataset.x0
    return float(stats.kstest(projection(x0, plan, model), "uniform").statistic)
