"""Independent data model, planted-pair instance generation and dataset I/O.

A model is a list of per-coordinate distributions.  Each coordinate carries
the probability that both planted points share value ``j`` (the diagonal of
the joint matrix) together with the marginal of the ``X0`` points, and
optionally the marginal of the ``X1`` points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model parameters or model file."""


class DatasetFormatError(ValueError):
    """Malformed dataset file or dataset contents."""


def _as_prob_vector(values, name: str) -> tuple[float, ...]:
    vec = tuple(float(v) for v in values)
    if any(not math.isfinite(v) or v < 0.0 for v in vec):
        raise ModelError(f"{name} has a negative or non-finite entry: {vec}")
    return vec


@dataclass(frozen=True)
class CoordinateDistribution:
    """Diagonal joint probabilities and marginals of one coordinate.

    ``diag[j]`` is the probability that both planted points take value ``j``;
    ``x0_marginal[j]`` the probability that an ``X0`` point takes value ``j``.
    A marginal entry may be zero only if the matching diagonal entry is zero.
    """

    diag: tuple[float, ...]
    x0_marginal: tuple[float, ...]
    x1_marginal: tuple[float, ...] | None = None

    def __post_init__(self):
        diag = _as_prob_vector(self.diag, "diag")
        x0 = _as_prob_vector(self.x0_marginal, "x0_marginal")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "x0_marginal", x0)
        b = len(diag)
        if b < 2:
            raise ModelError(f"alphabet size must be >= 2, got {b}")
        if len(x0) != b:
            raise ModelError("x0_marginal length differs from diag length")
        if abs(sum(x0) - 1.0) > PROB_TOL:
            raise ModelError(f"x0_marginal sums to {sum(x0)!r}, not 1")
        if sum(diag) > 1.0 + PROB_TOL:
            raise ModelError(f"diag sums to {sum(diag)!r} > 1")
        for j, (pj, mj) in enumerate(zip(diag, x0)):
            if pj > mj + PROB_TOL:
                raise ModelError(f"diag[{j}]={pj} exceeds x0_marginal[{j}]={mj}")
        if self.x1_marginal is not None:
            x1 = _as_prob_vector(self.x1_marginal, "x1_marginal")
            object.__setattr__(self, "x1_marginal", x1)
            if len(x1) != b:
                raise ModelError("x1_marginal length differs from diag length")
            if abs(sum(x1) - 1.0) > PROB_TOL:
                raise ModelError(f"x1_marginal sums to {sum(x1)!r}, not 1")
            for j, (pj, mj) in enumerate(zip(diag, x1)):
                if pj > mj + PROB_TOL:
                    raise ModelError(f"diag[{j}]={pj} exceeds x1_marginal[{j}]={mj}")

    @property
    def alphabet_size(self) -> int:
        return len(self.diag)

    @property
    def disagreement_mass(self) -> float:
        return max(0.0, 1.0 - sum(self.diag))

    @property
    def agreement_mass(self) -> float:
        return sum(self.diag)

    def x1_or_default(self) -> tuple[float, ...]:
        return self.x1_marginal if self.x1_marginal is not None else self.x0_marginal

    @classmethod
    def bernoulli_half(cls, p: float) -> "CoordinateDistribution":
        """Marginally Bernoulli(1/2) bit whose planted copy agrees with probability ``p``."""
        return cls((p / 2, p / 2), (0.5, 0.5), (0.5, 0.5))

    @classmethod
    def from_joint(cls, p00: float, p01: float, p10: float, p11: float) -> "CoordinateDistribution":
        """Binary coordinate from its full 2x2 joint matrix (rows index ``X0``)."""
        total = p00 + p01 + p10 + p11
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"joint matrix sums to {total}, not 1")
        return cls((p00, p11), (p00 + p01, p10 + p11), (p00 + p10, p01 + p11))

    @classmethod
    def sparse(cls, p1: float, p11: float, p01: float, p10: float | None = None) -> "CoordinateDistribution":
        """Rare binary feature with ``P(x0=1) = p1`` and joint entries ``p11, p01, p10``.

        ``p10`` defaults to ``p01``.  The ``X0`` marginal is ``p1 = p10 + p11``
        and the ``X1`` marginal is ``p01 + p11``.
        """
        if p10 is None:
            p10 = p01
        if abs(p1 - (p10 + p11)) > 1e-9:
            raise ModelError(f"inconsistent sparse marginal: p1={p1} but p10+p11={p10 + p11}")
        return cls.from_joint(1.0 - p01 - p10 - p11, p01, p10, p11)


@dataclass(frozen=True)
class ModelArrays:
    """Padded array view of a model for vectorized solvers.

    ``diag`` is padded with zeros and ``marg`` with ones, so padded entries
    contribute nothing to any of the sums used by the exponent equations.
    ``marg`` also replaces zero marginals by one where the diagonal is zero.
    """

    diag: np.ndarray
    marg: np.ndarray
    alphabet: np.ndarray
    disagreement: np.ndarray

    @property
    def d(self) -> int:
        return self.diag.shape[0]


@dataclass(frozen=True)
class DataModel:
    coords: tuple[CoordinateDistribution, ...]
    n0: int = 1
    n1: int = 1

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ModelError("model needs at least one coordinate")
        if int(self.n0) < 1 or int(self.n1) < 1:
            raise ModelError(f"set sizes must be positive, got n0={self.n0}, n1={self.n1}")

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return tuple(c.alphabet_size for c in self.coords)

    @property
    def is_binary(self) -> bool:
        return all(c.alphabet_size == 2 for c in self.coords)

    def with_sizes(self, n0: int, n1: int | None = None) -> "DataModel":
        return replace(self, n0=n0, n1=n0 if n1 is None else n1)

    def swapped(self) -> "DataModel":
        """Model with the roles of ``X0`` and ``X1`` exchanged."""
        coords = tuple(
            CoordinateDistribution(c.diag, c.x1_or_default(), c.x0_marginal) for c in self.coords
        )
        return DataModel(coords, self.n1, self.n0)

    @cached_property
    def arrays(self) -> ModelArrays:
        bmax = max(self.alphabet_sizes)
        d = self.d
        diag = np.zeros((d, bmax))
        marg = np.ones((d, bmax))
        alphabet = np.empty(d, dtype=np.int64)
        for i, c in enumerate(self.coords):
            b = c.alphabet_size
            diag[i, :b] = c.diag
            marg[i, :b] = c.x0_marginal
            alphabet[i] = b
        marg = np.where((diag == 0.0) & (marg == 0.0), 1.0, marg)
        disagreement = np.clip(1.0 - diag.sum(axis=1), 0.0, 1.0)
        for arr in (diag, marg, alphabet, disagreement):
            arr.setflags(write=False)
        return ModelArrays(diag, marg, alphabet, disagreement)

    @cached_property
    def compressed(self) -> tuple[ModelArrays, np.ndarray, np.ndarray]:
        """Distinct coordinate rows, their multiplicities and the row index of each coordinate."""
        arr = self.arrays
        key = np.hstack([arr.diag, arr.marg])
        _, first, inverse, counts = np.unique(key, axis=0, return_index=True, return_inverse=True, return_counts=True)
        sub = ModelArrays(arr.diag[first], arr.marg[first], arr.alphabet[first], arr.disagreement[first])
        return sub, counts, inverse.reshape(-1)

    @classmethod
    def homogeneous(cls, coord: CoordinateDistribution, d: int, n0: int = 1, n1: int | None = None) -> "DataModel":
        return cls((coord,) * d, n0, n0 if n1 is None else n1)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Dataset:
    """Two point sets plus an optional planted pair ``(x0 index, x1 index)``.

    Dense points are rows of integer arrays; sparse points are sorted tuples
    of present feature ids (binary alphabets only).
    """

    x0: np.ndarray | list[tuple[int, ...]]
    x1: np.ndarray | list[tuple[int, ...]]
    d: int
    alphabet: tuple[int, ...] | None = None
    planted: tuple[int, int] | None = None
    sparse: bool = field(default=False)

    def __post_init__(self):
        if self.sparse:
            self.x0 = [tuple(sorted(set(int(f) for f in pt))) for pt in self.x0]
            self.x1 = [tuple(sorted(set(int(f) for f in pt))) for pt in self.x1]
            self.alphabet = (2,) * self.d
            for side in (self.x0, self.x1):
                for pt in side:
                    if pt and (pt[0] < 0 or pt[-1] >= self.d):
                        raise DatasetFormatError(f"feature id out of range [0, {self.d}) in {pt}")
        else:
            self.x0 = np.asarray(self.x0)
            self.x1 = np.asarray(self.x1)
            for name in ("x0", "x1"):
                arr = getattr(self, name)
                if arr.size == 0:
                    arr = arr.reshape(0, self.d)
                if arr.ndim != 2 or arr.shape[1] != self.d:
                    raise DatasetFormatError(f"{name} must have shape (n, {self.d}), got {arr.shape}")
                setattr(self, name, arr.astype(_value_dtype(self.alphabet)))
            if self.alphabet is None:
                hi = 2
                for arr in (self.x0, self.x1):
                    if arr.size:
                        hi = max(hi, int(arr.max()) + 1)
                self.alphabet = (hi,) * self.d
            self.alphabet = tuple(int(b) for b in self.alphabet)
            if len(self.alphabet) != self.d:
                raise DatasetFormatError("alphabet length differs from d")
            limit = np.asarray(self.alphabet)
            for arr in (self.x0, self.x1):
                if arr.size and ((arr < 0).any() or (arr >= limit).any()):
                    raise DatasetFormatError("dense value outside its coordinate alphabet")
        if self.planted is not None:
            i0, i1 = (int(v) for v in self.planted)
            if not (0 <= i0 < self.n0 and 0 <= i1 < self.n1):
                raise DatasetFormatError(f"planted pair {self.planted} out of range")
            self.planted = (i0, i1)

    @property
    def n0(self) -> int:
        return len(self.x0)

    @property
    def n1(self) -> int:
        return len(self.x1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.sparse, self.d, self.alphabet, self.planted) != (
            other.sparse,
            other.d,
            other.alphabet,
            other.planted,
        ):
            return False
        if self.sparse:
            return self.x0 == other.x0 and self.x1 == other.x1
        return np.array_equal(self.x0, other.x0) and np.array_equal(self.x1, other.x1)

    def to_sparse(self) -> "Dataset":
        if self.sparse:
            return self
        if any(b != 2 for b in self.alphabet):
            raise DatasetFormatError("sparse form requires every coordinate to be binary")
        return Dataset(
            [tuple(np.flatnonzero(row)) for row in self.x0],
            [tuple(np.flatnonzero(row)) for row in self.x1],
            self.d,
            planted=self.planted,
            sparse=True,
        )

    def to_dense(self) -> "Dataset":
        if not self.sparse:
            return self

        def densify(points):
            out = np.zeros((len(points), self.d), dtype=np.uint8)
            for k, pt in enumerate(points):
                out[k, list(pt)] = 1
            return out

        return Dataset(densify(self.x0), densify(self.x1), self.d, (2,) * self.d, self.planted)

    def swapped(self) -> "Dataset":
        planted = None if self.planted is None else (self.planted[1], self.planted[0])
        return Dataset(self.x1, self.x0, self.d, self.alphabet, planted, self.sparse)


def _value_dtype(alphabet) -> type:
    if alphabet is not None and max(alphabet) > 255:
        return np.int32
    return np.uint8


# ---------------------------------------------------------------------------
# Generation and estimation
# ---------------------------------------------------------------------------

_GEN_CHUNK = 1 << 20  # values per generation chunk


def _sample_rows(rng: np.random.Generator, cum: np.ndarray, n: int, dtype) -> np.ndarray:
    """Draw ``n`` rows whose coordinate ``i`` follows the CDF row ``cum[i]``."""
    d, bm = cum.shape
    out = np.empty((n, d), dtype=dtype)
    rows = max(1, _GEN_CHUNK // d)
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        u = rng.random((stop - start, d), dtype=np.float32)
        block = np.zeros((stop - start, d), dtype=dtype)
        for j in range(bm - 1):
            block += u >= cum[:, j].astype(np.float32)
        out[start:stop] = block
    return out


def generate_instance(model: DataModel, seed: int, strict: bool = False) -> Dataset:
    """Sample a planted-pair instance from ``model``; a pure function of ``(model, seed)``.

    Non-planted points are i.i.d. from their marginals.  For the planted pair,
    coordinate ``i`` of ``x0`` is drawn from the ``X0`` marginal; ``x1`` copies
    it with probability ``p_j / p_{j*}`` and otherwise draws from the ``X1``
    marginal restricted to the other values.
    """
    n0, n1 = int(model.n0), int(model.n1)
    if n0 < 1 or n1 < 1:
        raise ModelError("n0 and n1 must be positive")
    if strict and any(c.x1_marginal is None for c in model.coords):
        raise ModelError("strict generation requires x1_marginal on every coordinate")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    d = model.d
    bmax = max(model.alphabet_sizes)
    dtype = _value_dtype(model.alphabet_sizes)

    m0 = np.zeros((d, bmax))
    m1 = np.zeros((d, bmax))
    diag = np.zeros((d, bmax))
    for i, c in enumerate(model.coords):
        b = c.alphabet_size
        m0[i, :b] = c.x0_marginal
        m1[i, :b] = c.x1_or_default()
        diag[i, :b] = c.diag
    cum0 = np.cumsum(m0, axis=1)
    cum1 = np.cumsum(m1, axis=1)

    i0 = int(rng.integers(n0))
    i1 = int(rng.integers(n1))
    x0 = _sample_rows(rng, cum0, n0, dtype)
    x1 = _sample_rows(rng, cum1, n1, dtype)

    x1[i1] = _partner(rng, x0[i0], diag, m0, m1, model.alphabet_sizes).astype(dtype)
    return Dataset(x0, x1, d, model.alphabet_sizes, (i0, i1))


def _model_tables(model: DataModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d, bmax = model.d, max(model.alphabet_sizes)
    m0, m1, diag = np.zeros((d, bmax)), np.zeros((d, bmax)), np.zeros((d, bmax))
    for i, c in enumerate(model.coords):
        b = c.alphabet_size
        m0[i, :b] = c.x0_marginal
        m1[i, :b] = c.x1_or_default()
        diag[i, :b] = c.diag
    return diag, m0, m1


def _partner(rng, v0, diag, m0, m1, alphabet_sizes) -> np.ndarray:
    """Planted partner of the row ``v0``: copy each value with probability ``p_j/p_{j*}``."""
    v0 = np.asarray(v0).astype(np.int64)
    d, bmax = m0.shape
    rows = np.arange(d)
    p_keep = np.divide(diag[rows, v0], m0[rows, v0], out=np.zeros(d), where=m0[rows, v0] > 0)
    keep = rng.random(d) < p_keep
    alt_weights = m1.copy()
    alt_weights[rows, v0] = 0.0
    mass = alt_weights.sum(axis=1)
    alphabet = np.asarray(alphabet_sizes)
    # degenerate X1 marginal concentrated on v0: disagree uniformly instead
    uniform = (np.arange(bmax)[None, :] < alphabet[:, None]).astype(float)
    uniform[rows, v0] = 0.0
    alt_weights = np.where((mass > 0)[:, None], alt_weights, uniform)
    alt_cum = np.cumsum(alt_weights / alt_weights.sum(axis=1, keepdims=True), axis=1)
    u = rng.random(d)
    alt = (u[:, None] >= alt_cum[:, :-1]).sum(axis=1)
    return np.where(keep, v0, alt)


def sample_pairs(model: DataModel, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` independent planted pairs as two aligned arrays, e.g. for training."""
    if count < 1:
        raise ModelError("count must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 1]))
    diag, m0, m1 = _model_tables(model)
    dtype = _value_dtype(model.alphabet_sizes)
    t0 = _sample_rows(rng, np.cumsum(m0, axis=1), count, dtype)
    t1 = np.empty_like(t0)
    for k in range(count):
        t1[k] = _partner(rng, t0[k], diag, m0, m1, model.alphabet_sizes)
    return t0, t1


def estimate_model(
    pairs: Sequence[tuple[Sequence[int], Sequence[int]]] | tuple[np.ndarray, np.ndarray],
    smoothing: float = 0.0,
    alphabet_sizes: Sequence[int] | None = None,
) -> DataModel:
    """Estimate a model from known pairs by (smoothed) empirical frequencies.

    ``pairs`` is either a sequence of ``(x0_point, x1_point)`` or a tuple of
    two aligned ``(n, d)`` arrays.  With smoothing ``s``::

        p_{j*} = (count_x0(j) + s) / (n + b s)
        p_j    = min(p_{j*}, (count_both(j) + s p_{j*}) / (n + s))
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        a0, a1 = np.asarray(pairs[0]), np.asarray(pairs[1])
    else:
        pairs = list(pairs)
        if not pairs:
            raise ValueError("estimate_model needs at least one pair")
        try:
            a0 = np.array([np.asarray(p[0]) for p in pairs])
            a1 = np.array([np.asarray(p[1]) for p in pairs])
        except ValueError as exc:
            raise ValueError("inconsistent point dimensions") from exc
    if a0.ndim == 1:
        a0, a1 = a0.reshape(-1, 1), a1.reshape(-1, 1)
    if a0.ndim != 2 or a0.shape != a1.shape:
        raise ValueError(f"inconsistent pair dimensions {a0.shape} vs {a1.shape}")
    n, d = a0.shape
    if n == 0:
        raise ValueError("estimate_model needs at least one pair")
    if alphabet_sizes is None:
        hi = max(2, int(max(a0.max(), a1.max())) + 1)
        alphabet_sizes = (hi,) * d
    alphabet_sizes = tuple(int(b) for b in alphabet_sizes)
    if len(alphabet_sizes) != d:
        raise ValueError("alphabet_sizes length differs from point dimension")
    s = float(smoothing)
    coords = []
    agree = a0 == a1
    for i in range(d):
        b = alphabet_sizes[i]
        c0 = np.bincount(a0[:, i], minlength=b)[:b].astype(float)
        c1 = np.bincount(a1[:, i], minlength=b)[:b].astype(float)
        cb = np.bincount(a0[agree[:, i], i], minlength=b)[:b].astype(float)
        m0 = (c0 + s) / (n + b * s)
        m1 = (c1 + s) / (n + b * s)
        diag = np.minimum((cb + s * m0) / (n + s), np.minimum(m0, m1))
        coords.append(CoordinateDistribution(tuple(diag), tuple(m0 / m0.sum()), tuple(m1 / m1.sum())))
    return DataModel(tuple(coords), n, n)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(r"^#(dense|sparse)\s+d=(\d+)(?:\s+b=([\d,]+))?\s*$")


def write_dataset(dataset: Dataset, path, format: str | None = None) -> None:
    """Write ``dataset`` as line-oriented text: ``X0`` points, then ``X1`` points.

    The header records the format, dimension, alphabet sizes (dense only) and
    the set sizes; a ``#planted i0 i1`` trailer records the planted pair.
    """
    format = format or ("sparse" if dataset.sparse else "dense")
    if format == "sparse":
        ds = dataset.to_sparse()
        header = f"#sparse d={ds.d}"
    elif format == "dense":
        ds = dataset.to_dense()
        b = ds.alphabet
        header = f"#dense d={ds.d} b={','.join(map(str, b))}"
    else:
        raise ValueError(f"unknown dataset format {format!r}")
    lines = [header, f"#sizes {ds.n0} {ds.n1}"]
    for side in (ds.x0, ds.x1):
        for pt in side:
            lines.append(" ".join(map(str, pt if format == "sparse" else pt.tolist())))
    if ds.planted is not None:
        lines.append(f"#planted {ds.planted[0]} {ds.planted[1]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path, format: str | None = None) -> Dataset:
    text = Path(path).read_text().splitlines()
    if not text:
        raise DatasetFormatError(f"{path}: empty file")
    m = _HEADER_RE.match(text[0].strip())
    if not m:
        raise DatasetFormatError(f"{path}:1: bad header {text[0]!r}")
    kind, d = m.group(1), int(m.group(2))
    if format is not None and format != kind:
        raise DatasetFormatError(f"{path}: expected {format} file, header says {kind}")
    if kind == "dense":
        if m.group(3) is None:
            raise DatasetFormatError(f"{path}:1: dense header lacks b=")
        alphabet = tuple(int(v) for v in m.group(3).split(","))
        if len(alphabet) == 1:
            alphabet = alphabet * d
        if len(alphabet) != d:
            raise DatasetFormatError(f"{path}:1: b= lists {len(alphabet)} sizes for d={d}")
    sizes = None
    planted = None
    points = []
    for lineno, raw in enumerate(text[1:], start=2):
        line = raw.strip()
        if line.startswith("#sizes"):
            sizes = tuple(int(v) for v in line.split()[1:3])
            continue
        if line.startswith("#planted"):
            parts = line.split()
            if len(parts) != 3:
                raise DatasetFormatError(f"{path}:{lineno}: bad planted trailer")
            planted = (int(parts[1]), int(parts[2]))
            continue
        if line.startswith("#"):
            continue
        try:
            values = [int(v) for v in line.split()]
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: non-integer token") from exc
        if kind == "dense":
            if len(values) != d:
                raise DatasetFormatError(f"{path}:{lineno}: expected {d} values, got {len(values)}")
            for i, v in enumerate(values):
                if not 0 <= v < alphabet[i]:
                    raise DatasetFormatError(
                        f"{path}:{lineno}: value {v} at coordinate {i} outside [0, {alphabet[i]})"
                    )
        else:
            for v in values:
                if not 0 <= v < d:
                    raise DatasetFormatError(f"{path}:{lineno}: feature id {v} outside [0, {d})")
        points.append(values)
    if sizes is None:
        raise DatasetFormatError(f"{path}: missing #sizes line")
    if sizes[0] + sizes[1] != len(points):
        raise DatasetFormatError(f"{path}: #sizes says {sum(sizes)} points, found {len(points)}")
    p0, p1 = points[: sizes[0]], points[sizes[0] :]
    if kind == "sparse":
        return Dataset(p0, p1, d, planted=planted, sparse=True)
    dtype = _value_dtype(alphabet)
    a0 = np.array(p0, dtype=dtype).reshape(len(p0), d)
    a1 = np.array(p1, dtype=dtype).reshape(len(p1), d)
    return Dataset(a0, a1, d, alphabet, planted)


def format_model(model: DataModel) -> str:
    lines = [f"# d={model.d} n0={model.n0} n1={model.n1}"]
    for c in model.coords:
        parts = [str(c.alphabet_size), " ".join(repr(v) for v in c.diag), "|", " ".join(repr(v) for v in c.x0_marginal)]
        if c.x1_marginal is not None:
            parts += ["|", " ".join(repr(v) for v in c.x1_marginal)]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_model(model: DataModel, path) -> None:
    Path(path).write_text(format_model(model))


def parse_model(lines: Iterable[str], source: str = "<model>") -> DataModel:
    """Parse model lines ``b p_0 .. p_{b-1} | p_{0*} .. [| p_{*0} ..]``."""
    coords = []
    n0 = n1 = 1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("#"):
            for key, val in re.findall(r"\b(n0|n1)=(\d+)", line):
                if key == "n0":
                    n0 = int(val)
                else:
                    n1 = int(val)
            continue
        if not line:
            continue
        fields = [f.split() for f in line.split("|")]
        try:
            head = fields[0]
            b = int(head[0])
            diag = [float(v) for v in head[1:]]
            x0 = [float(v) for v in fields[1]] if len(fields) > 1 else None
            x1 = [float(v) for v in fields[2]] if len(fields) > 2 else None
        except (ValueError, IndexError) as exc:
            raise ModelError(f"{source}:{lineno}: cannot parse {line!r}") from exc
        if x0 is None or len(fields) > 3:
            raise ModelError(f"{source}:{lineno}: expected 'b diag | x0 [| x1]'")
        if len(diag) != b or len(x0) != b or (x1 is not None and len(x1) != b):
            raise ModelError(f"{source}:{lineno}: vectors must have length b={b}")
        try:
            coords.append(CoordinateDistribution(tuple(diag), tuple(x0), None if x1 is None else tuple(x1)))
        except ModelError as exc:
            raise ModelError(f"{source}:{lineno}: {exc}") from None
    if not coords:
        raise ModelError(f"{source}: no coordinates")
    return DataModel(tuple(coords), n0, n1)


def read_model(path) -> DataModel:
    return parse_model(Path(path).read_text().splitlines(), str(path))


# ---------------------------------------------------------------------------
# Named presets
# ---------------------------------------------------------------------------

PRESETS = {
    "bernoulli": "homogeneous marginally Bernoulli(1/2) bits: p (agreement), d",
    "grouped": "groups of marginally Bernoulli(1/2) bits: ps=0.9/0.7/0.5, sizes=16/16/32",
    "unlimited": "homogeneous binary joint matrix: p00, p01, p10, p11, d",
    "sparse": "homogeneous rare binary features: p1, p11, p01, d",
    "planner": "near-noiseless marginally Bernoulli(1/2) bits meeting the planner's variance conditions: eta, d",
}

_PRESET_DEFAULTS = {
    "bernoulli": {"p": 0.9, "d": 64},
    "grouped": {"ps": "0.9/0.7/0.5", "sizes": "16/16/32"},
    "unlimited": {"p00": 0.5, "p01": 0.125, "p10": 0.125, "p11": 0.25, "d": 4096},
    "sparse": {"p1": 0.01, "p11": 0.008, "p01": 0.002, "d": 4096},
    "planner": {"eta": 2.6e-4, "d": 11},
}


def preset(spec: str, n0: int = 1024, n1: int | None = None) -> DataModel:
    """Build a named model from ``name[:key=value,...]``, e.g. ``bernoulli:p=0.9,d=64``."""
    name, _, rest = spec.partition(":")
    if name not in _PRESET_DEFAULTS:
        raise ModelError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(_PRESET_DEFAULTS[name])
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq or key not in params:
            raise ModelError(f"preset {name!r} has no parameter {key!r}")
        params[key] = val
    n1 = n0 if n1 is None else n1
    try:
        if name == "bernoulli":
            coord = CoordinateDistribution.bernoulli_half(float(params["p"]))
            return DataModel.homogeneous(coord, int(params["d"]), n0, n1)
        if name == "unlimited":
            coord = CoordinateDistribution.from_joint(
                float(params["p00"]), float(params["p01"]), float(params["p10"]), float(params["p11"])
            )
            return DataModel.homogeneous(coord, int(params["d"]), n0, n1)
        if name == "sparse":
            p01 = float(params["p01"])
            coord = CoordinateDistribution.sparse(float(params["p1"]), float(params["p11"]), p01)
            return DataModel.homogeneous(coord, int(params["d"]), n0, n1)
        if name == "planner":
            eta = float(params["eta"])
            coord = CoordinateDistribution.bernoulli_half(1.0 - eta)
            return DataModel.homogeneous(coord, int(params["d"]), n0, n1)
        ps = [float(v) for v in str(params["ps"]).split("/")]
        sizes = [int(v) for v in str(params["sizes"]).split("/")]
        if len(ps) != len(sizes):
            raise ModelError("grouped preset needs as many sizes as probabilities")
        coords = []
        for p, k in zip(ps, sizes):
            coords += [CoordinateDistribution.bernoulli_half(p)] * k
        return DataModel(tuple(coords), n0, n1)
    except ValueError as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"bad preset parameter in {spec!r}: {exc}") from None
