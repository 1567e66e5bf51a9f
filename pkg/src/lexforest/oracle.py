"""Exact evaluators for bucketing forests on small models.

A leaf fixes the values of some coordinates and leaves the rest free.  The
planted pair is summarized per coordinate by its shared value, or by the
alphabet size ``b`` when the two points disagree.  A leaf catches the pair
when every fixed coordinate equals the shared value.  Leaves are stored flat:
a tree is a list of leaves and a forest is a list of trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import DataModel

FREE = -1
MAX_STATES = 10**7
_CHUNK_CELLS = 1 << 22


class OracleGuardError(ValueError):
    """The requested enumeration exceeds the state guard."""


class ForestFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LeafSpec:
    """Values taken per coordinate; ``FREE`` marks a coordinate the leaf does not split on."""

    w: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(int(v) for v in self.w))
        if any(v < FREE for v in self.w):
            raise ValueError(f"invalid leaf entry in {self.w}")

    @property
    def taken(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.w) if v != FREE)

    def symbols(self) -> str:
        return " ".join("*" if v == FREE else str(v) for v in self.w)


Tree = list[LeafSpec]
Forest = list[Tree]


def _check_leaf(model: DataModel, leaf: LeafSpec) -> None:
    if len(leaf.w) != model.d:
        raise ValueError(f"leaf has {len(leaf.w)} entries, model has {model.d} coordinates")
    for v, b in zip(leaf.w, model.alphabet_sizes):
        if v >= b:
            raise ValueError(f"leaf value {v} outside alphabet of size {b}")


def _state_probs(model: DataModel) -> list[np.ndarray]:
    """Per coordinate: probabilities of sharing value 0..b-1, then of disagreeing."""
    return [np.append(np.asarray(c.diag, dtype=float), c.disagreement_mass) for c in model.coords]


def state_count(model: DataModel) -> int:
    return math.prod(b + 1 for b in model.alphabet_sizes)


def _leaf_matrix(model: DataModel, leaves: Sequence[LeafSpec]) -> np.ndarray:
    for leaf in leaves:
        _check_leaf(model, leaf)
    if not leaves:
        return np.empty((0, model.d), dtype=np.int64)
    return np.array([leaf.w for leaf in leaves], dtype=np.int64)


def forest_success_probability(model: DataModel, forest: Sequence[Sequence[LeafSpec]], max_states: int = MAX_STATES) -> float:
    """Probability that some leaf of some tree catches the planted pair, by full enumeration."""
    total_states = state_count(model)
    if total_states > max_states:
        raise OracleGuardError(f"{total_states} pair states exceed the guard {max_states}")
    trees = [_leaf_matrix(model, tree) for tree in forest]
    trees = [t for t in trees if t.shape[0]]
    if not trees:
        return 0.0
    probs = _state_probs(model)
    radix = np.array([b + 1 for b in model.alphabet_sizes], dtype=np.int64)
    weights = np.ones(model.d, dtype=np.int64)
    weights[:-1] = np.cumprod(radix[::-1])[::-1][1:]
    widest = max(t.shape[0] for t in trees)
    chunk = max(1, _CHUNK_CELLS // (widest * model.d))
    total = 0.0
    for start in range(0, total_states, chunk):
        idx = np.arange(start, min(total_states, start + chunk), dtype=np.int64)
        y = (idx[:, None] // weights[None, :]) % radix[None, :]
        p = np.ones(idx.size)
        for i in range(model.d):
            p *= probs[i][y[:, i]]
        caught = np.zeros(idx.size, dtype=bool)
        for w in trees:
            ok = (w[None, :, :] == FREE) | (w[None, :, :] == y[:, None, :])
            caught |= ok.all(axis=2).any(axis=1)
        total += float(p[caught].sum())
    return total


def leaf_success_probability(model: DataModel, leaf: LeafSpec) -> float:
    _check_leaf(model, leaf)
    return math.prod(model.coords[i].diag[v] for i, v in enumerate(leaf.w) if v != FREE)


def tree_success_probability(model: DataModel, tree: Sequence[LeafSpec]) -> float:
    """Sum over leaves of the probability the pair shares every fixed value."""
    return float(sum(leaf_success_probability(model, leaf) for leaf in tree))


def leaf_probability(model: DataModel, leaf: LeafSpec) -> float:
    """Probability a random X0 point lands in the leaf."""
    _check_leaf(model, leaf)
    return math.prod(model.coords[i].x0_marginal[v] for i, v in enumerate(leaf.w) if v != FREE)


def leaf_occupancy(model: DataModel, leaf: LeafSpec, n0: float) -> float:
    return n0 * leaf_probability(model, leaf)


def build_capped_tree(model: DataModel, n0: float, a: float, order: Sequence[int]) -> Tree:
    """Split in ``order`` until each branch expects at most ``a`` X0 points.

    A branch that runs out of coordinates becomes a leaf even if it is over the cap.
    """
    order = [int(c) for c in order]
    if sorted(order) != sorted(set(order)) or any(not 0 <= c < model.d for c in order):
        raise ValueError("split order must list distinct coordinates of the model")
    leaves: Tree = []
    stack = [((FREE,) * model.d, 0, float(n0))]
    while stack:
        w, depth, occ = stack.pop()
        if occ <= a or depth == len(order):
            leaves.append(LeafSpec(w))
            continue
        c = order[depth]
        marg = model.coords[c].x0_marginal
        for v in reversed(range(model.coords[c].alphabet_size)):
            child = w[:c] + (v,) + w[c + 1 :]
            stack.append((child, depth + 1, occ * marg[v]))
    return leaves


def max_leaf_probability(model: DataModel, forest: Sequence[Sequence[LeafSpec]]) -> float:
    return max(leaf_probability(model, leaf) for tree in forest for leaf in tree)


def simulate_forest_success(
    model: DataModel, forest: Sequence[Sequence[LeafSpec]], samples: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of the forest success probability and its standard error."""
    rng = np.random.default_rng(seed)
    y = np.empty((samples, model.d), dtype=np.int64)
    for i, p in enumerate(_state_probs(model)):
        y[:, i] = rng.choice(p.size, size=samples, p=p / p.sum())
    caught = np.zeros(samples, dtype=bool)
    for tree in forest:
        w = _leaf_matrix(model, tree)
        for start in range(0, samples, 8192):
            block = y[start : start + 8192]
            ok = (w[None, :, :] == FREE) | (w[None, :, :] == block[:, None, :])
            caught[start : start + 8192] |= ok.all(axis=2).any(axis=1)
    est = float(caught.mean())
    return est, math.sqrt(max(est * (1.0 - est), 0.0) / samples)


def random_capped_forest(model: DataModel, n0: float, a: float, trees: int, seed: int = 0) -> Forest:
    """Capped trees over independent random coordinate orders."""
    rng = np.random.default_rng(seed)
    return [build_capped_tree(model, n0, a, rng.permutation(model.d)) for _ in range(trees)]


# ---------------------------------------------------------------------------
# Forest files
# ---------------------------------------------------------------------------


def _parse_leaf(line: str, lineno: int, source: str) -> LeafSpec:
    tokens = line.split() if " " in line.strip() or "\t" in line.strip() else list(line.strip())
    values = []
    for tok in tokens:
        if tok == "*":
            values.append(FREE)
        elif tok.isdigit():
            values.append(int(tok))
        else:
            raise ForestFormatError(f"{source}:{lineno}: bad leaf symbol {tok!r}")
    return LeafSpec(tuple(values))


def parse_forest(text: str, source: str = "<forest>") -> Forest:
    """One leaf per line (``*`` for a free coordinate), trees separated by blank lines."""
    forest: Forest = []
    tree: Tree = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            if tree:
                forest.append(tree)
                tree = []
            continue
        leaf = _parse_leaf(line, lineno, source)
        if width is not None and len(leaf.w) != width:
            raise ForestFormatError(f"{source}:{lineno}: leaf has {len(leaf.w)} symbols, expected {width}")
        width = len(leaf.w)
        tree.append(leaf)
    if tree:
        forest.append(tree)
    return forest


def read_forest(path) -> Forest:
    return parse_forest(Path(path).read_text(), str(path))


def format_forest(forest: Sequence[Sequence[LeafSpec]]) -> str:
    return "\n\n".join("\n".join(leaf.symbols() for leaf in tree) for tree in forest) + "\n"


def write_forest(forest: Sequence[Sequence[LeafSpec]], path) -> None:
    Path(path).write_text(format_forest(forest))
