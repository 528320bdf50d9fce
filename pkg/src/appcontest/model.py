"""CART trees and random forests written from scratch, plus the Last baseline.

Splits are searched over midpoints between consecutive distinct values of a
feature. The best split maximises impurity decrease; ties go to the lowest
feature index and then the lowest threshold. A node becomes a leaf when it is
pure, at ``max_depth``, below ``min_samples_split``, or when none of its
candidate features varies.

All randomness comes from splitmix64 so a forest is a pure function of
``(X, y, params)``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .textmine import ConfigError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FORMAT = "appcontest-forest"
FORMAT_VERSION = 1


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 generator; ``SplitMix64(s).next() == splitmix64(s)``."""

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next(self) -> int:
        out = splitmix64(self.state)
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return out

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` (plain modulo; the bias is below 2**-50 for small n)."""
        return self.next() % n

    def sample(self, population: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(population)``, sorted."""
        pool = list(range(population))
        for i in range(k):
            j = i + self.below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 12
    min_samples_split: int = 2
    criterion: str = "gini"  # "gini" for classification, "variance" for regression

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be >= 2")
        if self.criterion not in ("gini", "variance"):
            raise ConfigError(f"criterion must be gini or variance, got {self.criterion!r}")

    @property
    def is_classifier(self) -> bool:
        return self.criterion == "gini"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    mtry: int | None = None
    bootstrap: bool = True
    seed: int = 0
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def resolve_mtry(self, p: int) -> int:
        if self.mtry is None:
            return math.ceil(math.sqrt(p)) if self.tree.is_classifier else max(1, math.ceil(p / 3))
        if self.mtry > p:
            raise ConfigError(f"mtry={self.mtry} exceeds the number of features p={p}")
        return self.mtry

    def tree_for(self, criterion: str) -> TreeParams:
        return replace(self.tree, criterion=criterion)

    def for_task(self, criterion: str) -> "ForestParams":
        """Same forest settings with the tree criterion switched."""
        return replace(self, tree=self.tree_for(criterion))


@dataclass
class Tree:
    """Flat node arrays. Leaves have ``feature == -1``.

    ``value[i]`` holds class counts for classifiers and ``[mean]`` for
    regressors.
    """

    feature: list[int]
    threshold: list[float | None]
    left: list[int]
    right: list[int]
    value: list[list[float]]
    is_classifier: bool

    def leaf(self, x: Sequence[float]) -> int:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return i

    def predict_one(self, x: Sequence[float]) -> float:
        v = self.value[self.leaf(x)]
        if self.is_classifier:
            return int(np.argmax(v))  # first maximum, i.e. lowest class on ties
        return v[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        dtype = np.int64 if self.is_classifier else float
        return np.array([self.predict_one(row) for row in X], dtype=dtype)

    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def to_dict(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                "right": self.right, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict, is_classifier: bool) -> "Tree":
        value = [[int(v) for v in row] if is_classifier else [float(row[0])] for row in d["value"]]
        return cls(list(d["feature"]), list(d["threshold"]), list(d["left"]),
                   list(d["right"]), value, is_classifier)


def _midpoint(a: float, b: float) -> float:
    t = a + (b - a) / 2.0
    # adjacent floats: keep a strictly below b so `x <= t` still separates them
    return a if t >= b else t


def _best_split(X: np.ndarray, y: np.ndarray, feats: list[int], classifier: bool,
                n_classes: int) -> tuple[int, float] | None:
    n = len(y)
    # rows pre-sorted by y, then stable per-column sort: canonical (value, y) order
    by_y = np.argsort(y, kind="stable")
    Xs, ys = X[by_y][:, feats], y[by_y]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ysorted = ys[order]
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    if classifier:
        onehot = (ysorted[..., None] == np.arange(n_classes)).astype(float)
        left = np.cumsum(onehot, axis=0)[:-1]
        right = onehot.sum(axis=0)[None] - left
        gain = (left ** 2).sum(axis=2) / nl + (right ** 2).sum(axis=2) / nr
    else:
        left = np.cumsum(ysorted, axis=0)[:-1]
        right = ysorted.sum(axis=0)[None] - left
        gain = left ** 2 / nl + right ** 2 / nr
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    pos = np.argmax(gain, axis=0)  # first maximum: lowest threshold
    best = gain[pos, np.arange(len(feats))]
    j = int(np.argmax(best))  # first maximum: lowest feature index
    i = int(pos[j])
    return feats[j], _midpoint(float(xs[i, j]), float(xs[i + 1, j]))


def fit_tree(X, y, params: TreeParams = TreeParams(), rng: SplitMix64 | None = None,
             mtry: int | None = None, n_classes: int = 2) -> Tree:
    """Grow one CART tree.

    With ``rng`` and ``mtry`` set, each node considers ``mtry`` features drawn
    without replacement; otherwise every feature is a candidate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError(f"X has shape {X.shape} but y has length {len(y)}")
    n, p = X.shape
    if n < 1 or p < 1:
        raise ValueError("need at least one row and one feature")
    classifier = params.is_classifier
    if classifier:
        y = y.astype(np.int64)
        if y.min() < 0 or y.max() >= n_classes:
            raise ValueError(f"class labels must lie in [0, {n_classes})")
    else:
        y = y.astype(float)
    if mtry is None or mtry >= p:
        mtry = p
    tree = Tree([], [], [], [], [], classifier)

    def leaf_value(yn: np.ndarray) -> list:
        if classifier:
            return np.bincount(yn, minlength=n_classes).astype(int).tolist()
        return [float(np.mean(np.sort(yn)))]

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(tree.feature)
        tree.feature.append(-1)
        tree.threshold.append(None)
        tree.left.append(-1)
        tree.right.append(-1)
        yn = y[rows]
        tree.value.append(leaf_value(yn))
        pure = bool(np.all(yn == yn[0]))
        if pure or depth >= params.max_depth or len(rows) < params.min_samples_split:
            return node
        feats = rng.sample(p, mtry) if (rng is not None and mtry < p) else list(range(p))
        split = _best_split(X[rows], yn, feats, classifier, n_classes)
        if split is None:
            return node
        f, thr = split
        mask = X[rows, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = grow(rows[mask], depth + 1)
        tree.right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(n), 0)
    return tree


@dataclass
class Forest:
    trees: list[Tree]
    params: ForestParams
    tree_seeds: list[int]
    n_features: int
    n_classes: int = 2

    @property
    def is_classifier(self) -> bool:
        return self.params.tree.is_classifier

    def to_dict(self) -> dict:
        params = asdict(self.params)
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "task": "classification" if self.is_classifier else "regression",
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "params": params,
            "tree_seeds": self.tree_seeds,
            "trees": [t.to_dict() for t in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        p = dict(d["params"])
        params = ForestParams(n_trees=p["n_trees"], mtry=p["mtry"], bootstrap=p["bootstrap"],
                              seed=p["seed"], tree=TreeParams(**p["tree"]))
        clf = params.tree.is_classifier
        return cls([Tree.from_dict(t, clf) for t in d["trees"]], params,
                   list(d["tree_seeds"]), d["n_features"], d["n_classes"])

    @classmethod
    def from_json(cls, text: str) -> "Forest":
        return cls.from_dict(json.loads(text))


def fit_forest(X, y, params: ForestParams = ForestParams(), n_classes: int = 2,
               threads: int = 1) -> Forest:
    """Bagged CART ensemble.

    Tree ``t`` draws from ``SplitMix64(splitmix64(seed + t))``: first the
    bootstrap rows, then the per-node feature samples in growth order. The
    result does not depend on ``threads``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError(f"X has shape {X.shape} but y has length {len(y)}")
    n, p = X.shape
    mtry = params.resolve_mtry(p)
    seeds = [splitmix64((params.seed + t) & MASK64) for t in range(params.n_trees)]

    def grow(t: int) -> Tree:
        rng = SplitMix64(seeds[t])
        if params.bootstrap:
            rows = np.array([rng.below(n) for _ in range(n)])
        else:
            rows = np.arange(n)
        return fit_tree(X[rows], y[rows], params.tree, rng, mtry, n_classes)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(grow, range(params.n_trees)))
    else:
        trees = [grow(t) for t in range(params.n_trees)]
    return Forest(trees, params, seeds, p, n_classes)


def predict_class(forest: Forest, x: Sequence[float]) -> tuple[int, np.ndarray]:
    """Majority vote and per-class vote fractions.

    Ties go to the lowest class label (class 0 is BPositive in the contest
    encoding).
    """
    votes = np.zeros(forest.n_classes)
    for tree in forest.trees:
        votes[tree.predict_one(x)] += 1
    return int(np.argmax(votes)), votes / len(forest.trees)


def predict_value(forest: Forest, x: Sequence[float],
                  clip: tuple[float, float] | None = (0.0, 1.0)) -> float:
    """Mean of the trees' leaf means, clipped to ``clip``."""
    value = math.fsum(tree.predict_one(x) for tree in forest.trees) / len(forest.trees)
    if clip is not None:
        value = min(max(value, clip[0]), clip[1])
    return value


def predict(forest: Forest, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if forest.is_classifier:
        return np.array([predict_class(forest, row)[0] for row in X], dtype=np.int64)
    return np.array([predict_value(forest, row) for row in X])


def last_baseline(y_history: Sequence):
    """Predict the next label as the most recent one."""
    if len(y_history) == 0:
        raise ValueError("last_baseline needs a non-empty history")
    return y_history[-1]
