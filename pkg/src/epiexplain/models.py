"""Classifiers for the R_t < theta task.

Two models share one prediction contract (``predict_scores`` on an integer code
matrix, ``score`` in [0, 1] is the probability of the True class):

* ``ForestModel``: bagged CART trees over category codes, Gini splits on
  ``code <= threshold``, sqrt(F) candidate features per node.
* ``EcpiModel``: an additive log-odds model over (feature, code) literals. It
  stands in for ECPI's probabilistic-logic knowledge base: inference on any
  subset of literals is the prior plus the subset's weights, which is what the
  minimal-subset explanations need.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ARITIES, FEATURES, LabeledDataset
from .errors import ConfigurationError, TrainingError

MODEL_FORMAT_VERSION = 1
DEFAULT_TREES = 100
DEFAULT_SMOOTHING = 1.0
MIN_NODE_SIZE = 2

LEAF = -1


def _as_codes(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        X = rows
    else:
        X = np.array([getattr(r, "codes", r) for r in rows])
    return np.asarray(X, dtype=np.int64).reshape(-1, len(FEATURES) if X.size == 0 else X.shape[-1])


def _check_trainable(data: LabeledDataset):
    if len(data) == 0:
        raise TrainingError("cannot train on an empty dataset")
    if data.n_true == 0 or data.n_false == 0:
        raise TrainingError(
            f"training data must contain both classes (true={data.n_true}, false={data.n_false})"
        )


@dataclass(frozen=True)
class Tree:
    """Flat array encoding; internal node i sends ``x[feature[i]] <= threshold[i]`` left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # fraction of True among the node's bootstrap samples

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def votes(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)] > 0.5

    def leaf_boxes(self, arities):
        """Yield ``(lo, hi, vote)`` for every leaf: the code box reaching it."""
        stack = [(0, [0] * len(arities), list(arities))]
        while stack:
            node, lo, hi = stack.pop()
            f = self.feature[node]
            if f == LEAF:
                yield lo, hi, bool(self.value[node] > 0.5)
                continue
            t = int(self.threshold[node])
            l_hi = list(hi)
            l_hi[f] = min(hi[f], t + 1)
            r_lo = list(lo)
            r_lo[f] = max(lo[f], t + 1)
            if lo[f] < l_hi[f]:
                stack.append((int(self.left[node]), lo, l_hi))
            if r_lo[f] < hi[f]:
                stack.append((int(self.right[node]), r_lo, hi))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.int64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float),
        )


def _best_split(x: np.ndarray, y: np.ndarray, arity: int):
    """Best ``x <= t`` split by weighted Gini; returns (impurity, t) or None."""
    counts = np.bincount(x * 2 + y, minlength=2 * arity).reshape(arity, 2)
    left = np.cumsum(counts, axis=0)[:-1]
    total = counts.sum(axis=0)
    right = total - left
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    valid = (n_left > 0) & (n_right > 0)
    if not valid.any():
        return None
    with np.errstate(invalid="ignore", divide="ignore"):
        gini_l = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
        score = (n_left * gini_l + n_right * gini_r) / (n_left + n_right)
    score = np.where(valid, score, np.inf)
    t = int(np.argmin(score))
    return float(score[t]), t


def _grow_tree(X, y, arities, max_features, rng) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)))]
    n_features = X.shape[1]
    while stack:
        node, idx = stack.pop()
        yi = y[idx]
        if len(idx) < MIN_NODE_SIZE or yi.all() or not yi.any():
            continue
        order = rng.permutation(n_features)
        best = None
        # keep drawing features past max_features only while no valid split has been found
        for rank, f in enumerate(order):
            if rank >= max_features and best is not None:
                break
            found = _best_split(X[idx, f], yi.astype(np.int64), arities[f])
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], f, found[1])
        if best is None:
            continue
        _, f, t = best
        mask = X[idx, f] <= t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = int(f), t
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.int64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    seed: int
    arities: tuple[int, ...] = ARITIES
    features: tuple[str, ...] = FEATURES
    kind = "forest"

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    def votes(self, X) -> np.ndarray:
        X = _as_codes(X)
        return np.stack([t.votes(X) for t in self.trees], axis=1)

    def predict_scores(self, X) -> np.ndarray:
        """Fraction of trees voting True."""
        return self.votes(X).sum(axis=1) / self.tree_count

    def score_table(self) -> np.ndarray:
        """Score of every point of the code domain, shaped by ``arities``."""
        table = np.zeros(self.arities, dtype=np.int64)
        for tree in self.trees:
            for lo, hi, vote in tree.leaf_boxes(self.arities):
                if vote:
                    table[tuple(slice(a, b) for a, b in zip(lo, hi))] += 1
        return table / self.tree_count


def train_forest(
    data: LabeledDataset,
    tree_count: int = DEFAULT_TREES,
    seed: int = 0,
    workers: int = 1,
    arities=ARITIES,
) -> ForestModel:
    """Bootstrap-aggregated Gini trees grown to purity or fewer than two samples.

    Each tree draws from its own generator spawned from ``seed``, so the result
    does not depend on ``workers``.
    """
    _check_trainable(data)
    if tree_count < 1:
        raise TrainingError(f"tree_count must be positive, got {tree_count}")
    X, y = data.X, data.y
    n, n_features = X.shape
    max_features = max(1, int(math.isqrt(n_features)))
    children = np.random.SeedSequence(seed).spawn(tree_count)

    def grow(ss):
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        return _grow_tree(X[boot], y[boot], arities, max_features, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = tuple(pool.map(grow, children))
    else:
        trees = tuple(grow(ss) for ss in children)
    return ForestModel(trees, seed, tuple(arities))


@dataclass(frozen=True)
class EcpiModel:
    weights: tuple[np.ndarray, ...]  # weights[f][code]
    prior: float
    smoothing: float
    arities: tuple[int, ...] = ARITIES
    features: tuple[str, ...] = FEATURES
    kind = "ecpi"

    def literal_weights(self, codes) -> np.ndarray:
        """Weight of each of the row's literals; codes outside the trained domain weigh 0."""
        out = np.zeros(len(codes))
        for f, c in enumerate(codes):
            if 0 <= c < len(self.weights[f]):
                out[f] = self.weights[f][c]
        return out

    def logit(self, X) -> np.ndarray:
        X = _as_codes(X)
        total = np.full(len(X), self.prior)
        for f, w in enumerate(self.weights):
            col = X[:, f]
            inside = (col >= 0) & (col < len(w))
            total += np.where(inside, w[np.clip(col, 0, len(w) - 1)], 0.0)
        return total

    def predict_scores(self, X) -> np.ndarray:
        return logistic(self.logit(X))

    def score_table(self) -> np.ndarray:
        total = np.full(self.arities, self.prior)
        for f, w in enumerate(self.weights):
            shape = [1] * len(self.arities)
            shape[f] = len(w)
            total = total + w.reshape(shape)
        return logistic(total)


def logistic(z):
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))


def train_ecpi(data: LabeledDataset, smoothing: float = DEFAULT_SMOOTHING, arities=ARITIES) -> EcpiModel:
    """Laplace-smoothed per-literal log-likelihood ratios plus the class log-odds prior."""
    _check_trainable(data)
    if not smoothing > 0:
        raise TrainingError(f"smoothing must be positive, got {smoothing}")
    X, y = data.X, data.y
    n_true, n_false = int(y.sum()), int((~y).sum())
    weights = []
    if (X < 0).any() or (X >= np.asarray(arities)).any():
        raise TrainingError("category codes fall outside the declared feature arities")
    for f, arity in enumerate(arities):
        c_true = np.bincount(X[y, f], minlength=arity)
        c_false = np.bincount(X[~y, f], minlength=arity)
        w = (np.log((c_true + smoothing) / (n_true + smoothing * arity))
             - np.log((c_false + smoothing) / (n_false + smoothing * arity)))
        weights.append(w)
    return EcpiModel(tuple(weights), math.log(n_true / n_false), float(smoothing), tuple(arities))


@dataclass(frozen=True)
class Prediction:
    label: bool
    score: float


def predict(model, row) -> Prediction:
    score = float(model.predict_scores(_as_codes([row]))[0])
    return Prediction(score > 0.5, score)


@dataclass(frozen=True)
class EvalReport:
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int

    @property
    def precision(self) -> float:
        denom = self.true_positive + self.false_positive
        return self.true_positive / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.true_positive + self.false_negative
        return self.true_positive / denom if denom else 0.0

    @property
    def accuracy(self) -> float:
        total = self.true_positive + self.false_positive + self.false_negative + self.true_negative
        return (self.true_positive + self.true_negative) / total


def confusion(y_true, y_pred) -> EvalReport:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    return EvalReport(
        int((y_true & y_pred).sum()),
        int((~y_true & y_pred).sum()),
        int((y_true & ~y_pred).sum()),
        int((~y_true & ~y_pred).sum()),
    )


def evaluate(model, test: LabeledDataset) -> EvalReport:
    """Confusion counts with label True (R_t < theta) as the positive class."""
    if len(test) == 0:
        raise TrainingError("cannot evaluate on an empty test set")
    return confusion(test.y, model.predict_scores(test.X) > 0.5)


def train_test_split(data: LabeledDataset, train_fraction: float = 0.9, seed: int = 0):
    if not 0 < train_fraction < 1:
        raise ConfigurationError(f"train fraction must be in (0, 1), got {train_fraction}")
    n = len(data)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return data.subset(sorted(perm[:n_train])), data.subset(sorted(perm[n_train:]))


def save_model(model, path) -> Path:
    """JSON flat file: format version, model kind, feature names and arities, then
    either the tree arrays or the weight table."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "features": list(model.features),
        "arities": list(model.arities),
    }
    if isinstance(model, ForestModel):
        doc["seed"] = model.seed
        doc["trees"] = [t.to_dict() for t in model.trees]
    else:
        doc["prior"] = model.prior
        doc["smoothing"] = model.smoothing
        doc["weights"] = [w.tolist() for w in model.weights]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigurationError(f"{path}: unsupported model format {doc.get('format_version')}")
    if tuple(doc["features"]) != FEATURES:
        raise ConfigurationError(f"{path}: feature list {doc['features']} does not match {FEATURES}")
    arities = tuple(doc["arities"])
    if doc["kind"] == "forest":
        trees = tuple(Tree.from_dict(t) for t in doc["trees"])
        return ForestModel(trees, doc["seed"], arities)
    if doc["kind"] == "ecpi":
        weights = tuple(np.asarray(w, dtype=float) for w in doc["weights"])
        return EcpiModel(weights, doc["prior"], doc["smoothing"], arities)
    raise ConfigurationError(f"{path}: unknown model kind {doc['kind']!r}")
