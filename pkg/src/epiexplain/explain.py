"""Exact Shapley attributions and minimal sufficient-subset explanations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import FEATURES
from .errors import CapacityError, ExplanationError

MAX_EXACT_FEATURES = 16
# product of arities up to which the model is tabulated over its whole code domain
MAX_TABLE_SIZE = 1 << 24
TIE_DECIMALS = 12


class Factor(NamedTuple):
    feature: str
    code: int
    score: float


@dataclass(frozen=True)
class Attribution:
    features: tuple[str, ...]
    codes: tuple[int, ...]
    phi: np.ndarray
    base_value: float
    prediction_score: float

    def items(self):
        return zip(self.features, self.codes, self.phi.tolist())


@dataclass(frozen=True)
class Explanation:
    """``subset`` holds (feature, code) literals; ``weights`` their log-odds weights."""

    subset: tuple[tuple[str, int], ...]
    weights: tuple[float, ...]
    inferred_label: bool
    sufficient: bool


def _codes_of(row) -> tuple[int, ...]:
    return tuple(int(c) for c in getattr(row, "codes", row))


def shapley_weights(n_players: int) -> np.ndarray:
    """Coalition weight |S|!(F-|S|-1)!/F! indexed by |S|."""
    f = math.factorial
    return np.array([f(s) * f(n_players - s - 1) / f(n_players) for s in range(n_players)])


def shapley_from_values(values: np.ndarray, n_players: int) -> np.ndarray:
    """Shapley values from a characteristic function tabulated by coalition bitmask
    (bit i set = player i in the coalition)."""
    values = np.asarray(values, dtype=float)
    masks = np.arange(1 << n_players)
    sizes = np.array([bin(m).count("1") for m in masks])
    w = shapley_weights(n_players)
    phi = np.empty(n_players)
    for i in range(n_players):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(w[sizes[without]] * (values[without | bit] - values[without]))
    return phi


class ShapleyExplainer:
    """Interventional Shapley values against a fixed background.

    ``v(S)`` is the mean model score over background rows with the coalition's
    codes overwritten by the explained row's. Models exposing ``score_table``
    over a small code domain are tabulated once; otherwise the composite rows
    are scored in batches.
    """

    def __init__(self, model, background, features=FEATURES):
        background = np.array([_codes_of(b) for b in background], dtype=np.int64)
        if background.size == 0:
            raise ExplanationError("Shapley background must contain at least one row")
        n_players = background.shape[1]
        if n_players > MAX_EXACT_FEATURES:
            raise CapacityError(
                f"exact Shapley enumeration supports at most {MAX_EXACT_FEATURES} features, "
                f"got {n_players}; use a sampling estimator instead"
            )
        self.model = model
        self.features = tuple(features)
        self.n_players = n_players
        uniq, counts = np.unique(background, axis=0, return_counts=True)
        self.background = uniq
        self.bg_weights = counts / counts.sum()
        self.masks = (
            (np.arange(1 << n_players)[:, None] >> np.arange(n_players)[None, :]) & 1
        ).astype(bool)
        self._table = None
        self._strides = None
        arities = getattr(model, "arities", None)
        if (
            hasattr(model, "score_table")
            and arities is not None
            and len(arities) == n_players
            and math.prod(arities) <= MAX_TABLE_SIZE
            and (background < np.asarray(arities)).all()
        ):
            self._table = np.ascontiguousarray(model.score_table()).ravel()
            self._strides = np.array(
                [math.prod(arities[i + 1 :]) for i in range(n_players)], dtype=np.int64
            )
            self._arities = np.asarray(arities)

    def coalition_values(self, codes) -> np.ndarray:
        x = np.asarray(codes, dtype=np.int64)
        if x.shape != (self.n_players,):
            raise ExplanationError(f"row has {x.size} features, expected {self.n_players}")
        if self._table is not None and ((x >= 0) & (x < self._arities)).all():
            from_row = self.masks.astype(np.int64) @ (x * self._strides)
            from_bg = (~self.masks).astype(np.int64) @ (self.background * self._strides).T
            scores = self._table[from_row[:, None] + from_bg]
        else:
            composite = np.where(self.masks[:, None, :], x[None, None, :], self.background[None, :, :])
            flat = composite.reshape(-1, self.n_players)
            scores = np.asarray(self.model.predict_scores(flat), dtype=float).reshape(
                len(self.masks), len(self.background)
            )
        return scores @ self.bg_weights

    def explain(self, row) -> Attribution:
        codes = _codes_of(row)
        v = self.coalition_values(codes)
        phi = shapley_from_values(v, self.n_players)
        score = float(np.asarray(self.model.predict_scores(np.array([codes])))[0])
        return Attribution(self.features, codes, phi, float(v[0]), score)


def shapley_exact(model, row, background, features=FEATURES) -> Attribution:
    return ShapleyExplainer(model, background, features).explain(row)


def ecpi_explain(model, row, features=FEATURES) -> Explanation:
    """Smallest literal subset whose partial inference (prior plus the subset's
    weights) gives the full row's label.

    Among subsets of equal size the one with the largest absolute summed weight
    wins, then the earliest in feature order.
    """
    codes = _codes_of(row)
    w = model.literal_weights(codes)
    full_label = bool(model.prior + w.sum() > 0)
    n = len(codes)
    for size in range(n + 1):
        best, best_mag = None, -1.0
        for subset in itertools.combinations(range(n), size):
            total = model.prior + sum(w[i] for i in subset)
            if bool(total > 0) != full_label:
                continue
            mag = round(abs(sum(w[i] for i in subset)), TIE_DECIMALS)
            if mag > best_mag:
                best, best_mag = subset, mag
        if best is not None:
            return Explanation(
                tuple((features[i], codes[i]) for i in best),
                tuple(float(w[i]) for i in best),
                full_label,
                True,
            )
    raise AssertionError("the full literal set always reproduces its own label")  # pragma: no cover


def top_k(attr, k: int, toward_label: bool = True) -> list[Factor]:
    """The k most influential feature-values, ties broken by feature order.

    For an ``Attribution`` only features pushing the score toward
    ``toward_label`` qualify (phi > 0 toward True, phi < 0 toward False). For an
    ``Explanation`` the subset's members are ranked by absolute weight.
    """
    if k < 1:
        raise ExplanationError(f"k must be positive, got {k}")
    if isinstance(attr, Attribution):
        sign = 1.0 if toward_label else -1.0
        cands = [
            (feat, code, sign * phi, pos)
            for pos, (feat, code, phi) in enumerate(attr.items())
            if sign * phi > 0
        ]
    elif isinstance(attr, Explanation):
        order = {f: i for i, f in enumerate(FEATURES)}
        cands = [
            (feat, code, abs(wt), order.get(feat, len(order)))
            for (feat, code), wt in zip(attr.subset, attr.weights)
        ]
    else:
        raise ExplanationError(f"cannot rank {type(attr).__name__}")
    cands.sort(key=lambda c: (-round(c[2], TIE_DECIMALS), c[3]))
    return [Factor(f, int(c), float(s)) for f, c, s, _ in cands[:k]]
