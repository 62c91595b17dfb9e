"""Top-k factor counts across explained rows, optionally per new-case stratum."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import FEATURES, NC_STRATA
from .errors import AggregationError
from .io import _write, fmt_float, fmt_theta

COUNTS_HEADER = ("feature", "code", "count", "fraction")
EVAL_HEADER = ("model", "theta", "seed", "true_positive", "false_positive", "false_negative",
               "true_negative", "precision", "recall")


@dataclass(frozen=True)
class RowTopK:
    """One explained row's ranked factors (at most k of them)."""

    region: str
    date: object
    theta: float
    method: str
    k: int
    nc_stratum: str
    factors: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class AggregateCounts:
    theta: float
    k: int
    method: str
    counts: dict = field(default_factory=dict)
    stratum: str | None = None
    n_rows: int = 0

    def total(self) -> int:
        return sum(self.counts.values())

    def ranked(self):
        """(feature, code, count) by descending count, then feature order and code."""
        order = {f: i for i, f in enumerate(FEATURES)}
        return sorted(
            ((f, c, n) for (f, c), n in self.counts.items()),
            key=lambda t: (-t[2], order.get(t[0], len(order)), t[1]),
        )

    def fractions(self) -> dict:
        """Unrounded share of each (feature, code) in the total count."""
        total = self.total()
        return {key: n / total for key, n in self.counts.items()} if total else {}

    def by_feature(self) -> dict[str, int]:
        out = Counter()
        for (f, _), n in self.counts.items():
            out[f] += n
        return dict(out)

    @property
    def filename(self) -> str:
        name = f"top{self.k}_theta{fmt_theta(self.theta)}_{self.method}"
        if self.stratum is not None:
            name += f"_nc{self.stratum}"
        return name + ".csv"


def aggregate(rows, stratum: str | None = None, theta=None, k=None, method=None) -> AggregateCounts:
    """Count each (feature, code) across the rows' top-k lists.

    All rows must agree on theta, k and method. ``theta``/``k``/``method`` label
    the result when ``rows`` is empty.
    """
    rows = list(rows)
    if stratum is not None and stratum not in NC_STRATA:
        raise AggregationError(f"unknown new-case stratum {stratum!r}; expected one of {NC_STRATA}")
    keys = {(r.theta, r.k, r.method) for r in rows}
    if len(keys) > 1:
        raise AggregationError(f"cannot aggregate mixed theta/k/method: {sorted(keys)}")
    if keys:
        theta, k, method = keys.pop()
    selected = [r for r in rows if stratum is None or r.nc_stratum == stratum]
    counts = Counter()
    for r in selected:
        counts.update(tuple(f) for f in r.factors[: r.k])
    return AggregateCounts(theta, k, method, dict(counts), stratum, len(selected))


def emit_report(counts: AggregateCounts, destination) -> Path:
    """Write ``feature,code,count,fraction`` to ``destination`` (a directory or a file path)."""
    destination = Path(destination)
    path = destination / counts.filename if destination.suffix != ".csv" else destination
    total = counts.total()
    rows = [(f, c, n, fmt_float(n / total)) for f, c, n in counts.ranked()]
    return _write(path, COUNTS_HEADER, rows)


def emit_evaluation(entries, path) -> Path:
    """``entries``: (model_name, theta, seed, EvalReport). Mean rows per (model, theta) follow."""
    entries = list(entries)
    rows = []
    groups = {}
    for name, theta, seed, rep in entries:
        rows.append((name, fmt_theta(theta), seed, rep.true_positive, rep.false_positive,
                     rep.false_negative, rep.true_negative, fmt_float(rep.precision),
                     fmt_float(rep.recall)))
        groups.setdefault((name, theta), []).append(rep)
    for (name, theta), reps in groups.items():
        n = len(reps)
        rows.append((name, fmt_theta(theta), "mean",
                     "", "", "", "",
                     fmt_float(sum(r.precision for r in reps) / n),
                     fmt_float(sum(r.recall for r in reps) / n)))
    return _write(path, EVAL_HEADER, rows)
