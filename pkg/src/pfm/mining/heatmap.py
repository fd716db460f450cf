"""Co-occurrence heatmaps for hypothesis generation.

Counts how often a category of events on one axis is followed, within a time
window, by a category on the other axis. High-count cells are surfaced as
candidate relationships for a person to promote to a real hypothesis.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from ..chronicle import Chronicle, Event, FoodEvent, LifeEvent


@dataclass(frozen=True)
class CategorySpec:
    """How one heatmap axis maps events to category labels.

    ``by`` selects the labeling scheme: ``dish`` / ``ingredient`` for food
    events, ``presence`` for bare stream occurrence, or a life-event metric
    name, which is split into ``bins`` equal-width bins over the values seen
    in the chronicle. ``labels`` may pin a fixed label set; otherwise labels
    are discovered and sorted.
    """

    stream: str
    by: str = "presence"
    bins: int = 3
    labels: tuple[str, ...] = ()

    def describe(self) -> str:
        return f"{self.stream}:{self.by}" if self.by != "presence" else self.stream

    def _stream_matches(self, event: Event) -> bool:
        if self.stream == "food":
            return isinstance(event, FoodEvent)
        return isinstance(event, LifeEvent) and event.stream == self.stream

    def _metric_edges(self, chronicle: Chronicle) -> list[float]:
        values = sorted(
            ev.metric(self.by)
            for ev in chronicle.events
            if self._stream_matches(ev) and isinstance(ev, LifeEvent)
            and ev.metric(self.by) is not None
        )
        if not values or values[0] == values[-1]:
            return []
        lo, hi = values[0], values[-1]
        width = (hi - lo) / self.bins
        return [lo + width * i for i in range(1, self.bins)]

    def labeler(self, chronicle: Chronicle):
        """Returns (labels, fn) where fn(event) -> list of labels (maybe empty)."""
        if self.by == "presence":
            labels = list(self.labels) or [self.stream]

            def fn(event: Event) -> list[str]:
                return [self.stream] if self._stream_matches(event) else []
            return labels, fn

        if self.by in ("dish", "ingredient"):
            if self.stream != "food":
                raise ValueError(f"label scheme {self.by!r} needs the food stream")

            def base(event: Event) -> list[str]:
                if not isinstance(event, FoodEvent):
                    return []
                if self.by == "dish":
                    return [event.dish] if event.dish else []
                return sorted(set(event.ingredient_ids()))

            if self.labels:
                fixed = set(self.labels)

                def fn(event: Event) -> list[str]:
                    return [lab for lab in base(event) if lab in fixed]
                return list(self.labels), fn
            discovered = sorted({lab for ev in chronicle.events for lab in base(ev)})
            return discovered, base

        # metric axis: equal-width bins over observed values
        edges = self._metric_edges(chronicle)
        n_bins = len(edges) + 1
        labels = [f"{self.by}:b{i}" for i in range(n_bins)]

        def fn(event: Event) -> list[str]:
            if not (self._stream_matches(event) and isinstance(event, LifeEvent)):
                return []
            value = event.metric(self.by)
            if value is None:
                return []
            idx = sum(1 for e in edges if value > e)
            return [labels[idx]]
        return labels, fn


@dataclass(frozen=True)
class Heatmap:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    window_minutes: float
    axis_a: str = ""
    axis_b: str = ""

    def cell(self, row: str, col: str) -> int:
        return self.counts[self.rows.index(row)][self.cols.index(col)]

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "counts": [list(r) for r in self.counts],
            "window_minutes": self.window_minutes,
            "axis_a": self.axis_a,
            "axis_b": self.axis_b,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + list(self.cols))
        for label, row in zip(self.rows, self.counts):
            writer.writerow([label] + list(row))
        return buf.getvalue()


def cooccurrence_matrix(spec_a: CategorySpec, spec_b: CategorySpec,
                        window_minutes: float, chronicle: Chronicle) -> Heatmap:
    """Count (a-category, b-category) pairs where b starts within the window
    after a (strictly later; simultaneous events do not count as "followed")."""
    if window_minutes <= 0:
        raise ValueError("window must be > 0")
    rows, label_a = spec_a.labeler(chronicle)
    cols, label_b = spec_b.labeler(chronicle)
    row_idx = {lab: i for i, lab in enumerate(rows)}
    col_idx = {lab: j for j, lab in enumerate(cols)}
    counts = [[0] * len(cols) for _ in rows]
    window_ms = window_minutes * 60_000.0

    events = chronicle.events
    for i, ea in enumerate(events):
        labels_a = [lab for lab in label_a(ea) if lab in row_idx]
        if not labels_a:
            continue
        for j in range(i + 1, len(events)):
            dt = events[j].start_ms - ea.start_ms
            if dt > window_ms:
                break
            if dt <= 0:
                continue
            for lab_b in label_b(events[j]):
                if lab_b not in col_idx:
                    continue
                for lab_a in labels_a:
                    counts[row_idx[lab_a]][col_idx[lab_b]] += 1
    return Heatmap(
        rows=tuple(rows),
        cols=tuple(cols),
        counts=tuple(tuple(r) for r in counts),
        window_minutes=window_minutes,
        axis_a=spec_a.describe(),
        axis_b=spec_b.describe(),
    )


def generate_candidates(heatmap: Heatmap, min_support: int) -> list[dict]:
    """Cells with count >= min_support, highest first, ties by label order."""
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    cells = [
        {"row": row, "col": col, "count": count}
        for row, counts in zip(heatmap.rows, heatmap.counts)
        for col, count in zip(heatmap.cols, counts)
        if count >= min_support
    ]
    cells.sort(key=lambda c: (-c["count"], c["row"], c["col"]))
    return cells
