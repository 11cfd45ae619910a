"""Expert state dataset: one record per demonstration step, persisted as CSV."""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .domain import Video, video_score

SIG = "{:.9g}"


class DatasetParseError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


class ConfigMismatch(ValueError):
    pass


def _canon(x: float) -> float:
    return float(SIG.format(float(x)))


def corpus_descriptor(videos: Sequence[Video], n_topics: int) -> tuple[float, ...]:
    """Flattened (topic / n_topics, length, score) per video, sorted by (topic, score)."""
    rows = sorted((v.topic / n_topics, v.length, video_score(v)) for v in videos)
    return tuple(x for row in rows for x in row)


@dataclass(frozen=True)
class ExpertStateRecord:
    expert_id: int
    e_s: tuple[float, ...]
    e_c: tuple[float, ...]
    clicked_topic: int  # -1 when nothing was clicked
    watch_time: float
    s_v: float
    engagement_rate: float
    evaluated_quality: float
    abstract_state: int
    policy_action: int

    def __post_init__(self):
        # numeric fields are stored at 9 significant digits so save/load is exact
        object.__setattr__(self, "e_s", tuple(_canon(x) for x in self.e_s))
        object.__setattr__(self, "e_c", tuple(_canon(x) for x in self.e_c))
        for name in ("watch_time", "s_v", "engagement_rate", "evaluated_quality"):
            object.__setattr__(self, name, _canon(getattr(self, name)))


@dataclass(frozen=True)
class DatasetHeader:
    n_topics: int
    corpus_size: int
    n_states: int
    n_actions: int


def build_dataset(trajectories, policy: np.ndarray, n_topics: int) -> list[ExpertStateRecord]:
    """One record per trajectory step, tagged with the learned policy's action for its state."""
    best = np.asarray(policy).argmax(axis=1)
    records = []
    for traj in trajectories:
        for step in traj.steps:
            sm = step.state_model
            r = sm.response_state
            clicked = r.clicked is not None
            records.append(ExpertStateRecord(
                traj.expert_id, sm.expert_state, corpus_descriptor(sm.video_state, n_topics),
                r.topic if clicked else -1, r.watch_time,
                r.evaluation.mean() if r.evaluation else 0.0, r.engagement_rate,
                r.observed_quality if clicked else 0.0, step.abstract_state,
                int(best[step.abstract_state])))
    return records


def _columns(h: DatasetHeader) -> list[str]:
    return (["expert_id"] + [f"e_s_{i}" for i in range(h.n_topics)]
            + [f"e_c_{i}" for i in range(3 * h.corpus_size)]
            + ["clicked_topic", "watch_time", "s_v", "engagement_rate", "evaluated_quality",
               "abstract_state", "policy_action"])


def save_dataset(records: Sequence[ExpertStateRecord], path, header: DatasetHeader) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + ",".join(f"{f.name}={getattr(header, f.name)}" for f in fields(header)) + "\n")
        w = csv.writer(fh)
        w.writerow(_columns(header))
        for r in records:
            if len(r.e_s) != header.n_topics or len(r.e_c) != 3 * header.corpus_size:
                raise ValueError("record layout disagrees with header")
            w.writerow([r.expert_id, *(SIG.format(x) for x in r.e_s), *(SIG.format(x) for x in r.e_c),
                        r.clicked_topic, *(SIG.format(getattr(r, n)) for n in
                                           ("watch_time", "s_v", "engagement_rate", "evaluated_quality")),
                        r.abstract_state, r.policy_action])


def load_dataset(path, expected: DatasetHeader | None = None) -> tuple[DatasetHeader, list[ExpertStateRecord]]:
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise DatasetParseError(path, 1, "missing config header")
        try:
            kv = dict(item.split("=", 1) for item in first[2:].strip().split(","))
            header = DatasetHeader(**{k: int(v) for k, v in kv.items()})
        except (TypeError, ValueError) as exc:
            raise DatasetParseError(path, 1, f"bad config header ({exc})") from exc
        if expected is not None and header != expected:
            raise ConfigMismatch(f"{path}: dataset built for {header}, current config is {expected}")
        rows = csv.reader(fh)
        cols = next(rows, None)
        if cols != _columns(header):
            raise DatasetParseError(path, 2, "column header does not match config header")
        n, m = header.n_topics, 3 * header.corpus_size
        records = []
        for lineno, row in enumerate(rows, start=3):
            if len(row) != len(cols):
                raise DatasetParseError(path, lineno, f"expected {len(cols)} fields, got {len(row)}")
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise DatasetParseError(path, lineno, str(exc)) from exc
            rec = ExpertStateRecord(int(vals[0]), tuple(vals[1:1 + n]), tuple(vals[1 + n:1 + n + m]),
                                    int(vals[1 + n + m]), *vals[2 + n + m:6 + n + m],
                                    int(vals[6 + n + m]), int(vals[7 + n + m]))
            if not 0 <= rec.policy_action < header.n_actions or not 0 <= rec.abstract_state < header.n_states:
                raise DatasetParseError(path, lineno, "state or action id out of range")
            records.append(rec)
    return header, records
