"""Per-session quality and engagement metrics."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import Sequence

from ..user_env import SessionLog


@dataclass(frozen=True)
class MetricsRow:
    session_id: int
    q_e: float  # mean quality over expert-guided clicks; 0.0 when there were none
    q_t: float
    w_t: float
    n_guided: int  # |S_e|, expert-guided steps
    length: int  # l
    n_clicked: int
    n_guided_clicked: int
    q_prime: float  # summed quality of clicks on arbitrary (non-guided) slates
    q_e_defined: bool

    def __post_init__(self):
        if not self.length >= self.n_guided >= 0:
            raise ValueError("need l >= |S_e| >= 0")


METRIC_COLUMNS = tuple(f.name for f in fields(MetricsRow))


def compute_metrics(log: SessionLog, count_no_click: bool = False) -> MetricsRow:
    """Q_e, Q_T and W_T of one session.

    Q_T averages over clicked steps; with ``count_no_click`` every step
    counts and a skipped slate contributes quality 0.
    """
    if not log.steps:
        raise ValueError("empty session log")
    clicked = [s for s in log.steps if s.quality is not None]
    guided = [s.quality for s in clicked if s.expert_guided]
    arbitrary = [s.quality for s in clicked if not s.expert_guided]
    total_q = sum(s.quality for s in clicked)
    denom = len(log.steps) if count_no_click else len(clicked)
    return MetricsRow(
        session_id=log.session_id,
        q_e=sum(guided) / len(guided) if guided else 0.0,
        q_t=total_q / denom if denom else 0.0,
        w_t=sum(s.response.watch_time for s in log.steps),
        n_guided=sum(s.expert_guided for s in log.steps),
        length=len(log.steps),
        n_clicked=len(clicked),
        n_guided_clicked=len(guided),
        q_prime=sum(arbitrary),
        q_e_defined=bool(guided),
    )


def save_metrics(rows: Sequence[MetricsRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_COLUMNS)
        for r in rows:
            w.writerow([f"{x:.9g}" if isinstance(x, float) else int(x) for x in astuple(r)])


def load_metrics(path) -> list[MetricsRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != METRIC_COLUMNS:
            raise ValueError(f"{path}: unexpected metrics header")
        out = []
        for row in reader:
            sid, qe, qt, wt, ng, ln, nc, ngc, qp, defined = row
            out.append(MetricsRow(int(sid), float(qe), float(qt), float(wt), int(ng), int(ln), int(nc),
                                  int(ngc), float(qp), defined == "1"))
    return out
