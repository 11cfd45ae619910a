"""Per-arm summaries, quantile grids and the report files built from them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .metrics import MetricsRow

QUANTILES = np.linspace(0.0, 1.0, 101)

QT_CDF = "qt_cdf.csv"
QE_CDF = "qe_cdf.csv"
WT_CDF = "wt_cdf.csv"
WT_BY_ARM = "wt_by_arm.csv"
QT_BY_ARM = "qt_by_arm.csv"
SUMMARY = "summary.txt"
REPORT_FILES = (QT_CDF, QE_CDF, WT_CDF, WT_BY_ARM, QT_BY_ARM, SUMMARY)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def quantile_grid(values: Sequence[float]) -> np.ndarray:
    """Values at the 101 quantiles 0, 0.01, ..., 1 (NaN when empty)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.full(QUANTILES.size, np.nan)
    return np.quantile(v, QUANTILES)


@dataclass(frozen=True)
class ArmSummary:
    agent: str
    sessions: int
    mean_qt: float
    median_qt: float
    std_qt: float
    mean_qe: float  # over sessions with at least one guided click; NaN if none
    qe_sessions: int
    guided_fraction: float  # guided steps / all steps
    mean_wt: float
    median_wt: float
    std_wt: float
    mean_length: float


def summarize(agent: str, rows: Sequence[MetricsRow]) -> ArmSummary:
    rows = sorted(rows, key=lambda r: r.session_id)
    qt = np.array([r.q_t for r in rows])
    wt = np.array([r.w_t for r in rows])
    qe = np.array([r.q_e for r in rows if r.q_e_defined])
    steps = sum(r.length for r in rows)
    nan = float("nan")
    return ArmSummary(
        agent=agent,
        sessions=len(rows),
        mean_qt=float(qt.mean()) if rows else nan,
        median_qt=float(np.median(qt)) if rows else nan,
        std_qt=float(qt.std()) if rows else nan,
        mean_qe=float(qe.mean()) if qe.size else nan,
        qe_sessions=int(qe.size),
        guided_fraction=sum(r.n_guided for r in rows) / steps if steps else nan,
        mean_wt=float(wt.mean()) if rows else nan,
        median_wt=float(np.median(wt)) if rows else nan,
        std_wt=float(wt.std()) if rows else nan,
        mean_length=steps / len(rows) if rows else nan,
    )


def paired_margin(a: Sequence[MetricsRow], b: Sequence[MetricsRow], metric: str = "q_t") -> float:
    """Mean over sessions of a - b, matched on session_id."""
    bb = {r.session_id: getattr(r, metric) for r in b}
    diffs = [getattr(r, metric) - bb[r.session_id] for r in a if r.session_id in bb]
    if not diffs:
        raise ValueError("no paired sessions")
    return float(np.mean(diffs))


def _write_grid(path: Path, columns: dict[str, Sequence[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["quantile", *columns])
        if not columns:
            return
        grids = [quantile_grid(v) for v in columns.values()]
        for i, q in enumerate(QUANTILES):
            w.writerow([f"{q:.2f}", *(_fmt(g[i]) for g in grids)])


def _write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


def emit_report(summaries: Mapping[str, Sequence[MetricsRow]], path, config_text: Optional[str] = None) -> list[Path]:
    """Write the report files for per-arm metrics rows into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    arms = {a: sorted(rows, key=lambda r: r.session_id) for a, rows in summaries.items()}
    stats = [summarize(a, rows) for a, rows in arms.items()]

    _write_grid(out / QT_CDF, {a: [r.q_t for r in rows] for a, rows in arms.items()})
    _write_grid(out / WT_CDF, {a: [r.w_t for r in rows] for a, rows in arms.items()})
    qe_cols = {}
    for a, rows in arms.items():
        qe = [r.q_e for r in rows if r.q_e_defined]
        if qe:
            qe_cols[f"{a}_qe"] = qe
            qe_cols[f"{a}_qt"] = [r.q_t for r in rows]
    _write_grid(out / QE_CDF, qe_cols)

    _write_table(out / WT_BY_ARM, ("agent", "sessions", "mean_wt", "median_wt", "std_wt", "mean_length"),
                 [(s.agent, s.sessions, s.mean_wt, s.median_wt, s.std_wt, s.mean_length) for s in stats])
    _write_table(out / QT_BY_ARM, ("agent", "sessions", "mean_qt", "median_qt", "std_qt", "mean_qe",
                                   "qe_sessions", "guided_fraction"),
                 [(s.agent, s.sessions, s.mean_qt, s.median_qt, s.std_qt, s.mean_qe, s.qe_sessions,
                   s.guided_fraction) for s in stats])

    lines = [f"{'agent':<10} {'sessions':>8} {'mean_qt':>9} {'mean_qe':>9} {'guided':>7} "
             f"{'mean_wt':>9} {'length':>7}"]
    for s in stats:
        lines.append(f"{s.agent:<10} {s.sessions:>8d} {s.mean_qt:>9.4f} {s.mean_qe:>9.4f} "
                     f"{s.guided_fraction:>7.3f} {s.mean_wt:>9.2f} {s.mean_length:>7.1f}")
    if "febr" in arms:
        for a in arms:
            if a != "febr" and arms[a]:
                lines.append(f"paired q_t margin febr - {a}: {paired_margin(arms['febr'], arms[a]):+.4f}")
    if config_text:
        lines += ["", "# configuration", config_text.rstrip()]
    (out / SUMMARY).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [out / f for f in REPORT_FILES]
