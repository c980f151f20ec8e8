"""
Scenario report exports: CSV table, beam utilization chart, human-friendly numbers
"""

import csv
import io
from typing import Iterable, Optional

import humanize
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from app.models.results import IsolationVerdict, MetricsReport

CSV_COLUMNS = [
    "slice_id", "offered_mbps", "carried_mbps", "mean_delay_ms", "p99_delay_ms",
    "loss_ratio", "packets_in", "packets_carried", "packets_dropped", "packets_in_flight", "passed",
]


def report_to_csv(report: MetricsReport, verdicts: Optional[Iterable[IsolationVerdict]] = None) -> str:
    """One row per slice, sorted by slice_id; `passed` is empty without a verdict"""
    passed = {v.slice_id: v.passed for v in verdicts or []}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for slice_id in sorted(report.slices):
        m = report.slices[slice_id]
        writer.writerow([
            slice_id,
            f"{m.offered_mbps:.6f}",
            f"{m.carried_mbps:.6f}",
            f"{m.mean_delay_ms:.6f}",
            f"{m.p99_delay_ms:.6f}",
            f"{m.loss_ratio:.6f}",
            m.packets_in,
            m.packets_carried,
            m.packets_dropped,
            m.packets_in_flight,
            "" if slice_id not in passed else str(passed[slice_id]).lower(),
        ])
    return buffer.getvalue()


def utilization_figure(report: MetricsReport) -> go.Figure:
    """One subplot per link direction, one line per beam"""
    fig = make_subplots(rows=2, cols=1, shared_xaxes=True, subplot_titles=("Forward link", "Return link"))
    for series in report.beams:
        row = 1 if series.direction.value == "forward" else 2
        fig.add_trace(
            go.Scatter(
                x=series.times_s,
                y=[u * 100 for u in series.utilization],
                mode="lines",
                name=f"{series.beam_id} ({series.direction.value})",
                hovertemplate="Time: %{x:.2f} s<br>Busy: %{y:.1f}%<extra></extra>",
            ),
            row=row, col=1,
        )
    fig.update_yaxes(range=[0, 105], title_text="Utilization (%)")
    fig.update_xaxes(title_text="Time (s)", row=2, col=1)
    fig.update_layout(height=700, title_text=f"Beam utilization (seed {report.seed}, {report.duration_s:g} s)")
    return fig


def write_utilization_html(report: MetricsReport, path: str) -> None:
    utilization_figure(report).write_html(path)


def format_mbps(value: float) -> str:
    return f"{humanize.intcomma(round(value, 3))} Mbps"


def format_count(value: int) -> str:
    return humanize.intcomma(value)


def format_ms(value: float) -> str:
    return f"{humanize.intcomma(round(value, 2))} ms"
