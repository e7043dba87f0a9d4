"""
Console summaries of search runs and pruning reductions.

Everything is written to stderr so that stdout stays parseable.
"""
from typing import Optional

import click
import pandas as pd

from topoprune.graphs.models import MetricsReport, SearchTrajectory
from topoprune.pruning.models import ReductionStats
from topoprune.utils import console


def format_value(value, digits: int = 4) -> str:
    """Formats a number for display; None and NaN become ``N/A``."""
    if value is None or pd.isna(value):
        return "N/A"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _echo(line: str = "") -> None:
    if not console.is_quiet():
        click.echo(line, err=True)


def print_search_summary(trajectory: SearchTrajectory, k: Optional[int] = None,
                         report: Optional[MetricsReport] = None) -> None:
    """
    Prints initial and final ASPL, the accepted swap count and, when given,
    the metrics of the final graph.
    """
    _echo("=" * 60)
    _echo(f"📊 ASPL SEARCH SUMMARY ({trajectory.n}_{k if k is not None else '?'})")
    _echo("=" * 60)
    _echo(f"   └─ Initial ASPL:   {format_value(trajectory.initial_aspl)}")
    _echo(f"   └─ Final ASPL:     {format_value(trajectory.final_aspl)}")
    _echo(f"   └─ Recorded rows:  {len(trajectory.rows)}")
    _echo(f"   └─ Accepted swaps: {trajectory.accepted_count}")
    if report is not None:
        _echo(f"   └─ GR:             {format_value(report.gr) if report.gr is not None else 'inf'}")
        _echo(f"   └─ AOPU:           {format_value(report.aopu, 1)}")
        _echo(f"   └─ Lower bound:    {format_value(report.lower_bound)}")
    _echo("=" * 60)


def print_reduction_table(stats: ReductionStats, per_layer: bool = True) -> None:
    """Prints the per-layer weight counts and the overall reductions."""
    _echo("=" * 80)
    _echo("📊 PRUNING REDUCTION")
    _echo("=" * 80)
    if per_layer and stats.per_layer:
        frame = pd.DataFrame([s.model_dump() for s in stats.per_layer]).set_index("name")
        _echo(frame.to_string())
        _echo("-" * 80)
    _echo(f"Params: {stats.params_orig:,} -> {stats.params_pruned:,} ({stats.params_reduction:.2f}% reduction)")
    _echo(f"FLOPs:  {stats.flops_orig:,} -> {stats.flops_pruned:,} ({stats.flops_reduction:.2f}% reduction)")
    _echo(f"Prunable layers: {stats.prunable_params_reduction:.2f}% params, "
          f"{stats.prunable_flops_reduction:.2f}% FLOPs")
    _echo("=" * 80)
