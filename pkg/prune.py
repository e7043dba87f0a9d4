"""
Command-line entry point of the topology-driven pruning toolkit.

Every subcommand writes its machine-readable result as JSON to stdout and its
human-readable progress to stderr.
"""
import json
import sys
from enum import IntEnum
from typing import Optional

import click
import numpy as np

from topoprune.graphs.core import aspl, complete_graph, make_graph, read_graph, write_graph
from topoprune.graphs.metrics import aopu_per_node, gr_all_nodes, metric_correlations, metrics_report, snapshot_metrics
from topoprune.graphs.models import DEFAULT_ATTEMPTS, GraphKind, SearchConfig
from topoprune.graphs.search import minimize_aspl, write_trajectory
from topoprune.pruning.masks import load_model_spec, model_masks, reduction_stats, write_maskset
from topoprune.pruning.sparse_engine import bench
from topoprune.tiny_nn.mlp import build, graph_reach_summary
from topoprune.utils import console
from topoprune.utils.errors import OracleMismatch, TopopruneError
from topoprune.visualization.heatmap import plot_mask_heatmap
from topoprune.visualization.text import print_reduction_table, print_search_summary
from topoprune.visualization.trajectory import plot_metric_correlation, plot_trajectory


class ExitStatus(IntEnum):
    OK = 0
    USAGE = 1
    INVALID = 2
    IO_ERROR = 3


class PruneGroup(click.Group):
    """Click group that maps exceptions onto ``ExitStatus``."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(ExitStatus.USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            console.error("Aborted!")
            sys.exit(ExitStatus.USAGE)
        except TopopruneError as e:
            console.error(f"{type(e).__name__}: {e}")
            sys.exit(e.exit_code)
        except OSError as e:
            console.error(f"I/O error: {e}")
            sys.exit(ExitStatus.IO_ERROR)
        if standalone_mode:
            sys.exit(rv if isinstance(rv, int) else ExitStatus.OK)
        return rv


def _emit_json(data: dict) -> None:
    click.echo(json.dumps(data))


def _seed(ctx: click.Context, seed: Optional[int]) -> int:
    return seed if seed is not None else ctx.obj["seed"]


@click.group(cls=PruneGroup)
@click.option("--seed", default=0, show_default=True, type=int, help="Default seed for every subcommand.")
@click.option("--quiet", is_flag=True, help="Silence progress messages on stderr.")
@click.pass_context
def cli(ctx, seed, quiet):
    """Search regular graphs and turn them into pruning masks."""
    console.set_quiet(quiet)
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed


@cli.command()
@click.option("--nodes", "-n", required=True, type=click.IntRange(min=1), help="Node count N.")
@click.option("--degree", "-k", required=True, type=click.IntRange(min=1), help="Degree K.")
@click.option("--kind", default="ring", show_default=True,
              type=click.Choice([GraphKind.RING_LATTICE.value, GraphKind.RANDOM_REGULAR.value]))
@click.option("--seed", type=int, default=None, help="Seed for random graphs.")
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="Edge-list file to write.")
@click.pass_context
def gen(ctx, nodes, degree, kind, seed, output):
    """Generate an initial regular graph."""
    g = make_graph(GraphKind(kind), nodes, degree, _seed(ctx, seed))
    write_graph(g, output)
    keep_ratio = g.k / g.n
    console.success(f"Wrote {g.n}_{g.k} {kind} graph to {output}: keeps {100 * keep_ratio:.2f}% of the blocks")
    _emit_json({"n": g.n, "k": g.k, "kind": kind, "aspl": aspl(g), "keep_ratio": keep_ratio, "output": output})


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--attempts", "-m", default=DEFAULT_ATTEMPTS, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", type=int, default=None)
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="Optimized edge list.")
@click.option("--trace", type=click.Path(dir_okay=False), help="Trajectory CSV (attempt,accepted,aspl).")
@click.option("--record-every", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--snapshots", type=click.Path(dir_okay=False), help="CSV of ASPL/GR/AOPU per snapshot.")
@click.option("--snapshot-every", default=100, show_default=True, type=click.IntRange(min=1),
              help="Accepted swaps between snapshots.")
@click.option("--layers", default=15, show_default=True, type=click.IntRange(min=2),
              help="Network depth used for the AOPU of snapshots and the final graph.")
@click.option("--plot-dir", type=click.Path(file_okay=False), help="Save trajectory plots here.")
@click.pass_context
def search(ctx, input_path, attempts, seed, output, trace, record_every, snapshots, snapshot_every,
           layers, plot_dir):
    """Minimize the ASPL of a graph by edge swaps."""
    g0 = read_graph(input_path)
    cfg = SearchConfig(m=attempts, seed=_seed(ctx, seed), record_every=record_every,
                       snapshot_every=snapshot_every if snapshots else 0)
    g, trajectory = minimize_aspl(g0, cfg)
    write_graph(g, output)
    if trace:
        write_trajectory(trajectory, trace)
        console.success(f"Trajectory saved to {trace}")
    if snapshots:
        frame = snapshot_metrics(trajectory.snapshots, layers=layers)
        frame.to_csv(snapshots, index=False, float_format="%.6f")
        console.success(f"{len(frame)} snapshot metrics saved to {snapshots}")
        if plot_dir and len(frame) > 2:
            plot_metric_correlation(frame, metric_correlations(frame), output_dir=plot_dir)
    if plot_dir:
        plot_trajectory(trajectory, output_dir=plot_dir)
    print_search_summary(trajectory, k=g.k, report=metrics_report(g, layers=layers))
    _emit_json({
        "initial_aspl": trajectory.initial_aspl,
        "final_aspl": aspl(g),
        "accepted": trajectory.accepted_count,
        "attempts": attempts,
        "output": output,
    })


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--layers", default=15, show_default=True, type=click.IntRange(min=2))
@click.option("--group-size", default=1, show_default=True, type=click.IntRange(min=1))
def metrics(input_path, layers, group_size):
    """Report ASPL, GR, AOPU and the ASPL lower bound."""
    g = read_graph(input_path)
    _emit_json(metrics_report(g, layers=layers, group_size=group_size).to_json_dict())


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model", default="vgg16", show_default=True,
              help="Bundled model (vgg16, resnet18, resnet56, resnet50) or a model spec JSON file.")
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="MaskSet JSON to write.")
@click.option("--dense", is_flag=True, help="Use the dense mapping (complete graph with self-loops).")
@click.option("--heatmap-dir", type=click.Path(file_okay=False), help="Save the block mask heatmap here.")
def mask(input_path, model, output, dense, heatmap_dir):
    """Map a graph onto a model's layers and report the reductions."""
    g = read_graph(input_path)
    spec = load_model_spec(model)
    if dense:
        g = complete_graph(g.n)
    maskset = model_masks(g, spec, self_loops=dense)
    stats = reduction_stats(maskset, spec)
    write_maskset(maskset, output)
    if heatmap_dir:
        plot_mask_heatmap(maskset, output_dir=heatmap_dir)
    print_reduction_table(stats)
    _emit_json({
        "model": spec.name,
        "params_orig": stats.params_orig,
        "params_pruned": stats.params_pruned,
        "flops_orig": stats.flops_orig,
        "flops_pruned": stats.flops_pruned,
        "params_reduction": round(stats.params_reduction, 2),
        "flops_reduction": round(stats.flops_reduction, 2),
        "prunable_params_reduction": round(stats.prunable_params_reduction, 2),
        "prunable_flops_reduction": round(stats.prunable_flops_reduction, 2),
        "dense_layers": maskset.dense_layers,
    })


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--layers", default=15, show_default=True, type=click.IntRange(min=2))
@click.option("--group-size", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", type=int, default=None)
@click.pass_context
def verify(ctx, input_path, layers, group_size, seed):
    """Check GR and AOPU against gradients of the graph's MLP."""
    g = read_graph(input_path)
    gr_graph_nodes = gr_all_nodes(g)
    aopu_graph_nodes = aopu_per_node(g, layers, group_size)

    m = build(g, layers, s=group_size, seed=_seed(ctx, seed))
    summary = graph_reach_summary(m)
    counts = np.asarray(summary.counts, dtype=np.int64)

    deep_enough = [j for j in range(g.n) if layers - 1 >= gr_graph_nodes[j]]
    gr_ok = all(summary.gr_observed[j] == gr_graph_nodes[j] for j in deep_enough)
    aopu_ok = bool(np.array_equal(counts, aopu_graph_nodes))
    observed = [summary.gr_observed[j] for j in deep_enough]

    _emit_json({
        "aopu_graph": float(aopu_graph_nodes.mean()),
        "aopu_gradient": summary.mean_reached,
        "gr_graph": float(gr_graph_nodes.mean()),
        "gr_gradient": float(np.mean(observed)) if observed else None,
        "gr_nodes_checked": len(deep_enough),
        "checks": {"aopu": "PASS" if aopu_ok else "FAIL", "gr": "PASS" if gr_ok else "FAIL"},
    })
    if not (aopu_ok and gr_ok):
        raise OracleMismatch("graph metrics disagree with the gradient oracle")
    console.success("Graph metrics match the gradient oracle")


@cli.command(name="bench")
@click.option("--nodes", "-n", default=64, show_default=True, type=click.IntRange(min=2))
@click.option("--degree", "-k", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--group-size", "-s", default=8, show_default=True, type=click.IntRange(min=1))
@click.option("--batch", default=64, show_default=True, type=click.IntRange(min=1))
@click.option("--repeats", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--threads", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--self-check", is_flag=True, help="Compare against the naive multiply before timing.")
@click.option("--seed", type=int, default=None)
@click.pass_context
def bench_cmd(ctx, nodes, degree, group_size, batch, repeats, threads, self_check, seed):
    """Time the gather-dense multiply against the naive masked multiply."""
    if degree < nodes and (nodes * degree) % 2:
        raise click.BadParameter(f"no {degree}-regular graph exists on {nodes} nodes (odd n*k)",
                                 param_hint="--degree")
    report = bench(nodes, degree, group_size, batch, repeats, seed=_seed(ctx, seed),
                   threads=threads, self_check=self_check)
    console.info(f"naive {report.t_naive_ms:.3f} ms, regular {report.t_regular_ms:.3f} ms, "
                 f"multiply-add ratio {report.flops_ratio:.4f}")
    click.echo(report.model_dump_json())


if __name__ == "__main__":
    cli()
