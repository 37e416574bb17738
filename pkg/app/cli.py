"""
``wrsn`` command group: sweeps, summaries, single runs and topology dumps.
Registered on the Flask app (``flask wrsn ...``) and runnable standalone
through ``experiment_cli.py``.
"""

import logging
import os

import click

from .config import ConfigError, SimulationConfig, load_config_file
from .experiments import failed_cells, parse_config, run_sweep, summarize as summarize_results
from .network import build_topology, dump_topology
from .simulation import run

logger = logging.getLogger(__name__)


def _output_path(path):
    """Relative outputs land in WRSN_OUTPUT_DIR when it is set."""
    out_dir = os.environ.get('WRSN_OUTPUT_DIR')
    if path and out_dir and not os.path.isabs(path):
        os.makedirs(out_dir, exist_ok=True)
        return os.path.join(out_dir, path)
    return path


@click.group()
def wrsn():
    """WRSN multi-MCV charging experiments."""


@wrsn.command()
@click.option('--nodes', help='Comma-separated node counts, e.g. 100,200,300')
@click.option('--mcvs', type=int, help='Number of MCVs')
@click.option('--seeds', help='Comma-separated seeds, or a count N for seeds 1..N')
@click.option('--scheduler', help='poised, nearest, fcfs, or a comma-separated list')
@click.option('--isac/--no-isac', default=None, help='ISAC deduplication on or off')
@click.option('--horizon', type=float, help='Simulated seconds per run')
@click.option('--out', 'output_path', help='CSV output path')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), help='key = value file')
@click.option('--workers', type=int, help='Parallel worker processes')
def sweep(nodes, mcvs, seeds, scheduler, isac, horizon, output_path, config_path, workers):
    """Run a node-count x seed x scheduler sweep and write the CSV table."""
    if seeds is not None and seeds.strip().isdigit() and ',' not in seeds:
        seeds = ','.join(str(s) for s in range(1, int(seeds) + 1))
    overrides = {'node_counts': nodes, 'mcv_count': mcvs, 'seeds': seeds, 'schedulers': scheduler,
                 'isac': isac, 'horizon': horizon, 'output_path': output_path, 'workers': workers}
    try:
        cfg = parse_config(config_path, overrides)
    except ConfigError as e:
        raise click.ClickException(str(e))

    path = _output_path(cfg.output_path)
    table = run_sweep(cfg, path)
    click.echo(f"{len(table)} rows written to {path}")
    failed = failed_cells(table)
    if len(failed):
        raise click.ClickException(f"{len(failed)} sweep cell(s) failed, see the error column in {path}")


@wrsn.command()
@click.argument('csv_path', type=click.Path(exists=True, dir_okay=False))
def summarize(csv_path):
    """Print per-scheduler means and trend checks for a sweep CSV."""
    try:
        click.echo(summarize_results(csv_path))
    except ValueError as e:
        raise click.ClickException(str(e))


@wrsn.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), help='key = value file')
@click.option('--set', 'assignments', multiple=True, help='key=value override, repeatable')
@click.option('--events', 'events_path', help='Write the event log to this file')
def simulate(config_path, assignments, events_path):
    """Run one simulation and print its metrics."""
    try:
        values = load_config_file(config_path) if config_path else {}
        for assignment in assignments:
            if '=' not in assignment:
                raise ConfigError(assignment, "expected key=value")
            key, value = assignment.split('=', 1)
            values[key.strip()] = value.strip()
        cfg = SimulationConfig.from_mapping(values)
    except ConfigError as e:
        raise click.ClickException(str(e))

    report, log = run(cfg)
    for key, value in report.to_dict().items():
        if key != 'per_mcv':
            click.echo(f"{key}: {value}")
    for mcv_id, ledger in report.per_mcv.items():
        click.echo(f"mcv {mcv_id}: " + ', '.join(f"{k}={v:.3f}" for k, v in ledger.to_dict().items()))

    if events_path:
        path = _output_path(events_path)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write('\n'.join(log.to_lines()) + '\n')
        click.echo(f"{len(log)} events written to {path}")


@wrsn.command()
@click.option('--seed', type=int, default=1, show_default=True)
@click.option('--nodes', type=int, default=100, show_default=True)
@click.option('--area', type=float, default=400.0, show_default=True)
def topology(seed, nodes, area):
    """Print a seeded topology in the text dump format."""
    try:
        cfg = SimulationConfig(node_count=nodes, area_side=area, seed=seed)
    except ConfigError as e:
        raise click.ClickException(str(e))
    net = build_topology(cfg.seed, cfg.node_count, cfg.area_side, cfg.comm_range, cfg.sensing_range,
                         capacity=cfg.node_capacity, threshold_ratio=cfg.request_threshold_ratio,
                         drain_rate_range=(cfg.drain_rate_min, cfg.drain_rate_max),
                         initial_residual_min_ratio=cfg.initial_residual_min_ratio)
    click.echo(dump_topology(net), nl=False)
