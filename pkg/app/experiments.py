"""
Seed and node-count sweeps over the simulation, with CSV output and a
textual trend summary.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .config import SCHEDULERS, ConfigError, SimulationConfig, list_of_ints, load_config_file
from .simulation import run

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['scheduler', 'node_count', 'mcv_count', 'seed',
               'efficiency_pct', 'mean_delay_s', 'survival_pct', 'travel_m', 'error']
METRIC_COLUMNS = CSV_COLUMNS[4:8]
MEAN_SEED = 'mean'

# Slack for the directional trend checks on seed means
TREND_TOLERANCE = 1e-9

# Keys that belong to the sweep itself rather than to a single run
SWEEP_KEYS = ('node_counts', 'seeds', 'schedulers', 'output_path', 'workers')


@dataclass
class ExperimentConfig:
    node_counts: List[int] = field(default_factory=lambda: [100, 200, 300, 400, 500])
    seeds: List[int] = field(default_factory=lambda: list(range(1, 21)))
    schedulers: List[str] = field(default_factory=lambda: ['poised'])
    output_path: str = 'results.csv'
    workers: int = 1
    base: SimulationConfig = field(default_factory=SimulationConfig)

    def __post_init__(self):
        if not self.node_counts:
            raise ConfigError('node_counts', 'at least one node count is required')
        if any(count < 1 for count in self.node_counts):
            raise ConfigError('node_counts', f"node counts must be positive, got {self.node_counts}")
        if not self.seeds:
            raise ConfigError('seeds', 'at least one seed is required')
        if not self.schedulers:
            raise ConfigError('schedulers', 'at least one scheduler is required')
        for name in self.schedulers:
            if name not in SCHEDULERS:
                raise ConfigError('schedulers', f"unknown scheduler {name!r}")
        if self.workers < 1:
            raise ConfigError('workers', 'must be at least 1')

    @property
    def mcv_count(self) -> int:
        return self.base.mcv_count

    @property
    def horizon(self) -> float:
        return self.base.horizon

    @property
    def isac(self) -> bool:
        return self.base.isac

    def cells(self) -> List[Dict[str, Any]]:
        """Run cells in output order: node count, then seed, then scheduler."""
        return [{'node_count': n, 'seed': s, 'scheduler': name}
                for n in self.node_counts for s in self.seeds for name in self.schedulers]


def parse_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Merge a flat config file with flag overrides (flags win) and validate.
    Unset keys fall back to the defaults; any bad key raises ConfigError.
    """
    values: Dict[str, Any] = load_config_file(path) if path else {}
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})

    # Single-run spellings accepted in sweep files
    if 'scheduler' in values:
        values.setdefault('schedulers', values.pop('scheduler'))
    if 'node_count' in values and 'node_counts' not in values:
        values['node_counts'] = values.pop('node_count')
    if 'seed' in values and 'seeds' not in values:
        values['seeds'] = values.pop('seed')

    sweep = {key: values.pop(key) for key in SWEEP_KEYS if key in values}
    base = SimulationConfig.from_mapping(values)

    kwargs: Dict[str, Any] = {'base': base}
    if 'node_counts' in sweep:
        kwargs['node_counts'] = list_of_ints('node_counts', sweep['node_counts'])
    if 'seeds' in sweep:
        kwargs['seeds'] = list_of_ints('seeds', sweep['seeds'])
    if 'schedulers' in sweep:
        raw = sweep['schedulers']
        items = raw if isinstance(raw, (list, tuple)) else str(raw).split(',')
        kwargs['schedulers'] = [str(item).strip().lower() for item in items if str(item).strip()]
    if 'output_path' in sweep:
        kwargs['output_path'] = str(sweep['output_path'])
    if 'workers' in sweep:
        try:
            kwargs['workers'] = int(sweep['workers'])
        except (TypeError, ValueError) as e:
            raise ConfigError('workers', f"expected an integer, got {sweep['workers']!r}") from e
    return ExperimentConfig(**kwargs)


def run_cell(base: Dict[str, Any], node_count: int, seed: int, scheduler: str) -> Dict[str, Any]:
    """One sweep cell; a failure comes back as NaN metrics with the error text in its row."""
    row = {'scheduler': scheduler, 'node_count': node_count, 'mcv_count': base['mcv_count'], 'seed': seed,
           'error': ''}
    try:
        cfg = SimulationConfig.from_mapping({**base, 'node_count': node_count, 'seed': seed,
                                             'scheduler': scheduler})
        report, _ = run(cfg)
        row.update(efficiency_pct=report.energy_usage_efficiency, mean_delay_s=report.mean_charging_delay,
                   survival_pct=report.survival_rate, travel_m=report.travel_distance_total)
    except Exception as e:
        logger.exception(f"Sweep cell {scheduler}/{node_count}/seed {seed} failed")
        row.update({column: math.nan for column in METRIC_COLUMNS})
        row['error'] = f"{type(e).__name__}: {e}"
    return row


def run_sweep(cfg: ExperimentConfig, output_path: Optional[str] = None) -> pd.DataFrame:
    """
    Run every (node_count, seed, scheduler) cell, then append one mean row per
    (node_count, scheduler). The table is written to ``output_path`` (or the
    configured path) and returned.
    """
    base = cfg.base.to_dict()
    cells = cfg.cells()
    logger.info(f"Sweep: {len(cells)} runs over node counts {cfg.node_counts}, "
                f"{len(cfg.seeds)} seeds, schedulers {cfg.schedulers}, {cfg.workers} worker(s)")

    args = ([base] * len(cells), [c['node_count'] for c in cells], [c['seed'] for c in cells],
            [c['scheduler'] for c in cells])
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(run_cell, *args))
    else:
        rows = list(map(run_cell, *args))

    table = pd.DataFrame(rows, columns=CSV_COLUMNS)
    failed = failed_cells(table)
    if len(failed):
        logger.error(f"{len(failed)} of {len(cells)} sweep cells failed")
    table = pd.concat([table, seed_means(table, cfg)], ignore_index=True)

    path = output_path or cfg.output_path
    if path:
        table.to_csv(path, index=False)
        logger.info(f"Wrote {len(table)} rows to {path}")
    return table


def failed_cells(table: pd.DataFrame) -> pd.DataFrame:
    """Run rows whose simulation raised."""
    errors = table['error'].fillna('').astype(str)
    return table[errors != '']


def seed_means(runs: pd.DataFrame, cfg: ExperimentConfig) -> pd.DataFrame:
    """Per (node_count, scheduler) means over seeds, in configured order."""
    rows = []
    for node_count in cfg.node_counts:
        for scheduler in cfg.schedulers:
            subset = runs[(runs['node_count'] == node_count) & (runs['scheduler'] == scheduler)]
            row = {'scheduler': scheduler, 'node_count': node_count, 'mcv_count': cfg.mcv_count,
                   'seed': MEAN_SEED, 'error': ''}
            for column in METRIC_COLUMNS:
                values = subset[column].to_numpy(dtype=float)
                values = values[~np.isnan(values)]
                row[column] = float(np.mean(values)) if len(values) else math.nan
            rows.append(row)
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def load_results(csv_path: str) -> pd.DataFrame:
    try:
        table = pd.read_csv(csv_path, dtype={'seed': str})
    except pd.errors.EmptyDataError:
        raise ValueError(f"{csv_path} is empty") from None
    if list(table.columns) != CSV_COLUMNS:
        raise ValueError(f"{csv_path} has columns {list(table.columns)}, expected {CSV_COLUMNS}")
    if table.empty:
        raise ValueError(f"{csv_path} has a header but no rows")
    return table


def summarize(csv_path: str) -> str:
    """Per-scheduler means by node count plus the directional trend checks."""
    table = load_results(csv_path)
    means = table[table['seed'] == MEAN_SEED]
    if means.empty:
        runs = table.copy()
        means = runs.groupby(['scheduler', 'node_count'], as_index=False)[METRIC_COLUMNS].mean()
    means = means.sort_values(['scheduler', 'node_count'])

    lines = []
    failed = failed_cells(table[table['seed'] != MEAN_SEED])
    if len(failed):
        lines.append(f"failed cells: {len(failed)}, first error: {failed['error'].iloc[0]}")
    for scheduler, group in means.groupby('scheduler', sort=True):
        lines.append(f"== {scheduler} ==")
        lines.append(f"{'nodes':>6} {'eff %':>10} {'delay s':>12} {'survival %':>11} {'travel m':>14}")
        for _, row in group.iterrows():
            lines.append(f"{int(row['node_count']):>6} {row['efficiency_pct']:>10.4f} {row['mean_delay_s']:>12.2f} "
                         f"{row['survival_pct']:>11.2f} {row['travel_m']:>14.1f}")

        survival = group['survival_pct'].to_numpy(dtype=float)
        delay = group['mean_delay_s'].to_numpy(dtype=float)
        lines.append(f"survival non-increasing: {_verdict(np.all(np.diff(survival) <= TREND_TOLERANCE))}")
        lines.append(f"delay non-decreasing: {_verdict(np.all(np.diff(delay) >= -TREND_TOLERANCE))}")

    schedulers = set(means['scheduler'])
    if {'poised', 'nearest'} <= schedulers:
        lines.append("== poised vs nearest travel ==")
        poised = means[means['scheduler'] == 'poised'].set_index('node_count')['travel_m']
        nearest = means[means['scheduler'] == 'nearest'].set_index('node_count')['travel_m']
        for node_count in sorted(set(poised.index) & set(nearest.index)):
            ok = poised[node_count] <= nearest[node_count] + TREND_TOLERANCE
            lines.append(f"{int(node_count):>6}: poised {poised[node_count]:.1f} m, "
                         f"nearest {nearest[node_count]:.1f} m -> {_verdict(ok)}")
    return '\n'.join(lines)


def _verdict(ok) -> str:
    return 'PASS' if bool(ok) else 'FAIL'
