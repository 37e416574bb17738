#!/usr/bin/env python3
"""
Tests for config parsing, sweeps, summaries and the wrsn command group
"""

import math
import os
import tempfile
from unittest import mock

import pandas as pd
import pytest
from click.testing import CliRunner

from app.cli import wrsn
from app.config import ConfigError, load_config_file
import app.experiments
from app.experiments import (CSV_COLUMNS, MEAN_SEED, METRIC_COLUMNS, ExperimentConfig, failed_cells, parse_config,
                             run_sweep, summarize)

SMALL = {'node_counts': '10,20', 'seeds': '1,2', 'schedulers': 'poised,nearest', 'horizon': 3600}


def test_empty_config_gives_defaults():
    cfg = parse_config()
    assert cfg.node_counts == [100, 200, 300, 400, 500]
    assert cfg.seeds == list(range(1, 21))
    assert cfg.mcv_count == 4
    assert cfg.horizon == 86400.0
    base = cfg.base
    assert (base.node_capacity, base.mcv_capacity, base.mcv_speed, base.travel_cost, base.charge_rate) == \
        (0.5, 10_000.0, 5.0, 5.0, 0.05)
    assert (base.request_threshold_ratio, base.comm_range, base.sensing_range) == (0.30, 50.0, 25.0)


def test_minimal_and_invalid_configs():
    cfg = parse_config(overrides={'node_counts': [100], 'seeds': [1]})
    assert cfg.cells() == [{'node_count': 100, 'seed': 1, 'scheduler': 'poised'}]

    with pytest.raises(ConfigError) as e:
        parse_config(overrides={'mcv_speed': -5})
    assert e.value.key == 'mcv_speed'
    with pytest.raises(ConfigError) as e:
        parse_config(overrides={'warp_factor': 9})
    assert e.value.key == 'warp_factor'
    with pytest.raises(ConfigError):
        parse_config(overrides={'schedulers': 'poised,greedy'})
    with pytest.raises(ConfigError):
        ExperimentConfig(node_counts=[])


def test_config_file():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'sweep.cfg')
        with open(path, 'w') as handle:
            handle.write("# small sweep\nnode_counts = [50, 60]\nseeds = 3, 4\n\nisac = off\nmcv_count = 2\n")
        assert load_config_file(path)['isac'] is False
        cfg = parse_config(path, {'mcv_count': 3})
        assert cfg.node_counts == [50, 60] and cfg.seeds == [3, 4]
        assert not cfg.isac and cfg.mcv_count == 3


def test_sweep_rows_and_means():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = parse_config(overrides={**SMALL, 'output_path': os.path.join(tmp, 'out.csv')})
        table = run_sweep(cfg)
        assert list(table.columns) == CSV_COLUMNS
        assert not table[METRIC_COLUMNS].isna().any().any()
        assert failed_cells(table).empty
        assert len(table) == 2 * 2 * 2 + 2 * 2

        written = pd.read_csv(cfg.output_path, dtype={'seed': str})
        runs = written[written['seed'] != MEAN_SEED]
        means = written[written['seed'] == MEAN_SEED]
        assert list(runs['node_count']) == [10, 10, 10, 10, 20, 20, 20, 20]
        assert list(runs['scheduler'])[:2] == ['poised', 'nearest']
        for _, row in means.iterrows():
            subset = runs[(runs['node_count'] == row['node_count']) & (runs['scheduler'] == row['scheduler'])]
            for column in METRIC_COLUMNS:
                assert math.isclose(row[column], subset[column].mean(), rel_tol=1e-9, abs_tol=1e-9)


def test_sweep_is_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        first, second = os.path.join(tmp, 'a.csv'), os.path.join(tmp, 'b.csv')
        cfg = parse_config(overrides=SMALL)
        table = run_sweep(cfg, first)
        assert not table[METRIC_COLUMNS].isna().any().any()
        run_sweep(cfg, second)
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()


def test_summarize():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'out.csv')
        table = run_sweep(parse_config(overrides=SMALL), path)
        assert not table[METRIC_COLUMNS].isna().any().any()
        text = summarize(path)
        assert 'nan' not in text and 'failed cells' not in text
        assert '== poised ==' in text and '== nearest ==' in text
        assert 'survival non-increasing:' in text
        assert '== poised vs nearest travel ==' in text

        empty = os.path.join(tmp, 'empty.csv')
        open(empty, 'w').close()
        with pytest.raises(ValueError):
            summarize(empty)

        header_only = os.path.join(tmp, 'header.csv')
        with open(header_only, 'w') as handle:
            handle.write(','.join(CSV_COLUMNS) + '\n')
        with pytest.raises(ValueError):
            summarize(header_only)

        malformed = os.path.join(tmp, 'bad.csv')
        with open(malformed, 'w') as handle:
            handle.write("a,b\n1,2\n")
        with pytest.raises(ValueError):
            summarize(malformed)


def test_trend_verdicts():
    rows = [['poised', n, 4, MEAN_SEED, 1.0, delay, survival, 10.0, '']
            for n, delay, survival in ((100, 5.0, 90.0), (200, 6.0, 80.0))]
    rows += [['nearest', n, 4, MEAN_SEED, 1.0, delay, survival, 5.0, '']
             for n, delay, survival in ((100, 7.0, 70.0), (200, 6.0, 75.0))]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'means.csv')
        pd.DataFrame(rows, columns=CSV_COLUMNS).to_csv(path, index=False)
        text = summarize(path).splitlines()
    poised = text[text.index('== poised ==') + 1:]
    assert 'survival non-increasing: PASS' in poised[:5]
    assert 'delay non-decreasing: PASS' in poised[:5]
    nearest = text[text.index('== nearest ==') + 1:]
    assert 'survival non-increasing: FAIL' in nearest[:5]
    assert any(line.endswith('FAIL') and line.strip().startswith('100:') for line in text)


def test_failed_cells_stay_visible():
    def broken_run(cfg):
        raise ValueError(f"cell {cfg.node_count}/{cfg.seed} broke")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'out.csv')
        with mock.patch.object(app.experiments, 'run', broken_run):
            table = run_sweep(parse_config(overrides={'node_counts': '10', 'seeds': '1,2'}), path)
        failed = failed_cells(table)
        assert list(failed['seed']) == [1, 2]
        assert failed['error'].iloc[0] == 'ValueError: cell 10/1 broke'
        assert table[METRIC_COLUMNS].isna().all().all()

        assert len(failed_cells(pd.read_csv(path, dtype={'seed': str}))) == 2
        assert summarize(path).startswith('failed cells: 2, first error: ValueError')

        runner = CliRunner()
        with mock.patch.object(app.experiments, 'run', broken_run):
            result = runner.invoke(wrsn, ['sweep', '--nodes', '10', '--seeds', '1',
                                          '--out', os.path.join(tmp, 'cli.csv')])
        assert result.exit_code == 1
        assert '1 sweep cell(s) failed' in result.output


def test_travel_comparison_on_real_cells():
    """Poised and nearest on identical seeds: every cell runs and the travel verdict matches the means"""
    overrides = {'node_counts': '20,40', 'seeds': '1,2', 'schedulers': 'poised,nearest',
                 'horizon': 6 * 3600}
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'out.csv')
        table = run_sweep(parse_config(overrides=overrides), path)
        assert failed_cells(table).empty
        assert not table[METRIC_COLUMNS].isna().any().any()
        text = summarize(path).splitlines()

    means = table[table['seed'] == MEAN_SEED].set_index(['scheduler', 'node_count'])['travel_m']
    rows = text[text.index('== poised vs nearest travel ==') + 1:]
    assert len(rows) == 2
    for line, node_count in zip(rows, (20, 40)):
        assert line.strip().startswith(f"{node_count}:")
        expected = means[('poised', node_count)] <= means[('nearest', node_count)] + 1e-9
        assert line.endswith('PASS' if expected else 'FAIL')


def test_cli():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(wrsn, ['sweep', '--nodes', '10', '--seeds', '2', '--scheduler', 'fcfs',
                                      '--horizon', '1800', '--out', 'out.csv'])
        assert result.exit_code == 0, result.output
        assert len(pd.read_csv('out.csv')) == 2 + 1

        result = runner.invoke(wrsn, ['summarize', 'out.csv'])
        assert result.exit_code == 0 and '== fcfs ==' in result.output

        result = runner.invoke(wrsn, ['sweep', '--nodes', '10', '--mcvs', '0'])
        assert result.exit_code != 0 and 'mcv_count' in result.output

        result = runner.invoke(wrsn, ['simulate', '--set', 'node_count=5', '--set', 'horizon=600',
                                      '--events', 'events.log'])
        assert result.exit_code == 0 and 'survival_rate: 100.0' in result.output

        result = runner.invoke(wrsn, ['topology', '--seed', '4', '--nodes', '3'])
        assert result.exit_code == 0 and len(result.output.splitlines()) == 4


if __name__ == '__main__':
    for test in (test_empty_config_gives_defaults, test_minimal_and_invalid_configs, test_config_file,
                 test_sweep_rows_and_means, test_sweep_is_deterministic, test_summarize, test_trend_verdicts,
                 test_failed_cells_stay_visible, test_travel_comparison_on_real_cells, test_cli):
        test()
        print(f"✓ {test.__name__}")
