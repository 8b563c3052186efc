import math
import os
from dataclasses import replace

import pandas as pd
import pytest

import cli
from cli import (RESULT_COLUMNS, TIMELINE_COLUMNS, RunConfig, emit_sweep, load_baseline, main, parse_config,
                 open_stream, run_experiment, serialize_config, size_grid, threshold_grid, timeline_path)
from errors import ConfigError, EvaluationAborted

RESULTS_HEADER = ('dataset,learner,config,accuracy_pct,delta_pp,time_s,per_sample_us,speedup,'
                  'size_mean,size_stdev,size_max,size_min,seed')
TIMELINE_HEADER = 'instance,cum_accuracy,fs_size,elapsed_s'
TIME_FIELDS = ('time_s', 'per_sample_us', 'speedup')


def _small(tmp_path, **changes):
    settings = dict(stream='SEA_a', instances='400', fs='3', cs='2', min_fs='2', report_interval='100', seed='1',
                    out=str(tmp_path))
    settings.update(changes)
    return parse_config('', settings)


def _without_time(row):
    record = row.as_record()
    return {k: v for k, v in record.items() if k not in TIME_FIELDS}


def _constant_arff(tmp_path):
    lines = ['@relation constant', '@attribute x numeric', '@attribute class {a,b}', '@data']
    lines += [f"{i * 0.5},a" for i in range(200)]
    path = tmp_path / 'constant.arff'
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return str(path)


# -----------------------------
# Configuration
# -----------------------------
def test_column_headers_are_stable():
    assert ','.join(RESULT_COLUMNS) == RESULTS_HEADER
    assert ','.join(TIMELINE_COLUMNS) == TIMELINE_HEADER


def test_flags_with_table_thresholds():
    run = parse_config('', {'learner': 'esrf', 'tg': '0.01', 'ts': '0.001'})
    assert (run.learner, run.tg, run.ts) == ('esrf', 0.01, 0.001)
    assert (run.cs, run.r, run.window, run.min_fs, run.max_total, run.n_trees) == (10, 1, 2000, 10, 100, 100)


def test_negative_threshold_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config('', {'tg': '-1'})
    assert info.value.key == 'tg'
    assert '>= 0' in info.value.constraint


def test_empty_config_round_trips():
    run = parse_config('')
    assert run == RunConfig(stream='SEA_a')
    assert parse_config(serialize_config(run)) == run


def test_custom_config_round_trips(tmp_path):
    run = parse_config('learner=srf\nfs=35\ntg=0.5\nnoise=0.1\nfolds=3\n', {'out': str(tmp_path)})
    text = serialize_config(run)
    assert parse_config(text) == run
    path = tmp_path / 'run.cfg'
    path.write_text(text, encoding='utf-8')
    assert cli.load_config_file(str(path)) == run


def test_file_values_yield_to_flags():
    run = parse_config('tg=0.5\nts=0.5\n', {'tg': '0.1'})
    assert (run.tg, run.ts) == (0.1, 0.5)


def test_unknown_key():
    with pytest.raises(ConfigError) as info:
        parse_config('colour=blue\n')
    assert info.value.key == 'colour'


def test_presets_fill_unset_thresholds():
    assert (parse_config('preset=balanced\n').tg, parse_config('preset=balanced\n').ts) == (0.01, 0.01)
    run = parse_config('preset=restrictive\ntg=0.2\n')
    assert (run.tg, run.ts) == (0.2, 0.1)
    with pytest.raises(ConfigError):
        parse_config('preset=lenient\n')


def test_stream_source_rules(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config('stream=SEA_a\ndata=x.arff\n')
    assert info.value.key == 'stream'
    with pytest.raises(ConfigError):
        parse_config('stream=nowhere\n')
    run = parse_config('', {'data': str(tmp_path / 'elec.arff')})
    assert run.stream is None and run.dataset_name == 'elec'
    assert parse_config('stream=sea_a\n').dataset_name == 'SEA_a'


def test_range_checks():
    with pytest.raises(ConfigError) as info:
        parse_config('fs=5\n')
    assert info.value.key == 'fs'
    with pytest.raises(ConfigError) as info:
        parse_config('fs=60\ncs=40\n')
    assert info.value.key == 'max_total'
    with pytest.raises(ConfigError) as info:
        parse_config('instances=lots\n')
    assert info.value.key == 'instances'
    # forefront limits only bind the elastic learner
    assert parse_config('learner=srf\nfs=5\n').fs == 5


# -----------------------------
# Experiments
# -----------------------------
def test_constant_stream_single_tree(tmp_path):
    run = parse_config('', {'data': _constant_arff(tmp_path), 'learner': 'arf', 'n_trees': '1',
                            'out': str(tmp_path)})
    row = run_experiment(run)
    assert row.accuracy_pct == 100.0
    assert row.learner == 'ARF1'
    assert row.as_record()['accuracy_pct'] == '100.0000'
    with open(tmp_path / 'results.csv', encoding='utf-8') as handle:
        assert handle.readline().strip() == RESULTS_HEADER
    with open(timeline_path(run), encoding='utf-8') as handle:
        assert handle.readline().startswith('# host:')
        assert handle.readline().strip() == TIMELINE_HEADER


def test_cv_run_is_deterministic(tmp_path):
    run = _small(tmp_path, folds='2', instances='600')
    first = run_experiment(run, write=False)
    second = run_experiment(run, write=False)
    assert _without_time(first) == _without_time(second)
    assert first.learner == 'ESRF'
    assert 2 <= first.size_min <= first.size_mean <= first.size_max


def test_results_file_appends_rows(tmp_path):
    run = _small(tmp_path)
    run_experiment(run)
    run_experiment(replace(run, seed=2))
    frame = pd.read_csv(tmp_path / 'results.csv')
    assert list(frame.columns) == list(RESULT_COLUMNS)
    assert list(frame['seed']) == [1, 2]


def test_timeline_name_carries_thresholds(tmp_path):
    run = _small(tmp_path, tg='0.1', ts='0.001')
    assert os.path.basename(timeline_path(run)) == 'timeline_SEA_a_ESRF-fs3-tg0.1-ts0.001_1.csv'
    arf = _small(tmp_path, learner='arf', n_trees='5')
    assert os.path.basename(timeline_path(arf)) == 'timeline_SEA_a_ARF5_1.csv'


def test_baseline_file(tmp_path):
    path = tmp_path / 'baseline.csv'
    path.write_text(RESULTS_HEADER + '\n'
                    'SEA_a,ARF100,n_trees=100,89.7300,—,10.000000,100.000,—,100.0000,0.0000,100,100,1\n'
                    'SEA_a,ESRF,x,89.0000,—,2.000000,20.000,—,20.0000,1.0000,22,10,1\n', encoding='utf-8')
    baseline = load_baseline(str(path))
    assert baseline == {'SEA_a': (89.73, 10.0)}
    row = run_experiment(_small(tmp_path), baseline, write=False)
    assert row.delta_pp == pytest.approx(row.accuracy_pct - 89.73)
    assert row.speedup == pytest.approx(10.0 / row.time_s)


def test_missing_baseline_gives_marks(tmp_path):
    record = run_experiment(_small(tmp_path), write=False).as_record()
    assert record['delta_pp'] == '—'
    assert record['speedup'] == '—'


# -----------------------------
# Sweeps
# -----------------------------
def test_two_by_two_threshold_sweep(tmp_path):
    run = _small(tmp_path)
    configs = threshold_grid(run, [0.5, 0.001], [0.5, 0.001])
    rows, table = emit_sweep(configs, baseline={'SEA_a': (80.0, 1.0)})
    assert len(rows) == 4
    assert table.shape == (2, 3)
    assert list(table.columns) == ['tg', '0.001', '0.5']
    for config, row in zip(configs, rows):
        cell = table.loc[table['tg'] == config.tg, f"{config.ts:g}"].iloc[0]
        assert cell == pytest.approx(row.delta_pp)
    assert len(pd.read_csv(tmp_path / 'sweep.csv')) == 4
    assert list(pd.read_csv(tmp_path / 'pivot.csv').columns) == ['tg', '0.001', '0.5']


def test_sweep_of_one_matches_single_run(tmp_path):
    swept = _small(tmp_path / 'sweep')
    single = _small(tmp_path / 'single')
    rows, _ = emit_sweep([swept])
    row = run_experiment(single)
    assert _without_time(rows[0]) == _without_time(row)
    for config in (swept, single):
        frame = pd.read_csv(os.path.join(config.out, 'results.csv'))
        assert len(frame) == 1
    columns = ['instance', 'cum_accuracy', 'fs_size']
    swept_timeline = pd.read_csv(timeline_path(swept), comment='#')
    single_timeline = pd.read_csv(timeline_path(single), comment='#')
    assert list(swept_timeline['instance']) == [100, 200, 300, 400]
    assert swept_timeline[columns].equals(single_timeline[columns])


def test_sweep_points_write_their_own_timelines(tmp_path):
    configs = threshold_grid(_small(tmp_path), [0.5, 0.001], [0.5])
    emit_sweep(configs)
    paths = {timeline_path(config) for config in configs}
    assert len(paths) == 2
    assert all(os.path.exists(path) for path in paths)
    assert len(pd.read_csv(tmp_path / 'results.csv')) == 2


def test_sweep_needs_one_stream(tmp_path):
    run = _small(tmp_path)
    with pytest.raises(ConfigError):
        emit_sweep([run, replace(run, instances=500)])


def test_failing_sweep_point_flushes_partial_output(tmp_path, monkeypatch):
    original = cli.run_experiment
    calls = []

    def flaky(run, baseline=None, write=True, append=True):
        calls.append(run.tg)
        if len(calls) == 2:
            raise EvaluationAborted("learner exploded")
        return original(run, baseline, write, append)

    monkeypatch.setattr(cli, 'run_experiment', flaky)
    configs = threshold_grid(_small(tmp_path), [0.5, 0.001], [0.5])
    with pytest.raises(EvaluationAborted):
        emit_sweep(configs)
    with open(tmp_path / 'sweep.csv', encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    assert lines[0] == RESULTS_HEADER
    assert len(lines) == 3
    assert lines[-1].startswith('# incomplete:')
    assert len(pd.read_csv(tmp_path / 'results.csv')) == 1


def test_size_grid():
    arf = RunConfig(stream='SEA_a', learner='arf')
    assert [c.n_trees for c in size_grid(arf, [10, 20])] == [10, 20]
    esrf = RunConfig(stream='SEA_a')
    small = size_grid(esrf, [5, 90])
    assert [c.fs for c in small] == [5, 90]
    assert small[0].min_fs == 5
    assert small[1].max_total == 101


# -----------------------------
# Command line
# -----------------------------
def _flags(tmp_path, *extra):
    return ['--stream', 'SEA_a', '--instances', '300', '--fs', '3', '--cs', '2', '--min-fs', '2',
            '--out', str(tmp_path), '--log-level', 'WARNING', *extra]


def test_main_success(tmp_path, capsys):
    assert main(_flags(tmp_path)) == 0
    assert 'learner=ESRF' in capsys.readouterr().out
    assert len(pd.read_csv(tmp_path / 'results.csv')) == 1


def test_main_config_error(tmp_path):
    assert main(_flags(tmp_path, '--tg', '-1')) == 2
    assert not (tmp_path / 'results.csv').exists()


def test_main_missing_data_file(tmp_path):
    code = main(['--data', str(tmp_path / 'absent.arff'), '--out', str(tmp_path), '--log-level', 'WARNING'])
    assert code == 1
    assert not (tmp_path / 'results.csv').exists()


def test_main_with_baseline(tmp_path):
    assert main(_flags(tmp_path, '--with-baseline', '--n-trees', '4')) == 0
    frame = pd.read_csv(tmp_path / 'results.csv', na_values=['—'])
    assert list(frame['learner']) == ['ARF4', 'ESRF']
    assert math.isnan(frame['delta_pp'][0])
    assert not math.isnan(frame['delta_pp'][1])


def test_main_threshold_sweep(tmp_path):
    assert main(_flags(tmp_path, '--sweep-tg', '0.5,0.01', '--sweep-ts', '0.5')) == 0
    pivot = pd.read_csv(tmp_path / 'pivot.csv')
    assert list(pivot.columns) == ['tg', '0.5']
    assert len(pivot) == 2


def test_main_config_file(tmp_path):
    config = tmp_path / 'run.cfg'
    config.write_text('stream=SEA_a\ninstances=200\nfs=3\ncs=2\nmin_fs=2\nlearner=srf\n', encoding='utf-8')
    assert main(['--config', str(config), '--fs', '4', '--out', str(tmp_path), '--log-level', 'WARNING']) == 0
    frame = pd.read_csv(tmp_path / 'results.csv')
    assert list(frame['learner']) == ['SRF4']


# -----------------------------
# Data files and generators
# -----------------------------
def _headered_csv(tmp_path):
    lines = ['x1,x2,label'] + [f"{i / 40:.3f},{(i * 7 % 40) / 40:.3f},{'yes' if i % 3 else 'no'}"
                               for i in range(40)]
    path = tmp_path / 'd.csv'
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return str(path)


def test_headered_csv_is_read_as_names(tmp_path):
    schema, stream = open_stream(parse_config('', {'data': _headered_csv(tmp_path)}))
    assert [(a.name, a.is_nominal) for a in schema.attributes] == [('x1', False), ('x2', False)]
    assert schema.class_labels == ('no', 'yes')
    assert len(list(stream)) == 40


def test_header_flag_overrides_detection(tmp_path):
    path = _headered_csv(tmp_path)
    schema, stream = open_stream(parse_config('', {'data': path, 'header': 'false'}))
    assert schema.attributes[0].is_nominal
    assert len(list(stream)) == 41
    run = parse_config('', {'data': path, 'header': 'true'})
    assert run.header is True
    assert parse_config(serialize_config(run)) == run
    with pytest.raises(ConfigError) as info:
        parse_config('', {'header': 'maybe'})
    assert info.value.key == 'header'
    with pytest.raises(ConfigError):
        parse_config('stream=SEA_a\nheader=true\n')


def test_main_reads_headered_csv(tmp_path):
    code = main(['--data', _headered_csv(tmp_path), '--header', '--learner', 'arf', '--n-trees', '2',
                 '--out', str(tmp_path), '--log-level', 'WARNING'])
    assert code == 0
    frame = pd.read_csv(tmp_path / 'results.csv')
    assert list(frame['dataset']) == ['d']


def test_noise_needs_a_noisy_generator(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config('', {'stream': 'rbf', 'noise': '0.1'})
    assert info.value.key == 'noise'
    assert main(['--stream', 'rbf', '--noise', '0.1', '--out', str(tmp_path), '--log-level', 'WARNING']) == 2
    assert open_stream(parse_config('stream=sea\nnoise=0.2\n'))[1].noise == 0.2
    assert open_stream(parse_config('stream=agrawal\nnoise=0.2\n'))[1].perturbation == 0.2
