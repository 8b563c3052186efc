"""
Experiment runner: parse a run configuration, evaluate a forest on a stream
and write result rows, timelines and sweep tables as CSV.

Configuration precedence: defaults, then a key=value file (--config), then
command-line flags.
"""
import io
import os
import logging
import argparse
import typing
from dataclasses import asdict, dataclass, fields, replace
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from joblib import Parallel, delayed

from app import DEFAULT_SEED, DEFAULT_THREADS, LOG_LEVEL, OUT_DIR, configure_logging
from dataset_catalog import build_dataset, dataset_names, get_dataset
from ensemble import ESRF, LEARNER_KINDS, THRESHOLD_PRESETS, EnsembleConfig, make_learner
from errors import ConfigError, EsrfError, EvaluationAborted
from evaluation import (KFOLD_CV, PREQUENTIAL, EvalConfig, MetricsTimeline, accuracy_delta,
                        run_evaluation, speedup)
from file_streams import ArffReader, CsvReader, detect_csv_header, infer_csv_schema
from models import Schema
from streams import GENERATORS, NOISE_PARAMETERS, make_generator
from utils import MISSING_MARK, derive_seed, format_pct, hardware_summary, parse_number_list

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ('dataset', 'learner', 'config', 'accuracy_pct', 'delta_pp', 'time_s', 'per_sample_us',
                  'speedup', 'size_mean', 'size_stdev', 'size_max', 'size_min', 'seed')
TIMELINE_COLUMNS = ('instance', 'cum_accuracy', 'fs_size', 'elapsed_s')
FILE_FORMATS = ('arff', 'csv')
TRUE_WORDS = ('true', 'yes', 'on', '1')
FALSE_WORDS = ('false', 'no', 'off', '0')


@dataclass
class RunConfig:
    """One experiment: stream source, learner, evaluation and output settings"""
    stream: Optional[str] = None
    data: Optional[str] = None
    format: Optional[str] = None
    class_index: Optional[int] = None
    header: Optional[bool] = None
    instances: int = 100000
    noise: Optional[float] = None
    drift_position: Optional[int] = None
    drift_width: Optional[int] = None
    learner: str = ESRF
    n_trees: int = 100
    fs: int = 10
    cs: int = 10
    r: int = 1
    tg: float = 0.01
    ts: float = 0.001
    window: int = 2000
    min_fs: int = 10
    max_total: int = 100
    preset: Optional[str] = None
    folds: int = 1
    report_interval: int = 1000
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS
    jobs: int = 1
    out: str = OUT_DIR
    baseline: Optional[str] = None
    baseline_learner: str = 'ARF'

    @property
    def dataset_name(self) -> str:
        if self.data:
            return os.path.splitext(os.path.basename(self.data))[0]
        entry = get_dataset(self.stream)
        return entry['name'] if entry else self.stream

    @property
    def stream_key(self) -> tuple:
        return (self.stream, self.data, self.format, self.class_index, self.header, self.instances,
                self.noise, self.drift_position, self.drift_width)


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))
_HINTS = typing.get_type_hints(RunConfig)


def _coerce(key: str, raw):
    hint = _HINTS[key]
    optional = type(None) in typing.get_args(hint)
    base = next((a for a in typing.get_args(hint) if a is not type(None)), hint)
    if raw is None or (isinstance(raw, str) and raw.strip() == ''):
        if optional:
            return None
        raise ConfigError(key, "a value is required")
    if base is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text not in TRUE_WORDS + FALSE_WORDS:
            raise ConfigError(key, f"expected true or false, got '{raw}'")
        return text in TRUE_WORDS
    if isinstance(raw, base) and not isinstance(raw, bool):
        return raw
    try:
        if base is int:
            return int(str(raw).strip())
        if base is float:
            return float(str(raw).strip())
    except ValueError:
        raise ConfigError(key, f"expected {base.__name__}, got '{raw}'")
    return str(raw).strip()


def _validate(run: RunConfig) -> None:
    if (run.stream is None) == (run.data is None):
        raise ConfigError('stream', "exactly one of stream and data must be set")
    if run.stream is not None and get_dataset(run.stream) is None and run.stream.lower() not in GENERATORS:
        raise ConfigError('stream', f"unknown stream '{run.stream}'; datasets: {', '.join(dataset_names())}; "
                                    f"generators: {', '.join(GENERATORS)}")
    if run.format is not None and run.format not in FILE_FORMATS:
        raise ConfigError('format', f"must be one of {FILE_FORMATS}")
    if run.learner not in LEARNER_KINDS:
        raise ConfigError('learner', f"must be one of {LEARNER_KINDS}")
    if run.preset is not None and run.preset not in THRESHOLD_PRESETS:
        raise ConfigError('preset', f"must be one of {tuple(THRESHOLD_PRESETS)}")
    for key in ('instances', 'n_trees', 'fs', 'r', 'window', 'min_fs', 'max_total', 'folds',
                'report_interval', 'threads', 'jobs'):
        if getattr(run, key) < 1:
            raise ConfigError(key, "must be >= 1")
    for key in ('cs', 'tg', 'ts'):
        if getattr(run, key) < 0:
            raise ConfigError(key, "must be >= 0")
    if run.noise is not None and not 0.0 <= run.noise <= 1.0:
        raise ConfigError('noise', "must be in [0, 1]")
    if run.noise is not None and run.stream is not None and get_dataset(run.stream) is None \
            and run.stream.lower() not in NOISE_PARAMETERS:
        raise ConfigError('noise', f"generator '{run.stream}' has no noise parameter")
    if run.noise is not None and run.data is not None:
        raise ConfigError('noise', "only applies to generated streams")
    if run.header is not None and run.data is None:
        raise ConfigError('header', "only applies to data files")
    if run.drift_position is not None and run.drift_position < 0:
        raise ConfigError('drift_position', "must be >= 0")
    if run.drift_width is not None and run.drift_width < 1:
        raise ConfigError('drift_width', "must be >= 1")
    if run.learner == ESRF:
        if run.fs < run.min_fs:
            raise ConfigError('fs', f"initial forefront size must be >= min_fs ({run.min_fs})")
        if run.fs + run.cs + run.r > run.max_total:
            raise ConfigError('max_total', f"must be >= fs + cs + r ({run.fs + run.cs + run.r})")


def parse_config(text: str = '', overrides: Optional[Dict] = None) -> RunConfig:
    """RunConfig from key=value text plus overrides (flags win); unknown keys are rejected"""
    values = dict(dotenv_values(stream=io.StringIO(text), interpolate=False)) if text else {}
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    values.update(overrides)
    if 'data' in overrides and 'stream' not in overrides:
        values['stream'] = None
    for key in values:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "unknown configuration key")
    settings = {key: _coerce(key, raw) for key, raw in values.items()}
    preset = settings.get('preset')
    if preset is not None:
        if preset not in THRESHOLD_PRESETS:
            raise ConfigError('preset', f"must be one of {tuple(THRESHOLD_PRESETS)}")
        grow, shrink = THRESHOLD_PRESETS[preset]
        settings.setdefault('tg', grow)
        settings.setdefault('ts', shrink)
    if settings.get('data') and settings.get('stream') is None:
        settings['stream'] = None
    elif 'stream' not in settings:
        settings['stream'] = 'SEA_a'
    run = RunConfig(**settings)
    _validate(run)
    return run


def load_config_file(path: str, overrides: Optional[Dict] = None) -> RunConfig:
    with open(path, encoding='utf-8') as handle:
        return parse_config(handle.read(), overrides)


def serialize_config(run: RunConfig) -> str:
    """Every field as key=value, sorted by key; parse_config reproduces the config"""
    lines = []
    for key, value in sorted(asdict(run).items()):
        if value is None:
            text = ''
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return '\n'.join(lines) + '\n'


def ensemble_config(run: RunConfig) -> EnsembleConfig:
    return EnsembleConfig(kind=run.learner, n_trees=run.n_trees, fs_size=run.fs, cs_size=run.cs,
                          resize_factor=run.r, grow_threshold=run.tg, shrink_threshold=run.ts,
                          window=run.window, min_fs=run.min_fs, max_total=run.max_total,
                          seed=run.seed, threads=run.threads)


def eval_config(run: RunConfig) -> EvalConfig:
    mode = KFOLD_CV if run.folds >= 2 else PREQUENTIAL
    return EvalConfig(mode=mode, folds=run.folds, report_interval=run.report_interval,
                      max_instances=run.instances, seed=run.seed, n_jobs=run.jobs)


# -----------------------------
# Streams and learners
# -----------------------------
def _file_format(run: RunConfig) -> str:
    if run.format:
        return run.format
    extension = os.path.splitext(run.data)[1].lower().lstrip('.')
    if extension not in FILE_FORMATS:
        raise ConfigError('format', f"cannot infer the format of '{run.data}'; pass --format")
    return extension


def open_stream(run: RunConfig) -> Tuple[Schema, typing.Iterable]:
    """Schema and a fresh iterable for the configured source"""
    if run.data:
        if _file_format(run) == 'arff':
            reader = ArffReader(run.data, run.class_index)
            return reader.schema, reader
        has_header = run.header if run.header is not None else detect_csv_header(run.data)
        schema = infer_csv_schema(run.data, has_header=has_header, class_index=run.class_index,
                                  relation=run.dataset_name)
        return schema, CsvReader(run.data, schema, has_header=has_header, class_index=run.class_index)
    if get_dataset(run.stream) is not None:
        stream = build_dataset(run.stream, run.instances, seed=run.seed, noise=run.noise,
                               drift_position=run.drift_position, drift_width=run.drift_width)
    else:
        params = {}
        if run.noise is not None:
            params[NOISE_PARAMETERS[run.stream.lower()]] = run.noise
        stream = make_generator(run.stream, seed=run.seed, **params)
    return stream.schema, stream


def _fresh_stream(run: RunConfig):
    return open_stream(run)[1]


@dataclass
class LearnerFactory:
    """Builds replica j; replicas beyond a single run get derived seeds"""
    schema: Schema
    config: EnsembleConfig
    derive_seeds: bool = False

    def __call__(self, replica: int = 0):
        config = self.config
        if self.derive_seeds:
            config = replace(config, seed=derive_seed(config.seed, replica))
        return make_learner(self.schema, config)


# -----------------------------
# Results
# -----------------------------
@dataclass
class ResultRow:
    dataset: str
    learner: str
    config: str
    accuracy_pct: float
    delta_pp: float
    time_s: float
    per_sample_us: float
    speedup: float
    size_mean: float
    size_stdev: float
    size_max: float
    size_min: float
    seed: int

    def as_record(self) -> Dict[str, str]:
        digits = {'accuracy_pct': 4, 'delta_pp': 4, 'time_s': 6, 'per_sample_us': 3, 'speedup': 4,
                  'size_mean': 4, 'size_stdev': 4, 'size_max': 0, 'size_min': 0}
        record = {}
        for column in RESULT_COLUMNS:
            value = getattr(self, column)
            if column in digits:
                value = format_pct(value, digits[column])
            record[column] = str(value)
        return record


def result_row(run: RunConfig, timeline: MetricsTimeline, baseline: Optional[Dict] = None) -> ResultRow:
    final = timeline.final
    cfg = ensemble_config(run)
    delta = gain = float('nan')
    reference = (baseline or {}).get(run.dataset_name)
    if reference is not None:
        base_accuracy, base_time = reference
        if not np.isnan(final.accuracy_pct):
            delta = accuracy_delta(final.accuracy_pct, base_accuracy)
        if base_time > 0 and final.time_seconds > 0:
            gain = speedup(base_time, final.time_seconds)
    return ResultRow(dataset=run.dataset_name, learner=cfg.tag, config=cfg.summary(),
                     accuracy_pct=final.accuracy_pct, delta_pp=delta, time_s=final.time_seconds,
                     per_sample_us=final.per_sample_us, speedup=gain, size_mean=final.size_mean,
                     size_stdev=final.size_stdev, size_max=final.size_max, size_min=final.size_min,
                     seed=run.seed)


def load_baseline(path: str, learner_prefix: str = 'ARF') -> Dict[str, Tuple[float, float]]:
    """dataset -> (accuracy_pct, time_s) of the last matching baseline row in a results file"""
    frame = pd.read_csv(path, comment='#', na_values=[MISSING_MARK], dtype={'learner': str, 'dataset': str})
    missing = [c for c in ('dataset', 'learner', 'accuracy_pct', 'time_s') if c not in frame.columns]
    if missing:
        raise ConfigError('baseline', f"'{path}' lacks columns {missing}")
    rows = frame[frame['learner'].str.startswith(learner_prefix)]
    if rows.empty:
        logger.warning(f"No '{learner_prefix}' rows in baseline file {path}")
    return {row.dataset: (float(row.accuracy_pct), float(row.time_s)) for row in rows.itertuples()}


def append_results(rows: Sequence[ResultRow], path: str) -> None:
    """Append rows, writing the header only when the file is new"""
    frame = pd.DataFrame([row.as_record() for row in rows], columns=list(RESULT_COLUMNS))
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    frame.to_csv(path, mode='a', header=new_file, index=False)


def timeline_path(run: RunConfig) -> str:
    tag = ensemble_config(run).tag
    if run.learner == ESRF:
        tag += f"-fs{run.fs}-tg{run.tg:g}-ts{run.ts:g}"
    return os.path.join(run.out, f"timeline_{run.dataset_name}_{tag}_{run.seed}.csv")


def write_timeline(timeline: MetricsTimeline, path: str) -> None:
    frame = pd.DataFrame([(s.instance, s.cum_accuracy, s.fs_size, s.elapsed_s) for s in timeline.snapshots],
                         columns=list(TIMELINE_COLUMNS))
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(f"# host: {hardware_summary()}\n")
        frame.to_csv(handle, index=False, na_rep='n/a')


def evaluate(run: RunConfig) -> MetricsTimeline:
    schema, stream = open_stream(run)
    logger.debug(f"Stream {schema.describe()}")
    evaluation = eval_config(run)
    factory = LearnerFactory(schema, ensemble_config(run), derive_seeds=evaluation.mode == KFOLD_CV)
    source = partial(_fresh_stream, run) if evaluation.mode == KFOLD_CV and run.jobs > 1 else stream
    return run_evaluation(factory, source, evaluation)


def run_experiment(run: RunConfig, baseline: Optional[Dict] = None, write: bool = True,
                   append: bool = True) -> ResultRow:
    """
    Evaluate one configuration.

    With `write` the timeline file is written and, unless `append` is off,
    the result row is appended to results.csv.
    """
    logger.info(f"Running {ensemble_config(run).tag} on {run.dataset_name} "
                f"({run.instances} instances, folds={run.folds}, seed={run.seed})")
    if write:
        os.makedirs(run.out, exist_ok=True)
    try:
        timeline = evaluate(run)
    except EvaluationAborted as e:
        if write and e.timeline is not None and e.timeline.snapshots:
            write_timeline(e.timeline, timeline_path(run))
        raise
    row = result_row(run, timeline, baseline)
    if write:
        write_timeline(timeline, timeline_path(run))
        if append:
            append_results([row], os.path.join(run.out, 'results.csv'))
    logger.info(f"{row.learner} on {row.dataset}: accuracy {row.accuracy_pct:.2f}%, "
                f"time {row.time_s:.2f}s, mean size {row.size_mean:.2f}")
    return row


def baseline_config(run: RunConfig) -> RunConfig:
    """The ARF configuration the deltas of `run` are measured against"""
    return replace(run, learner='arf', preset=None)


# -----------------------------
# Sweeps
# -----------------------------
def threshold_grid(run: RunConfig, grow_values: Sequence[float], shrink_values: Sequence[float]) -> List[RunConfig]:
    return [replace(run, learner=ESRF, tg=tg, ts=ts, preset=None) for tg in grow_values for ts in shrink_values]


def size_grid(run: RunConfig, sizes: Sequence[int]) -> List[RunConfig]:
    """ARF varies n_trees; SRF and ESRF vary the initial forefront size"""
    if run.learner == 'arf':
        return [replace(run, n_trees=size) for size in sizes]
    configs = []
    for size in sizes:
        point = replace(run, fs=size)
        if run.learner == ESRF:
            point = replace(point, min_fs=min(run.min_fs, size), max_total=max(run.max_total, size + run.cs + run.r))
        configs.append(point)
    return configs


def _sweep_point(run: RunConfig, baseline: Optional[Dict]) -> Tuple[Optional[ResultRow], Optional[str]]:
    """One grid point: its own timeline file, no results.csv append"""
    try:
        return run_experiment(run, baseline, append=False), None
    except (EsrfError, OSError) as e:
        return None, str(e)


def pivot_table(rows: Sequence[ResultRow], configs: Sequence[RunConfig]) -> pd.DataFrame:
    """T_g by T_s table of delta_pp; first column 'tg', one column per T_s value"""
    frame = pd.DataFrame({'tg': [c.tg for c in configs], 'ts': [c.ts for c in configs],
                          'delta_pp': [row.delta_pp for row in rows]})
    table = frame.pivot_table(index='tg', columns='ts', values='delta_pp', aggfunc='mean', dropna=False)
    table.columns = [f"{value:g}" for value in table.columns]
    return table.reset_index()


def emit_sweep(configs: Sequence[RunConfig], baseline: Optional[Dict] = None, jobs: int = 1,
               pivot: bool = True) -> Tuple[List[ResultRow], Optional[pd.DataFrame]]:
    """
    Run every configuration of a grid over one shared stream.

    Rows go to results.csv and sweep.csv; threshold grids also get pivot.csv.
    The first failing configuration stops the sweep: rows before it are still
    written and sweep.csv ends with an '# incomplete' line.
    """
    if not configs:
        raise ConfigError('sweep', "empty configuration grid")
    first = configs[0]
    if any(c.stream_key != first.stream_key for c in configs):
        raise ConfigError('stream', "all sweep configurations must share one stream")
    out = first.out
    os.makedirs(out, exist_ok=True)
    if jobs > 1:
        outcomes = Parallel(n_jobs=jobs)(delayed(_sweep_point)(c, baseline) for c in configs)
    else:
        outcomes = []
        for index, config in enumerate(configs, start=1):
            outcome = _sweep_point(config, baseline)
            outcomes.append(outcome)
            if outcome[1] is not None:
                break
            logger.info(f"Sweep point {index}/{len(configs)} done")
    rows: List[ResultRow] = []
    failure = None
    for config, (row, error) in zip(configs, outcomes):
        if error is not None:
            failure = (config, error)
            break
        rows.append(row)
    if rows:
        append_results(rows, os.path.join(out, 'results.csv'))
    sweep_path = os.path.join(out, 'sweep.csv')
    frame = pd.DataFrame([row.as_record() for row in rows], columns=list(RESULT_COLUMNS))
    frame.to_csv(sweep_path, index=False)
    if failure is not None:
        config, error = failure
        with open(sweep_path, 'a', encoding='utf-8') as handle:
            handle.write(f"# incomplete: {ensemble_config(config).tag} {ensemble_config(config).summary()} "
                         f"failed: {error}\n")
        logger.warning(f"Sweep stopped after {len(rows)} of {len(configs)} configurations")
        raise EvaluationAborted(f"sweep failed at {ensemble_config(config).summary()}: {error}")
    table = None
    if pivot:
        table = pivot_table(rows, configs)
        table.to_csv(os.path.join(out, 'pivot.csv'), index=False, na_rep=MISSING_MARK)
    return rows, table


# -----------------------------
# Command line
# -----------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Evaluate ARF, SRF and ESRF forests on data streams")
    parser.add_argument('--config', help="key=value run configuration file (flags override it)")
    source = parser.add_argument_group('stream')
    source.add_argument('--stream', help=f"dataset ({', '.join(dataset_names())}) or generator "
                                         f"({', '.join(GENERATORS)})")
    source.add_argument('--data', help="ARFF or CSV file instead of a generated stream")
    source.add_argument('--format', help="arff or csv (default: from the file extension)")
    source.add_argument('--class-index', dest='class_index', help="class column of a data file (default: last)")
    source.add_argument('--header', dest='header', action='store_const', const='true',
                        help="the CSV file starts with a row of column names (default: detected)")
    source.add_argument('--no-header', dest='header', action='store_const', const='false',
                        help="the CSV file has no header row")
    source.add_argument('--instances', help="number of instances to evaluate")
    source.add_argument('--noise', help="noise level of generated streams")
    source.add_argument('--drift-position', dest='drift_position', help="centre of the concept drift")
    source.add_argument('--drift-width', dest='drift_width', help="width of the concept drift (1 = abrupt)")
    learner = parser.add_argument_group('learner')
    learner.add_argument('--learner', help="arf, srf or esrf")
    learner.add_argument('--n-trees', dest='n_trees', help="ARF ensemble size")
    learner.add_argument('--fs', help="initial forefront set size")
    learner.add_argument('--cs', help="candidate set size")
    learner.add_argument('--r', help="resize factor (grow set size)")
    learner.add_argument('--tg', help="grow threshold")
    learner.add_argument('--ts', help="shrink threshold")
    learner.add_argument('--preset', help=f"threshold preset: {', '.join(THRESHOLD_PRESETS)}")
    learner.add_argument('--window', help="EWMA window W")
    learner.add_argument('--min-fs', dest='min_fs', help="smallest forefront size")
    learner.add_argument('--max-total', dest='max_total', help="cap on |FS| + |CS| + |GS|")
    learner.add_argument('--threads', help="member training threads")
    run = parser.add_argument_group('evaluation and output')
    run.add_argument('--folds', help="k of prequential k-fold CV (1 = plain prequential)")
    run.add_argument('--report-interval', dest='report_interval', help="instances between timeline snapshots")
    run.add_argument('--seed', help="master seed")
    run.add_argument('--jobs', help="parallel processes for CV replicas and sweeps")
    run.add_argument('--out', help="output directory")
    run.add_argument('--baseline', help="results.csv holding the baseline rows for delta and speedup")
    run.add_argument('--baseline-learner', dest='baseline_learner', help="learner tag prefix of baseline rows")
    run.add_argument('--with-baseline', dest='with_baseline', action='store_true',
                     help="run the ARF baseline first and measure against it")
    sweep = parser.add_argument_group('sweeps')
    sweep.add_argument('--sweep-tg', dest='sweep_tg', help="comma-separated grow thresholds")
    sweep.add_argument('--sweep-ts', dest='sweep_ts', help="comma-separated shrink thresholds")
    sweep.add_argument('--sweep-sizes', dest='sweep_sizes', help="comma-separated ensemble sizes")
    parser.add_argument('--log-level', dest='log_level', default=LOG_LEVEL)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {key: value for key, value in vars(args).items() if key in CONFIG_KEYS and value is not None}
    if args.config:
        return load_config_file(args.config, overrides)
    return parse_config('', overrides)


def _number_list(key: str, text: str, cast) -> list:
    try:
        values = parse_number_list(text, cast)
    except ValueError:
        raise ConfigError(key, f"expected a comma-separated list, got '{text}'")
    if not values:
        raise ConfigError(key, "empty list")
    return values


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        run = config_from_args(args)
        baseline = load_baseline(run.baseline, run.baseline_learner) if run.baseline else {}
        if args.with_baseline:
            reference = run_experiment(baseline_config(run))
            baseline[reference.dataset] = (reference.accuracy_pct, reference.time_s)
        if args.sweep_tg or args.sweep_ts:
            grow = _number_list('sweep_tg', args.sweep_tg or f"{run.tg!r}", float)
            shrink = _number_list('sweep_ts', args.sweep_ts or f"{run.ts!r}", float)
            configs = threshold_grid(run, grow, shrink)
            for config in configs:
                _validate(config)
            rows, _ = emit_sweep(configs, baseline, jobs=run.jobs)
        elif args.sweep_sizes:
            configs = size_grid(run, _number_list('sweep_sizes', args.sweep_sizes, int))
            for config in configs:
                _validate(config)
            rows, _ = emit_sweep(configs, baseline, jobs=run.jobs, pivot=False)
        else:
            rows = [run_experiment(run, baseline)]
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return 2
    except (EsrfError, OSError) as e:
        logger.error(f"Run failed: {e}")
        return 1
    for row in rows:
        record = row.as_record()
        print(' '.join(f"{column}={record[column]}" for column in RESULT_COLUMNS))
    return 0
