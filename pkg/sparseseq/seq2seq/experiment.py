"""
Includes the experiment runs and the command line functions.
"""

# License: BSD 3 clause

import json
import logging
import sys
import time
from argparse import ArgumentParser
from os.path import exists, join
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .. import RUNS_PATH, SYNTHETIC_PATH, __version__
from ..exceptions import (
    CheckpointError, ConfigError, EmptyDataset, EmptyFile, MalformedLine, UnknownToken, VocabularyMismatch
)
from ..verification import run_verify
from .config import CONFIG, check_config
from .data import generate_synthetic, load_dataset, write_dataset, write_splits
from .decoding import cat_got_tongue_rate, decode_dataset, exact_search
from .metrics import accuracy, expected_calibration_error, mean_levenshtein, per, support_density, wer
from .model import ToyModel, forced_decode, load_checkpoint, save_checkpoint, train

logger = logging.getLogger(__name__)

REPORT_KINDS = ('config', 'epoch', 'metrics', 'analysis', 'verify')
TIMING_FIELDS = ('seconds',)
MODEL_FIELDS = ('alpha', 'epsilon', 'smoothing', 'embedding_dim', 'hidden_dim', 'context_size', 'init_scale')
RUN_FIELDS = ('task', 'alpha', 'epsilon', 'seed')
SUMMARY_METRICS = ('wer', 'per', 'accuracy', 'levenshtein', 'cat_got_tongue_rate', 'support_density', 'ece')
DATA_ERRORS = (MalformedLine, EmptyFile, EmptyDataset, VocabularyMismatch, UnknownToken, CheckpointError, OSError)


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'Object of type {type(value).__name__} is not serializable.')


def write_report(records, path):
    """Write records as JSON lines, one object per line."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        for record in records:
            if record.get('kind') not in REPORT_KINDS:
                raise ValueError(f'Record kind should be one of {", ".join(REPORT_KINDS)}. Got {record.get("kind")!r}.')
            file.write(json.dumps(record, sort_keys=True, default=_to_builtin) + '\n')
    logger.info('Saved report to %s', path)


def read_report(path):
    with open(path, encoding='utf-8') as file:
        return [json.loads(line) for line in file if line.strip()]


def strip_timings(records):
    """Records without their wall-clock fields."""
    return [{key: value for key, value in record.items() if key not in TIMING_FIELDS} for record in records]


def run_directory(config):
    return join(RUNS_PATH, f'{config["task"]}-alpha{config["alpha"]}-epsilon{config["epsilon"]}-seed{config["seed"]}')


def synthetic_directory(task, size, seed):
    return join(SYNTHETIC_PATH, f'{task}-n{size}-seed{seed}')


def resolve_data_paths(config):
    """Dataset paths of a configuration, generating missing synthetic splits.

    Default splits live in a directory named after the task, the data size
    and the seed, so runs with other sizes or seeds never share them.
    """
    directory = synthetic_directory(config['task'], config['data_size'], config['seed'])
    paths = {split: config[f'{split}_path'] or join(directory, f'{split}.tsv') for split in ('train', 'dev', 'test')}
    defaults = [split for split in paths if config[f'{split}_path'] is None]
    if any(not exists(paths[split]) for split in defaults):
        logger.info('Generating synthetic %s data in %s', config['task'], directory)
        write_splits(generate_synthetic(config['task'], config['data_size'], config['seed']), directory)
    return paths


def _transduction_metrics(hypotheses, pairs):
    references = [list(pair.target[:-1]) for pair in pairs]
    return {
        'wer': wer(hypotheses, references),
        'per': per(hypotheses, references),
        'accuracy': accuracy(hypotheses, references),
        'levenshtein': mean_levenshtein(hypotheses, references)
    }


def run_train(config, output_dir=None):
    """Train a model and write its checkpoint and report.

    Parameters
    ----------
    config : dict
        Partial or complete experiment configuration.

    output_dir : str or None, default=None
        Directory of the checkpoint and the report. A directory of the runs
        path named after the task, alpha, epsilon and seed when None.

    Returns
    -------
    model : ToyModel

    records : list of dict
        The report records.
    """
    config = check_config(config)
    output_dir = output_dir or run_directory(config)
    start = time.perf_counter()

    # Load data
    paths = resolve_data_paths(config)
    train_pairs, vocabulary = load_dataset(paths['train'])
    dev_pairs, _ = load_dataset(paths['dev'], vocabulary)

    # Train model
    model = ToyModel(vocabulary, **{name: config[name] for name in MODEL_FIELDS}, random_state=config['seed'])
    model.initialize()
    model, log = train(
        model, train_pairs, dev_pairs, lr=config['lr'], batch_size=config['batch_size'], max_epochs=config['max_epochs'],
        patience=config['patience'], beam_width=config['beam_width'], max_len=config['max_len'],
        length_penalty=config['length_penalty'], random_state=config['seed'], n_jobs=config['n_jobs']
    )

    # Evaluate best checkpoint
    hypotheses = decode_dataset(model, dev_pairs, config['beam_width'], config['max_len'], config['length_penalty'], config['n_jobs'])
    metrics = _transduction_metrics(hypotheses, dev_pairs)

    # Save checkpoint and report
    Path(output_dir).mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, join(output_dir, 'model.fys'))
    records = [{'kind': 'config', 'config': config, 'version': __version__}]
    records += [dict(kind='epoch', **row) for row in log.to_dict('records')]
    records.append(dict(kind='metrics', split='dev', seconds=time.perf_counter() - start, **metrics))
    write_report(records, join(output_dir, 'report.jsonl'))
    return model, records


def _exact_search_summary(model, pairs, config):
    results = Parallel(n_jobs=config['n_jobs'])(
        delayed(exact_search)(model, pair.source, config['max_len'], config['mass_floor'], config['node_budget']) for pair in pairs
    )
    covered = np.array([result.covered_mass for result in results])
    return {
        'mean_covered_mass': float(covered.mean()),
        'covered_fraction': float(np.mean(covered >= 1.0 - config['mass_floor'])),
        'truncated': int(sum(result.truncated for result in results))
    }


def run_analyze(checkpoint, dataset, config=None, report_path=None):
    """Analyze a trained model on a dataset.

    The report contains the transduction metrics and, as configured, the
    empty string audit, the support density, the calibration and the exact
    search coverage.
    """
    model = load_checkpoint(checkpoint)
    overrides = {name: getattr(model, name) for name in MODEL_FIELDS}
    if isinstance(model.random_state, int):
        overrides['seed'] = model.random_state
    config = check_config({**(config or {}), **overrides})
    start = time.perf_counter()
    pairs, _ = load_dataset(dataset, model.vocabulary)

    # Metrics
    hypotheses = decode_dataset(model, pairs, config['beam_width'], config['max_len'], config['length_penalty'], config['n_jobs'])
    metrics = _transduction_metrics(hypotheses, pairs)

    # Analyses
    analysis = {}
    if config['cat_got_tongue']:
        analysis['cat_got_tongue_rate'] = cat_got_tongue_rate(model, pairs, config['beam_width'], config['n_jobs'])
    if config['support_density'] or config['calibration']:
        distributions = Parallel(n_jobs=config['n_jobs'])(delayed(forced_decode)(model, pair) for pair in pairs)
        if config['support_density']:
            analysis['support_density'] = support_density(model, pairs, distributions=distributions).to_dict()
        if config['calibration']:
            analysis['calibration'] = expected_calibration_error(model, pairs, config['calibration_bins'], distributions=distributions).to_dict()
    if config['exact_search']:
        analysis['exact_search'] = _exact_search_summary(model, pairs, config)

    records = [
        {'kind': 'config', 'config': config, 'checkpoint': str(checkpoint), 'dataset': str(dataset), 'version': __version__},
        dict(kind='metrics', split=Path(dataset).stem, **metrics),
        dict(kind='analysis', seconds=time.perf_counter() - start, **analysis)
    ]
    if report_path is not None:
        write_report(records, report_path)
    return records


def run_decode(checkpoint, dataset, output_path, config=None):
    """Beam-decode the sources of a dataset and write source and hypothesis lines."""
    config = check_config(config)
    model = load_checkpoint(checkpoint)
    pairs, _ = load_dataset(dataset, model.vocabulary)
    hypotheses = decode_dataset(model, pairs, config['beam_width'], config['max_len'], config['length_penalty'], config['n_jobs'])
    examples = [(model.vocabulary.decode(pair.source), model.vocabulary.decode(hypothesis)) for pair, hypothesis in zip(pairs, hypotheses)]
    write_dataset(examples, output_path)
    logger.info('Saved %d hypotheses to %s', len(examples), output_path)
    return examples


def summarize(report_paths):
    """Mean and standard deviation of the final metrics per task, alpha and epsilon.

    Parameters
    ----------
    report_paths : list of str
        Paths of training or analysis reports.
        Reports of the same task, alpha, epsilon and seed are merged into
        one run, later reports overriding earlier ones.

    Returns
    -------
    summary : DataFrame
    """
    rows = {}
    for path in report_paths:
        records = read_report(path)
        configs = [record['config'] for record in records if record['kind'] == 'config']
        if not configs:
            raise ValueError(f'Report {path} does not contain a configuration record.')
        key = tuple(configs[-1][name] for name in RUN_FIELDS)
        row = rows.setdefault(key, dict(zip(RUN_FIELDS, key)))
        for record in records:
            if record['kind'] == 'metrics':
                row.update({name: record[name] for name in ('wer', 'per', 'accuracy', 'levenshtein')})
            elif record['kind'] == 'analysis':
                if 'cat_got_tongue_rate' in record:
                    row['cat_got_tongue_rate'] = record['cat_got_tongue_rate']
                if 'support_density' in record:
                    row['support_density'] = record['support_density']['mean_percentage']
                if 'calibration' in record:
                    row['ece'] = record['calibration']['ece']
    if not rows:
        raise EmptyDataset('At least one report is required.')
    data = pd.DataFrame(list(rows.values()), columns=[*RUN_FIELDS, *SUMMARY_METRICS])
    summary = data.drop(columns='seed').groupby(['task', 'alpha', 'epsilon']).agg(['mean', 'std'])
    summary.columns = [f'{metric}_{statistic}' for metric, statistic in summary.columns]
    summary.insert(0, 'runs', data.groupby(['task', 'alpha', 'epsilon']).size())
    return summary.reset_index()


class _ArgumentParser(ArgumentParser):
    """Parser exiting with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f'{self.prog}: error: {message}\n')


def _boolean(value):
    if value.lower() in ('true', 'yes', '1'):
        return True
    if value.lower() in ('false', 'no', '0'):
        return False
    raise ValueError(value)


FLAG_TYPES = {
    'task': str, 'train_path': str, 'dev_path': str, 'test_path': str, 'smoothing': str, 'max_len': int, 'n_jobs': int,
    **{name: type(value) for name, value in CONFIG.items() if isinstance(value, (int, float)) and not isinstance(value, bool)},
    **{name: _boolean for name, value in CONFIG.items() if isinstance(value, bool)}
}


def _add_config_arguments(parser):
    parser.add_argument('--config', help='JSON file with configuration fields, overridden by the flags.')
    for name, flag_type in FLAG_TYPES.items():
        parser.add_argument(f'--{name.replace("_", "-")}', dest=name, type=flag_type, default=None, help=f'Default {CONFIG[name]!r}.')


def _extract_config(args):
    config = {}
    if args.config is not None:
        try:
            with open(args.config, encoding='utf-8') as file:
                config = json.load(file)
        except json.JSONDecodeError as error:
            raise ConfigError(f'Configuration file {args.config} is not valid JSON: {error}.') from None
        except OSError as error:
            raise ConfigError(f'Configuration file {args.config} cannot be read: {error.strerror}.') from None
        if not isinstance(config, dict):
            raise ConfigError(f'Configuration file {args.config} should contain a JSON object.')
    config.update({name: getattr(args, name) for name in FLAG_TYPES if getattr(args, name) is not None})
    return check_config(config)


def _create_parser():
    parser = _ArgumentParser('sparseseq', description='Sparse sequence-to-sequence experiments with Fenchel-Young label smoothing.')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='INFO logging with -v, DEBUG with -vv.')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    # Data generation
    gen_data = subparsers.add_parser('gen-data', help='Generate a synthetic task.')
    gen_data.add_argument('task', choices=['copy', 'reverse', 'rewrite-rules'])
    gen_data.add_argument('--size', type=int, default=CONFIG['data_size'], help='Total number of pairs.')
    gen_data.add_argument('--seed', type=int, default=CONFIG['seed'])
    gen_data.add_argument('--output-dir', help='Directory of the splits, the synthetic data path by default.')

    # Training
    train_parser = subparsers.add_parser('train', help='Train a model.')
    _add_config_arguments(train_parser)
    train_parser.add_argument('--output-dir', help='Directory of the checkpoint and the report.')

    # Decoding
    decode = subparsers.add_parser('decode', help='Decode a dataset with beam search.')
    decode.add_argument('checkpoint')
    decode.add_argument('dataset')
    decode.add_argument('output')
    _add_config_arguments(decode)

    # Analysis
    analyze = subparsers.add_parser('analyze', help='Analyze a trained model.')
    analyze.add_argument('checkpoint')
    analyze.add_argument('dataset')
    analyze.add_argument('--report', help='Path of the JSON lines report.')
    _add_config_arguments(analyze)

    # Verification
    verify = subparsers.add_parser('verify', help='Run the property suites.')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--trials', type=int, default=1000)
    verify.add_argument('--n-jobs', type=int, default=None)
    verify.add_argument('--threshold-shift', type=float, default=0.0, help='Corrupt the thresholds, for testing the suites.')
    verify.add_argument('--report', help='Path of the JSON lines report.')

    # Summary
    summary = subparsers.add_parser('summarize', help='Summarize run reports per alpha and epsilon.')
    summary.add_argument('reports', nargs='+')
    summary.add_argument('--output', help='Path of the CSV summary.')

    return parser


def _run_command(args):
    if args.command == 'gen-data':
        if args.size < 1:
            raise ConfigError(f'Parameter `size` should be a positive integer. Got {args.size}.')
        paths = write_splits(generate_synthetic(args.task, args.size, args.seed), args.output_dir or synthetic_directory(args.task, args.size, args.seed))
        print('\n'.join(paths.values()))
    elif args.command == 'train':
        _, records = run_train(_extract_config(args), args.output_dir)
        print(json.dumps(records[-1], sort_keys=True))
    elif args.command == 'decode':
        run_decode(args.checkpoint, args.dataset, args.output, _extract_config(args))
    elif args.command == 'analyze':
        records = run_analyze(args.checkpoint, args.dataset, _extract_config(args), args.report)
        for record in records[1:]:
            print(json.dumps(record, sort_keys=True, default=_to_builtin))
    elif args.command == 'verify':
        if args.trials < 1:
            raise ConfigError(f'Parameter `trials` should be a positive integer. Got {args.trials}.')
        results = run_verify(args.seed, args.trials, args.threshold_shift, args.n_jobs)
        print(results.to_string(index=False))
        if args.report is not None:
            write_report([dict(kind='verify', **row) for row in results.to_dict('records')], args.report)
        if not results['passed'].all():
            return 3
    elif args.command == 'summarize':
        summary = summarize(args.reports)
        print(summary.to_string(index=False))
        if args.output is not None:
            summary.to_csv(args.output, index=False)
    return 0


def main(argv=None):
    """Command line function of the experiments, returning the exit status."""
    parser = _create_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )
    try:
        return _run_command(args)
    except ConfigError as error:
        logger.error('%s', error)
        return 1
    except DATA_ERRORS as error:
        logger.error('%s', error)
        return 2


if __name__ == '__main__':
    sys.exit(main())
