"""
Test the experiment module.
"""

import json

import numpy as np
import pytest

from sparseseq.seq2seq import experiment
from sparseseq.seq2seq.config import check_config
from sparseseq.seq2seq.data import generate_synthetic, write_splits
from sparseseq.seq2seq.model import train
from sparseseq.seq2seq.experiment import (
    synthetic_directory,
    resolve_data_paths,
    read_report,
    strip_timings,
    write_report,
    run_train,
    run_analyze,
    run_decode,
    summarize,
    main
)

SMALL_CONFIG = {'embedding_dim': 8, 'hidden_dim': 8, 'max_epochs': 2, 'beam_width': 2, 'seed': 0}


@pytest.fixture
def data_config(tmp_path):
    paths = write_splits(generate_synthetic('copy', 40, 0), str(tmp_path / 'copy'))
    return {**SMALL_CONFIG, 'train_path': paths['train'], 'dev_path': paths['dev'], 'test_path': paths['test']}


def test_write_report(tmp_path):
    """Test the JSON lines reports."""
    path = tmp_path / 'report.jsonl'
    write_report([{'kind': 'metrics', 'wer': np.float64(25.0), 'count': np.int64(2), 'seconds': 1.5}], path)
    assert read_report(path) == [{'kind': 'metrics', 'wer': 25.0, 'count': 2, 'seconds': 1.5}]
    assert strip_timings(read_report(path)) == [{'kind': 'metrics', 'wer': 25.0, 'count': 2}]
    with pytest.raises(ValueError):
        write_report([{'kind': 'summary'}], path)


def test_resolve_data_paths(tmp_path, monkeypatch):
    """Test that default splits are generated per task, size and seed."""
    monkeypatch.setattr(experiment, 'SYNTHETIC_PATH', str(tmp_path))
    small = resolve_data_paths(check_config({'task': 'reverse', 'seed': 1, 'data_size': 50}))
    large = resolve_data_paths(check_config({'task': 'reverse', 'seed': 0, 'data_size': 625}))
    assert small['train'] == str(tmp_path / 'reverse-n50-seed1' / 'train.tsv')
    assert synthetic_directory('reverse', 625, 0) == str(tmp_path / 'reverse-n625-seed0')
    with open(small['train'], encoding='utf-8') as file:
        assert len(file.read().splitlines()) == 40
    with open(large['train'], encoding='utf-8') as file:
        assert len(file.read().splitlines()) == 500
    explicit = resolve_data_paths(check_config({'task': 'reverse', 'seed': 1, 'data_size': 50, 'dev_path': large['dev']}))
    assert explicit == {**small, 'dev': large['dev']}


def test_run_train_search_params(data_config, tmp_path, monkeypatch):
    """Test that the dev decoding parameters reach the training loop."""
    calls = []

    def recording_train(*args, **kwargs):
        calls.append(kwargs)
        return train(*args, **kwargs)

    monkeypatch.setattr(experiment, 'train', recording_train)
    run_train({**data_config, 'max_epochs': 1, 'max_len': 9, 'length_penalty': 0.5}, str(tmp_path / 'run'))
    assert {name: calls[0][name] for name in ('beam_width', 'max_len', 'length_penalty')} == {'beam_width': 2, 'max_len': 9, 'length_penalty': 0.5}


def test_run_train(data_config, tmp_path):
    """Test the training report and checkpoint."""
    model, records = run_train(data_config, str(tmp_path / 'run'))
    assert [record['kind'] for record in records] == ['config', 'epoch', 'epoch', 'metrics']
    assert records[0]['config']['alpha'] == 1.5
    assert set(records[-1]) >= {'wer', 'per', 'accuracy', 'levenshtein', 'seconds'}
    assert (tmp_path / 'run' / 'model.fys').exists()
    assert [record['kind'] for record in read_report(tmp_path / 'run' / 'report.jsonl')] == [record['kind'] for record in records]
    assert model.alpha == 1.5


def test_run_train_deterministic(data_config, tmp_path):
    """Test that reruns give identical reports apart from timings."""
    reports = []
    for name in ('first', 'second'):
        run_train(data_config, str(tmp_path / name))
        reports.append(strip_timings(read_report(tmp_path / name / 'report.jsonl')))
    assert reports[0] == reports[1]


def test_run_analyze(data_config, tmp_path):
    """Test the analysis report of a checkpoint."""
    run_train({**data_config, 'alpha': 1.0}, str(tmp_path / 'run'))
    config = {'exact_search': True, 'node_budget': 50, 'beam_width': 2}
    records = run_analyze(tmp_path / 'run' / 'model.fys', data_config['dev_path'], config, tmp_path / 'analysis.jsonl')
    assert [record['kind'] for record in records] == ['config', 'metrics', 'analysis']
    analysis = records[-1]
    assert analysis['support_density']['mean_percentage'] == 100.0
    assert 0.0 <= analysis['cat_got_tongue_rate'] <= 100.0
    calibration = analysis['calibration']
    assert sum(calibration['counts']) == sum(len(support) for support in analysis['support_density']['support_sizes'])
    assert set(analysis['exact_search']) == {'mean_covered_mass', 'covered_fraction', 'truncated'}
    assert records[0]['config']['alpha'] == 1.0
    repeated = run_analyze(tmp_path / 'run' / 'model.fys', data_config['dev_path'], config)
    assert strip_timings(repeated) == strip_timings(records)


def test_run_decode(data_config, tmp_path):
    """Test the written hypotheses."""
    run_train(data_config, str(tmp_path / 'run'))
    output = tmp_path / 'hypotheses.tsv'
    examples = run_decode(tmp_path / 'run' / 'model.fys', data_config['test_path'], output, {'beam_width': 1})
    lines = output.read_text(encoding='utf-8').splitlines()
    assert len(lines) == len(examples) == 4
    assert all(line.split('\t')[0] == ' '.join(source) for line, (source, _) in zip(lines, examples))


def test_summarize(data_config, tmp_path):
    """Test the summary of runs per alpha and epsilon."""
    paths = []
    for seed in (0, 1):
        run_train({**data_config, 'seed': seed}, str(tmp_path / f'run{seed}'))
        paths.append(tmp_path / f'run{seed}' / 'report.jsonl')
    summary = summarize(paths)
    assert len(summary) == 1
    assert summary.loc[0, 'runs'] == 2
    assert {'wer_mean', 'wer_std', 'ece_mean'}.issubset(summary.columns)


def test_summarize_merges_analysis(data_config, tmp_path):
    """Test that the analysis report of a run is merged with its training report."""
    run_train({**data_config, 'seed': 3}, str(tmp_path / 'run'))
    analysis = tmp_path / 'run' / 'analysis.jsonl'
    records = run_analyze(tmp_path / 'run' / 'model.fys', data_config['dev_path'], {'beam_width': 2}, analysis)
    assert records[0]['config']['seed'] == 3
    summary = summarize([tmp_path / 'run' / 'report.jsonl', analysis])
    assert len(summary) == 1
    assert summary.loc[0, 'runs'] == 1
    assert summary.loc[0, 'ece_mean'] == pytest.approx(records[-1]['calibration']['ece'])


def test_main_train_and_analyze(data_config, tmp_path):
    """Test the command line training and analysis."""
    config_path = tmp_path / 'config.json'
    config_path.write_text(json.dumps({**data_config, 'alpha': 2.0}), encoding='utf-8')
    assert main(['train', '--config', str(config_path), '--epsilon', '0.1', '--output-dir', str(tmp_path / 'run')]) == 0
    config = read_report(tmp_path / 'run' / 'report.jsonl')[0]['config']
    assert (config['alpha'], config['epsilon']) == (2.0, 0.1)
    report = tmp_path / 'analysis.jsonl'
    assert main(['analyze', str(tmp_path / 'run' / 'model.fys'), data_config['dev_path'], '--report', str(report)]) == 0
    assert [record['kind'] for record in read_report(report)] == ['config', 'metrics', 'analysis']


def test_main_gen_data(tmp_path):
    """Test the command line data generation."""
    assert main(['gen-data', 'reverse', '--size', '10', '--seed', '7', '--output-dir', str(tmp_path)]) == 0
    assert len((tmp_path / 'train.tsv').read_text(encoding='utf-8').splitlines()) == 8


def test_main_verify(tmp_path):
    """Test the command line verification exit statuses."""
    report = tmp_path / 'verify.jsonl'
    assert main(['verify', '--trials', '1', '--report', str(report)]) == 0
    assert {record['kind'] for record in read_report(report)} == {'verify'}
    assert main(['verify', '--trials', '1', '--threshold-shift', '0.5']) == 3


def test_main_errors(data_config, tmp_path):
    """Test the command line error exit statuses."""
    assert main(['train', '--epsilon', '1.5']) == 1
    config_path = tmp_path / 'config.json'
    config_path.write_text(json.dumps({'momentum': 0.9}), encoding='utf-8')
    assert main(['train', '--config', str(config_path)]) == 1
    assert main(['train', '--config', str(tmp_path / 'missing.json')]) == 1
    malformed = tmp_path / 'malformed.tsv'
    malformed.write_text('a b c\n', encoding='utf-8')
    assert main(['train', '--train-path', str(malformed), '--dev-path', str(malformed), '--test-path', str(malformed), '--output-dir', str(tmp_path)]) == 2
    assert main(['analyze', str(tmp_path / 'missing.fys'), data_config['dev_path']]) == 2
    with pytest.raises(SystemExit) as error:
        main(['train', '--alpha', 'large'])
    assert error.value.code == 1
