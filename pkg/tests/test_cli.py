from os import path

import pandas as pd
import pytest
import yaml

from conftest import SMALL
from rmabm.cli import main, parse_grid
from rmabm.errors import ConfigurationError
from rmabm.params import default_config_dict
from rmabm.store import read_manifest


def small_args(*extra):
    args = []
    for override in SMALL:
        args += ['--set', override]
    return args + list(extra)


def run(command, out, *extra):
    return main([command, '--out', str(out)] + small_args(*extra))


def test_train_writes_policy_and_manifest(tmp_path):
    assert run('train', tmp_path) == 0

    cell = tmp_path / 'rmabm' / 'train'
    assert (cell / 'policy' / 'policy.msgpack').is_file()
    assert (cell / 'policy' / 'qtable-0.tsv').is_file()

    curves = pd.read_csv(cell / 'summary' / 'training_curves.tsv', sep='\t')
    assert curves.episode.tolist() == [1, 2]

    manifest = read_manifest(str(cell))
    assert manifest['command'] == 'train'
    assert manifest['seeds'] == [1, 2]
    assert 'policy/policy.msgpack' in manifest['artifacts']


def test_overrides_are_recorded(tmp_path):
    assert run('train', tmp_path, '--set', 'N=1', '--seed', '7') == 0

    manifest = read_manifest(str(tmp_path / 'rmabm' / 'train'))
    assert 'N=1' in manifest['overrides']
    assert manifest['config']['experiment']['num_rl_agents'] == 1
    assert manifest['config']['experiment']['base_seed'] == 7
    assert manifest['seeds'] == [8, 9]


def test_evaluate_after_train(tmp_path):
    assert run('train', tmp_path) == 0
    assert run('evaluate', tmp_path) == 0

    cell = tmp_path / 'rmabm' / 'evaluate'
    summary = yaml.safe_load((cell / 'summary' / 'summary.yaml').read_text())
    assert summary['episodes'] == 2
    assert len(pd.read_csv(cell / 'summary' / 'agents.tsv', sep='\t')) == 2 * 6
    assert (cell / 'frames' / 'episode-0.tsv.gz').is_file()
    assert read_manifest(str(cell))['policy'].endswith('policy.msgpack')


def test_missing_config_key_exits_with_2(tmp_path, caplog):
    data = default_config_dict()
    del data['model']['search_depth']
    config_path = tmp_path / 'broken.yaml'
    config_path.write_text(yaml.safe_dump(data))

    assert main(['train', '--out', str(tmp_path), '--config', str(config_path)]) == 2
    assert 'model.search_depth' in caplog.text
    assert not (tmp_path / 'rmabm').exists()


def test_missing_policy_exits_with_2(tmp_path):
    assert run('evaluate', tmp_path) == 2
    assert not (tmp_path / 'rmabm' / 'evaluate').exists()


def test_corrupt_policy_exits_with_2(tmp_path, caplog):
    policy_path = tmp_path / 'policy.msgpack'
    policy_path.write_bytes(b'garbage')

    assert run('evaluate', tmp_path, '--policy', str(policy_path)) == 2
    assert str(policy_path) in caplog.text


def test_heuristic_evaluation_needs_no_policy(tmp_path):
    assert run('evaluate', tmp_path, '--set', 'N=0') == 0


def test_sweep_writes_one_directory_per_cell(tmp_path):
    assert run('sweep', tmp_path, '--grid', 'z_c=2,3', '--grid', 'N=0,1') == 0

    experiment = tmp_path / 'rmabm'
    for cell in ('z_c-2_N-0', 'z_c-2_N-1', 'z_c-3_N-0', 'z_c-3_N-1'):
        assert (experiment / cell / 'manifest.yaml').is_file()
    assert not (experiment / 'z_c-2_N-0' / 'policy').exists()

    episodes = pd.read_csv(experiment / 'sweep' / 'summary' / 'episodes.tsv', sep='\t')
    assert len(episodes) == 4 * 2
    assert sorted(episodes.search_depth.unique()) == [2, 3]

    gdp = pd.read_csv(experiment / 'sweep' / 'summary' / 'gdp.tsv', sep='\t')
    assert len(gdp) == 4
    assert (experiment / 'sweep' / 'summary' / 'strategies.tsv').is_file()
    assert read_manifest(str(experiment / 'sweep'))['cells'] == ['z_c-2_N-0', 'z_c-2_N-1', 'z_c-3_N-0', 'z_c-3_N-1']


def test_sweep_rejects_unknown_grid_keys(tmp_path, caplog):
    assert run('sweep', tmp_path, '--grid', 'bogus=1,2') == 2
    assert 'bogus' in caplog.text


def test_parse_grid():
    assert parse_grid(['z_c=2,5,10', 'policy_mode=shared,independent']) == [
        ('z_c', [2, 5, 10]), ('policy_mode', ['shared', 'independent'])]

    with pytest.raises(ConfigurationError):
        parse_grid(['z_c'])


def test_zero_shock_irf_is_flat(tmp_path):
    assert run('irf', tmp_path, '--set', 'N=0', '--shock-size', '0') == 0

    irf = pd.read_csv(tmp_path / 'rmabm' / 'irf' / 'summary' / 'irf.tsv', sep='\t')
    assert len(irf) == 30
    assert (irf[['consumption', 'real_gdp', 'deflator']] == 0.0).all().all()

    manifest = read_manifest(str(tmp_path / 'rmabm' / 'irf'))
    assert manifest['shock']['size'] == 0.0


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('RMABM_OUT', str(tmp_path / 'env-out'))

    assert main(['train'] + small_args()) == 0
    assert path.isfile(tmp_path / 'env-out' / 'rmabm' / 'train' / 'manifest.yaml')
