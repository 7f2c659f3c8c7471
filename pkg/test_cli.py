import csv
import json
import math
import os

import pytest

from cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK, EXIT_PRECONDITION, main
from verification import CheckResult, ErrorSeries

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


@pytest.fixture(autouse=True)
def log_path(tmp_path, monkeypatch):
    monkeypatch.setenv('LOG_PATH', str(tmp_path / 'logs'))


def read_report(path):
    with open(path) as f:
        return json.load(f)


def test_homogeneous(tmp_path):
    code = main([
        'homogeneous', '--out', str(tmp_path),
        '--override', 'gamma=2',
        '--override', 'initial_data.plus.mean=2',
        '--override', 'T=40',
    ])
    assert code == EXIT_OK
    report = read_report(tmp_path / 'homogeneous.json')
    assert report['final'][0] == pytest.approx(3.0, abs=1e-6)
    assert report['config']['gamma'] == 2.0
    with open(tmp_path / 'homogeneous.csv') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['t', 'f1', 'f_minus1']
    assert len(rows) == 102


def test_simulate_writes_trajectory(tmp_path):
    code = main([
        'simulate', '--out', str(tmp_path),
        '--override', 'gamma=2', '--override', 'n_cells=16', '--override', 'T=0.25',
        '--override', 'initial_data.plus.modes=[[1, 0.5]]',
    ])
    assert code == EXIT_OK
    with open(tmp_path / 'trajectory.csv') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['t', 'x', 'f_plus', 'f_minus']
    # 4 steps sampled every step, 16 cells each
    assert len(rows) == 1 + 5 * 16
    report = read_report(tmp_path / 'simulate.json')
    assert report['mass_drift'] <= 1e-12
    assert report['bounds']['passed'] is True


def test_simulate_is_deterministic(tmp_path):
    args = ['simulate', '--override', 'gamma=0.5', '--override', 'n_cells=16', '--override', 'T=0.25',
            '--override', 'initial_data.minus.modes=[[2, 0.3, 1.0]]']
    assert main(args + ['--out', str(tmp_path / 'a')]) == EXIT_OK
    assert main(args + ['--out', str(tmp_path / 'b')]) == EXIT_OK
    with open(tmp_path / 'a' / 'trajectory.csv', 'rb') as f:
        first = f.read()
    with open(tmp_path / 'b' / 'trajectory.csv', 'rb') as f:
        assert f.read() == first


def test_layer_with_shipped_config(tmp_path):
    code = main(['layer', '--config', os.path.join(CONFIG_DIR, 'aligned.json'), '--out', str(tmp_path)])
    assert code == EXIT_OK
    report = read_report(tmp_path / 'layer.json')
    assert report['pass'] is True
    assert report['certificate']['satisfiable'] is True
    assert report['derivative_decay']['rate'] > 0


def test_layer_precondition_failure(tmp_path):
    code = main([
        'layer', '--out', str(tmp_path), '--override', 'gamma=2', '--override', 'n_cells=16',
        '--override', 'initial_data.plus.mean=1.5',
    ])
    assert code == EXIT_PRECONDITION


def test_backward_diffusion_needs_flag(tmp_path):
    args = ['limit-check', '--out', str(tmp_path), '--override', 'gamma=2',
            '--override', 'experiment=diffusive_parabolic', '--override', 'n_cells=32',
            '--override', 'epsilon=0.1', '--override', 'T=0.01']
    assert main(args) == EXIT_PRECONDITION
    assert main(args + ['--unstable-demo']) == EXIT_OK
    report = read_report(tmp_path / 'backward_diffusion.json')
    assert report['coefficient'] == pytest.approx(-1.0)
    assert report['amplification'][0] > 1.0


def test_config_errors_exit_one(tmp_path):
    assert main(['simulate', '--out', str(tmp_path)]) == EXIT_CONFIG
    assert main(['simulate', '--out', str(tmp_path), '--override', 'gamma=1']) == EXIT_CONFIG
    bad = tmp_path / 'bad.json'
    bad.write_text('{"gamma": 2,,}')
    assert main(['simulate', '--config', str(bad), '--out', str(tmp_path)]) == EXIT_CONFIG


def test_usage_errors_exit_one():
    with pytest.raises(SystemExit) as info:
        main(['teleport'])
    assert info.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(['sweep', '--jobs', '0'])
    assert info.value.code == EXIT_CONFIG


def test_aligned_limit_check_with_shipped_config(tmp_path):
    code = main([
        'limit-check', '--config', os.path.join(CONFIG_DIR, 'aligned.json'), '--out', str(tmp_path),
        '--override', 'epsilon=0.1', '--override', 'T=0.5', '--override', 'max_cells=256',
    ])
    assert code == EXIT_OK
    report = read_report(tmp_path / 'limit_check.json')
    assert report['experiment'] == 'aligned_hyperbolic'
    assert report['n_cells'] in (64, 128, 256)
    assert 0.0 < report['error_over_epsilon'] < 5.0


def test_sweep_passes_on_diffusive_ladder(tmp_path):
    code = main([
        'sweep', '--out', str(tmp_path), '--override', 'experiment=diffusive_hyperbolic',
        '--override', 'gamma=0.5', '--override', 'T=0.125', '--override', 'n_cells=64',
        '--override', 'epsilons=[0.1, 0.05]',
        '--override', 'initial_data.plus.modes=[[1, 0.25]]', '--override', 'initial_data.minus.modes=[[1, 0.25]]',
    ])
    assert code == EXIT_OK
    report = read_report(tmp_path / 'sweep.json')
    assert report['pass'] is True
    assert report['errors'][1] < report['errors'][0]


def test_sweep_without_a_ladder_fails_acceptance(tmp_path):
    code = main([
        'sweep', '--config', os.path.join(CONFIG_DIR, 'aligned.json'), '--out', str(tmp_path),
        '--override', 'epsilons=[0.1]', '--override', 'T=0.5', '--override', 'max_cells=256',
    ])
    assert code == EXIT_ACCEPTANCE
    report = read_report(tmp_path / 'sweep.json')
    assert report['pass'] is False
    assert report['fitted_order'] is None


def failing_series(*args, **kwargs):
    return ErrorSeries('micro', 2.0, (1 / 64, 1 / 128), (0.01, 0.02), fitted_order=-1.0, passed=False)


def test_micro_failure_exits_three(tmp_path, monkeypatch):
    monkeypatch.setattr('cli.micro_refinement', failing_series)
    code = main(['micro', '--config', os.path.join(CONFIG_DIR, 'micro.json'), '--out', str(tmp_path)])
    assert code == EXIT_ACCEPTANCE
    assert read_report(tmp_path / 'micro.json')['pass'] is False


@pytest.mark.slow
def test_micro_refinement_passes(tmp_path):
    # plus = 1 + 0.5 cos(2 pi x), minus = 0.8 + 0.3 sin(2 pi x)
    code = main([
        'micro', '--out', str(tmp_path), '--override', 'gamma=2', '--override', 'T=0.5',
        '--override', 'initial_data.plus.modes=[[1, 0.5]]', '--override', 'initial_data.minus.mean=0.8',
        '--override', f'initial_data.minus.modes=[[1, 0.3, {-math.pi / 2!r}]]',
    ])
    assert code == EXIT_OK
    report = read_report(tmp_path / 'micro.json')
    assert report['pass'] is True
    assert report['fitted_order'] >= 0.8


@pytest.mark.parametrize('passed, expected', [(True, EXIT_OK), (False, EXIT_ACCEPTANCE)])
def test_selftest_exit_code_follows_checks(tmp_path, monkeypatch, passed, expected):
    monkeypatch.setattr('cli.run_selftest', lambda quick=False: [
        CheckResult('algebraic identities', True, 'ok', 0.1),
        CheckResult('exact solutions', passed, 'sup error 1e-3', 0.2),
    ])
    assert main(['selftest', '--quick', '--out', str(tmp_path)]) == expected
    assert read_report(tmp_path / 'selftest.json')['pass'] is passed


@pytest.mark.slow
def test_quick_selftest_exits_zero(tmp_path):
    assert main(['selftest', '--quick', '--out', str(tmp_path)]) == EXIT_OK
    report = read_report(tmp_path / 'selftest.json')
    assert report['pass'] is True
    assert len(report['checks']) == 7
