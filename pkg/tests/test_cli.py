"""
命令行测试：子命令输出、退出码与可重复性
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import json
import os
import subprocess
from unittest import mock

import pandas as pd

from app import EXIT_CONFIG_ERROR, main

PROJECT_ROOT = Path(__file__).parent.parent

SMALL_CONFIG = {
    "rate": {"kind": "two-minus-gauss"},
    "weights": {"kind": "uniform", "a": -2.0, "b": 3.0},
    "n": 200,
    "x0": -1.0,
    "horizon": 2.0,
    "kernel": {"shape": "rectangular"},
}


def write_config(directory: Path, config: dict, name: str = 'config.json') -> Path:
    path = directory / name
    path.write_text(json.dumps(config), encoding='utf-8')
    return path


def test_simulate_and_estimate(tmp_path):
    """测试用例1：simulate 写出轨迹后 estimate 逐点估计"""
    print("\n" + "="*60)
    print("测试用例1：simulate + estimate")
    print("="*60)

    cfg = write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / 'sim'
    status = main(['simulate', '--config', str(cfg), '--seed', '7', '--out', str(out)])
    assert status == 0
    events = pd.read_csv(out / 'events.csv')
    print(f"事件数: {len(events)}")
    assert list(events.columns) == ['n', 'time', 'spiker', 'weight', 'pre_potential']
    assert events['time'].is_monotonic_increasing and events['spiker'].between(0, 199).all()

    manifest = json.loads((out / 'simulate_manifest.json').read_text(encoding='utf-8'))
    assert manifest['seed'] == 7 and manifest['config']['n'] == 200
    assert set(manifest['digests']) == {'events.csv', 'trajectory.duckdb'}

    est_out = tmp_path / 'est'
    points = '-0.8,-0.6,-0.4,-0.2,0,0.2,0.4,0.6,0.8'
    status = main(['estimate', str(out / 'trajectory.duckdb'), '--points', points, '--out', str(est_out)])
    assert status == 0
    table = pd.read_csv(est_out / 'estimates.csv')
    print(table.to_string())
    assert len(table) == 9
    report = json.loads((est_out / 'estimate_report.json').read_text(encoding='utf-8'))
    assert report['n'] == 200 and abs(report['bandwidth'] - 200 ** -0.49) < 1e-12
    print("✓ simulate + estimate 测试通过")


def test_estimate_oracle_fields(tmp_path):
    """测试用例6：默认 estimate 不读取真实跳跃率，--validate 才附加真实值与误差"""
    print("\n" + "="*60)
    print("测试用例6：estimate 验证模式")
    print("="*60)

    cfg = write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / 'sim'
    assert main(['simulate', '--config', str(cfg), '--seed', '11', '--out', str(out)]) == 0
    trajectory = str(out / 'trajectory.duckdb')

    plain_out = tmp_path / 'plain'
    assert main(['estimate', trajectory, '--points', '-0.6,0,0.6', '--out', str(plain_out)]) == 0
    plain = pd.read_csv(plain_out / 'estimates.csv')
    print(f"默认列: {list(plain.columns)}")
    assert not {'true_f', 'error', 'omega_flag'} & set(plain.columns)
    report = json.loads((plain_out / 'estimate_report.json').read_text(encoding='utf-8'))
    assert report['validate'] is False
    for entry in report['reports']:
        assert 'omega_flag' not in entry
        assert not {'true_f', 'M', 'B'} & set(entry['diagnostics'])

    checked_out = tmp_path / 'checked'
    assert main(['estimate', trajectory, '--points', '-0.6,0,0.6', '--validate',
                 '--out', str(checked_out)]) == 0
    checked = pd.read_csv(checked_out / 'estimates.csv')
    print(checked.to_string())
    assert {'true_f', 'error', 'omega_flag'} <= set(checked.columns)
    assert checked['true_f'].notna().all()
    pd.testing.assert_series_equal(checked['estimate'], plain['estimate'])
    print("✓ estimate 验证模式测试通过")


def test_simulate_is_reproducible(tmp_path):
    """测试用例2：相同种子两次运行摘要一致，清单可重放"""
    print("\n" + "="*60)
    print("测试用例2：可重复性")
    print("="*60)

    cfg = write_config(tmp_path, SMALL_CONFIG)
    digests = []
    for run in ('a', 'b'):
        out = tmp_path / run
        assert main(['simulate', '--config', str(cfg), '--seed', '3', '--out', str(out)]) == 0
        manifest = json.loads((out / 'simulate_manifest.json').read_text(encoding='utf-8'))
        digests.append(manifest['digests'])
    assert digests[0] == digests[1]

    # 清单作为配置，种子取自清单
    replay = tmp_path / 'replay'
    assert main(['simulate', '--config', str(tmp_path / 'a' / 'simulate_manifest.json'),
                 '--out', str(replay)]) == 0
    manifest = json.loads((replay / 'simulate_manifest.json').read_text(encoding='utf-8'))
    assert manifest['seed'] == 3 and manifest['digests'] == digests[0]

    other = tmp_path / 'other'
    assert main(['simulate', '--config', str(cfg), '--seed', '4', '--out', str(other)]) == 0
    manifest = json.loads((other / 'simulate_manifest.json').read_text(encoding='utf-8'))
    assert manifest['digests']['events.csv'] != digests[0]['events.csv']
    print("✓ 可重复性测试通过")


def test_config_errors_exit_code(tmp_path):
    """测试用例3：配置错误返回 2"""
    print("\n" + "="*60)
    print("测试用例3：配置错误退出码")
    print("="*60)

    zero = write_config(tmp_path, {**SMALL_CONFIG, 'n': 0}, 'zero.json')
    assert main(['simulate', '--config', str(zero), '--out', str(tmp_path / 'x')]) == EXIT_CONFIG_ERROR
    assert main(['check-config', '--config', str(zero)]) == EXIT_CONFIG_ERROR

    unknown = write_config(tmp_path, {**SMALL_CONFIG, 'neurons': 5}, 'unknown.json')
    assert main(['check-config', '--config', str(unknown)]) == EXIT_CONFIG_ERROR
    assert main(['check-config']) == EXIT_CONFIG_ERROR, "缺少 --config"
    assert main(['estimate', str(tmp_path / 'missing.duckdb')]) == EXIT_CONFIG_ERROR

    bad_kernel = write_config(tmp_path, {**SMALL_CONFIG, 'kernel': {'shape': 'triangular'}}, 'kernel.json')
    assert main(['check-config', '--config', str(bad_kernel)]) == EXIT_CONFIG_ERROR
    assert main(['check-config', '--config', str(write_config(tmp_path, SMALL_CONFIG))]) == 0

    # 进程级退出码
    result = subprocess.run(
        [sys.executable, 'app.py', 'check-config', '--config', str(zero)],
        cwd=PROJECT_ROOT, capture_output=True, text=True,
    )
    print(f"子进程退出码: {result.returncode}, stderr: {result.stderr.strip()[-80:]}")
    assert result.returncode == EXIT_CONFIG_ERROR
    print("✓ 配置错误退出码测试通过")


def test_flow_command(tmp_path):
    """测试用例4：flow 写出极限流与平衡点"""
    print("\n" + "="*60)
    print("测试用例4：flow 子命令")
    print("="*60)

    cfg = write_config(tmp_path, {**SMALL_CONFIG, 'horizon': 10.0})
    out = tmp_path / 'flow'
    status = main(['flow', '--config', str(cfg), '--interval', '-5,5', '--points', '0,0.9', '--out', str(out)])
    assert status == 0
    summary = json.loads((out / 'equilibria.json').read_text(encoding='utf-8'))
    print(f"平衡点摘要: {summary}")
    assert len(summary['equilibria']) == 1 and abs(summary['equilibria'][0] - 0.6889) < 1e-3
    assert summary['assumption2'] == {'0': True, '0.9': False}
    frame = pd.read_csv(out / 'flow.csv')
    assert list(frame.columns) == ['t', 'x_t'] and abs(frame['t'].iloc[-1] - 10.0) < 1e-12

    assert main(['flow', '--config', str(cfg), '--interval', '1', '--out', str(out)]) == 1
    print("✓ flow 子命令测试通过")


def test_experiment_fixture_check(tmp_path):
    """测试用例5：risk 实验读取夹具并执行验收"""
    print("\n" + "="*60)
    print("测试用例5：experiment --fixture --check")
    print("="*60)

    n_values = [500, 1000, 2000, 4000, 8000]
    good = tmp_path / 'good.csv'
    pd.DataFrame({'n': n_values, 'mse': [2.0 * n ** (-2.0 / 3.0) for n in n_values]}).to_csv(good, index=False)
    flat = tmp_path / 'flat.csv'
    pd.DataFrame({'n': n_values, 'mse': [0.01] * 5}).to_csv(flat, index=False)

    out = tmp_path / 'risk'
    with mock.patch.dict(os.environ, {'MFN_OUTPUT_DIR': str(out)}):
        assert main(['experiment', 'risk', '--fixture', str(good), '--check']) == 0
    summary = json.loads((out / 'risk_summary.json').read_text(encoding='utf-8'))
    print(f"验收: {summary['acceptance']['passed']}")
    assert summary['acceptance']['passed']

    assert main(['experiment', 'risk', '--fixture', str(flat), '--check', '--out', str(out)]) == 1
    assert main(['experiment', 'risk', '--fixture', str(flat), '--out', str(out)]) == 0, "不带 --check 不做验收"
    assert main(['experiment', 'fig1', '--fixture', str(good), '--out', str(out)]) == EXIT_CONFIG_ERROR
    print("✓ experiment --fixture --check 测试通过")


def main_runner():
    """运行所有测试用例"""
    import tempfile

    print("="*60)
    print("命令行测试")
    print("="*60)

    tests = [
        ("测试1：simulate + estimate", test_simulate_and_estimate),
        ("测试2：可重复性", test_simulate_is_reproducible),
        ("测试3：配置错误退出码", test_config_errors_exit_code),
        ("测试4：flow 子命令", test_flow_command),
        ("测试5：experiment --fixture --check", test_experiment_fixture_check),
        ("测试6：estimate 验证模式", test_estimate_oracle_fields),
    ]
    test_results = []
    for name, fn in tests:
        try:
            with tempfile.TemporaryDirectory() as tmp:
                fn(Path(tmp))
            test_results.append((name, True))
        except Exception as e:
            print(f"✗ {name} 失败: {e}")
            test_results.append((name, False))

    # 汇总结果
    print("\n" + "="*60)
    print("测试结果汇总")
    print("="*60)
    failed = sum(1 for _, ok in test_results if not ok)
    for name, ok in test_results:
        print(f"{'✓ 通过' if ok else '✗ 失败'}: {name}")
    print(f"\n总计: {len(test_results)} 个测试用例, 失败: {failed} 个")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main_runner())
