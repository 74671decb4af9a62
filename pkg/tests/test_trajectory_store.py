"""
轨迹文件存储测试：写入/读取、元数据校验、统计信息
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from src.core.errors import TrajectoryFormatError
from src.core.model import ModelSpec, linear_decay_drift, two_minus_gauss_rate, uniform_weights
from src.core.simulator import simulate
from src.core.trajectory_store import TrajectoryStore, load_trajectory, save_trajectory
from src.utils.output_writers import trajectory_digest


def small_model(n: int = 50, horizon: float = 2.0) -> ModelSpec:
    return ModelSpec(drift=linear_decay_drift(), rate=two_minus_gauss_rate(),
                     weights=uniform_weights(-2.0, 3.0), n=n, x0=-1.0, horizon=horizon)


def test_round_trip_events(tmp_path):
    """测试用例1：事件日志写入后逐字节读回"""
    print("\n" + "="*60)
    print("测试用例1：事件日志往返")
    print("="*60)

    traj = simulate(small_model(), seed=11)
    path = save_trajectory(traj, tmp_path / 'traj.duckdb')
    loaded = load_trajectory(path)
    print(f"事件数: 原始={traj.n_events}, 读回={loaded.n_events}")

    assert loaded.seed == 11 and loaded.terminal_time == traj.terminal_time
    assert loaded.model.n == 50 and loaded.model.x0 == -1.0
    assert loaded.model.rate.kind == 'two-minus-gauss'
    assert loaded.model.weights.a == -2.0 and loaded.model.weights.b == 3.0
    assert np.array_equal(loaded.times, traj.times)
    assert np.array_equal(loaded.spikers, traj.spikers)
    assert np.array_equal(loaded.pre_potentials, traj.pre_potentials)
    assert trajectory_digest(loaded) == trajectory_digest(traj), "摘要与存储格式无关"
    print("✓ 事件日志往返测试通过")


def test_round_trip_recorded_states(tmp_path):
    """测试用例2：快照与探针状态的往返"""
    print("\n" + "="*60)
    print("测试用例2：快照与探针往返")
    print("="*60)

    model = small_model(n=20, horizon=1.0)
    snap = simulate(model, seed=3, record='snapshots')
    loaded = load_trajectory(save_trajectory(snap, tmp_path / 'snap.duckdb'))
    assert loaded.record == 'snapshots'
    assert loaded.snapshots.shape == snap.snapshots.shape
    assert np.array_equal(loaded.snapshots, snap.snapshots)

    probes = np.array([0.0, 0.25, 0.5, 1.0])
    probed = simulate(model, seed=3, record='probed', probe_times=probes)
    loaded = load_trajectory(save_trajectory(probed, tmp_path / 'probed.duckdb'))
    print(f"探针矩阵形状: {loaded.probe_states.shape}")
    assert np.array_equal(loaded.probe_times, probes)
    assert np.array_equal(loaded.probe_states, probed.probe_states)
    print("✓ 快照与探针往返测试通过")


def test_kernel_config_and_statistics(tmp_path):
    """测试用例3：附带核配置与统计信息"""
    print("\n" + "="*60)
    print("测试用例3：核配置与统计信息")
    print("="*60)

    traj = simulate(small_model(), seed=5)
    path = tmp_path / 'stats.duckdb'
    with TrajectoryStore(path) as store:
        store.save(traj, kernel_config={'shape': 'smooth-bump', 'order': 1})
        stats = store.get_statistics()
        meta = store.read_meta()
    print(f"统计信息: {stats}")
    assert stats['event_count'] == traj.n_events
    assert stats['distinct_spikers'] == len(np.unique(traj.spikers))
    assert stats['probe_rows'] == 0 and stats['snapshot_rows'] == 0
    assert meta['seed'] == '5' and meta['record'] == 'events-only'

    with TrajectoryStore(path, read_only=True) as store:
        assert store.kernel_config() == {'shape': 'smooth-bump', 'order': 1}

    # 覆盖写入
    other = simulate(small_model(n=10), seed=6)
    with TrajectoryStore(path) as store:
        store.save(other)
        assert store.get_statistics()['event_count'] == other.n_events
        assert store.kernel_config() is None
    print("✓ 核配置与统计信息测试通过")


def test_format_errors(tmp_path):
    """测试用例4：缺失文件、魔数错误与版本不符"""
    print("\n" + "="*60)
    print("测试用例4：轨迹格式错误")
    print("="*60)

    with pytest.raises(TrajectoryFormatError):
        load_trajectory(tmp_path / 'missing.duckdb')

    path = save_trajectory(simulate(small_model(n=5), seed=1), tmp_path / 'bad.duckdb')
    with TrajectoryStore(path) as store:
        store.conn.execute("UPDATE meta SET value = 'NOT-A-TRAJECTORY' WHERE key = 'magic'")
    with pytest.raises(TrajectoryFormatError) as info:
        load_trajectory(path)
    print(f"魔数错误: {info.value}")

    path = save_trajectory(simulate(small_model(n=5), seed=1), tmp_path / 'old.duckdb')
    with TrajectoryStore(path) as store:
        store.conn.execute("UPDATE meta SET value = '0' WHERE key = 'format_version'")
    with pytest.raises(TrajectoryFormatError):
        load_trajectory(path)
    print("✓ 轨迹格式错误测试通过")


def main():
    """运行所有测试用例"""
    import tempfile

    print("="*60)
    print("轨迹文件存储测试")
    print("="*60)

    tests = [
        ("测试1：事件日志往返", test_round_trip_events),
        ("测试2：快照与探针往返", test_round_trip_recorded_states),
        ("测试3：核配置与统计信息", test_kernel_config_and_statistics),
        ("测试4：轨迹格式错误", test_format_errors),
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
    sys.exit(main())
