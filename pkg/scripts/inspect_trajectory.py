"""
检查轨迹文件
元数据、事件统计、放电者分布与终端状态
"""

import sys
from pathlib import Path
import json

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np

from src.core.errors import TrajectoryFormatError
from src.core.simulator import detect_extinction, states_at
from src.core.trajectory_store import TrajectoryStore


def inspect_trajectory(path: str) -> bool:
    """打印轨迹文件概况"""
    print("=" * 60)
    print(f"轨迹文件检查: {path}")
    print("=" * 60)

    try:
        store = TrajectoryStore(path, read_only=True)
    except TrajectoryFormatError as e:
        print(f"❌ 无法打开: {e}")
        return False

    with store:
        # 1. 元数据
        print("\n1. 元数据:")
        print("-" * 60)
        try:
            meta = store.read_meta()
        except TrajectoryFormatError as e:
            print(f"❌ 元数据无效: {e}")
            return False
        for key in ('magic', 'format_version', 'tool_version', 'seed', 'terminal_time', 'record'):
            print(f"  {key}: {meta.get(key)}")
        config = json.loads(meta['model_config'])
        print(f"  模型配置: {json.dumps(config, ensure_ascii=False)}")

        # 2. 表统计
        print("\n2. 表统计:")
        print("-" * 60)
        stats = store.get_statistics()
        for key, value in stats.items():
            print(f"  {key}: {value}")

        traj = store.load()

    # 3. 放电者分布
    print("\n3. 放电者分布:")
    print("-" * 60)
    n = traj.model.n
    if traj.n_events:
        counts = np.bincount(traj.spikers, minlength=n)
        print(f"  每个神经元平均放电次数: {counts.mean():.3f}")
        print(f"  最多/最少: {counts.max()} / {counts.min()}")
        print(f"  从未放电的神经元: {int(np.sum(counts == 0))} / {n}")
        gaps = np.diff(np.concatenate([[0.0], traj.times]))
        print(f"  平均事件间隔: {gaps.mean():.6g}")
    else:
        print("  没有事件")

    # 4. 终端状态
    print("\n4. 终端状态:")
    print("-" * 60)
    terminal = states_at(traj, traj.terminal_time)
    print(f"  平均电位: {terminal.mean():.6f}")
    print(f"  范围: [{terminal.min():.6f}, {terminal.max():.6f}]")
    report = detect_extinction(traj)
    print(f"  熄灭: {'是' if report.extinct else '否'} (最后放电={report.last_spike}, "
          f"终端总速率={report.terminal_rate:.3g})")
    return True


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="检查轨迹文件")
    parser.add_argument("path", type=str, help="轨迹文件路径")
    args = parser.parse_args()

    if not inspect_trajectory(args.path):
        sys.exit(1)
