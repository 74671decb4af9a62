"""
simulate 子命令
模拟一条轨迹，写出轨迹文件、事件日志 CSV 与运行清单
"""

import logging

from config import DEFAULT_CHECKPOINT_INTERVAL, DEFAULT_EVENT_CAP
from src.core.simulator import simulate
from src.core.trajectory_store import save_trajectory
from src.utils.config_parser import build_model
from src.utils.output_writers import Stopwatch, trajectory_digest, write_csv
from .common import finish, new_manifest, output_dir, resolve_config

logger = logging.getLogger(__name__)


def run_simulate_command(args) -> int:
    """
    模拟并写出结果

    :param args: 命令行参数（config, seed, out, record）
    :return: 退出码
    """
    flat, seed = resolve_config(args)
    seed = 0 if seed is None else seed
    model = build_model(flat)
    record = args.record or flat.get('simulation.record', 'events-only')
    out_dir = output_dir(args)
    watch = Stopwatch()

    with watch.measure('simulate'):
        traj = simulate(
            model, seed, record,
            bound_strategy=flat.get('simulation.bound_strategy'),
            event_cap=int(flat.get('simulation.event_cap', DEFAULT_EVENT_CAP)),
            checkpoint_interval=float(flat.get('simulation.checkpoint', DEFAULT_CHECKPOINT_INTERVAL)),
        )

    kernel_cfg = None
    if 'kernel.shape' in flat:
        kernel_cfg = {'shape': flat['kernel.shape'], 'order': int(flat.get('kernel.order', 1))}
    manifest = new_manifest('simulate', flat, seed, record=record, n_events=traj.n_events,
                            stats=dict(traj.stats))
    with watch.measure('write'):
        events_path = write_csv(traj.to_frame(), out_dir / 'events.csv')
        manifest.record_output(events_path)
        traj_path = save_trajectory(traj, out_dir / 'trajectory.duckdb', kernel_cfg)
        # DuckDB 文件字节不稳定，记录内容摘要
        manifest.record_output(traj_path, trajectory_digest(traj))

    finish(manifest, out_dir, watch.timings)
    print(f"模拟完成: N={model.n}, T={model.horizon}, 事件数={traj.n_events}, 输出目录={out_dir}")
    return 0
