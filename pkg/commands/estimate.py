"""
estimate 子命令
读取轨迹文件，在一组估计点上批量估计跳跃率
"""

import logging

from config import FIG_BANDWIDTH_EXPONENT
from src.core.estimator import EstimatorConfig, estimate_rate, reports_to_frame
from src.core.flow import solve_limit_ode
from src.core.model import build_kernel
from src.core.trajectory_store import TrajectoryStore
from src.utils.config_parser import build_kernel_from_config, estimator_settings, parse_float_list
from src.utils.output_writers import Stopwatch, trajectory_digest, write_csv, write_json
from .common import finish, new_manifest, output_dir, resolve_config

logger = logging.getLogger(__name__)

# 只有已知真实模型时才有意义的字段
ORACLE_COLUMNS = ('true_f', 'error', 'omega_flag')


def _resolve_points(args, settings) -> list:
    if args.points is not None:
        return parse_float_list(args.points)
    if settings['points']:
        return settings['points']
    if settings['x_star'] is not None:
        return [float(settings['x_star'])]
    return []


def run_estimate_command(args) -> int:
    """
    批量估计并写出 CSV 与 JSON 报告

    :param args: 命令行参数（trajectory, config, points, bandwidth, out）
    :return: 退出码
    """
    flat, _ = resolve_config(args, required=False)
    settings = estimator_settings(flat)
    watch = Stopwatch()

    with watch.measure('load'):
        with TrajectoryStore(args.trajectory, read_only=True) as store:
            traj = store.load()
            stored_kernel = store.kernel_config()
    model = traj.model

    if 'kernel.shape' in flat:
        kernel = build_kernel_from_config(flat)
    elif stored_kernel:
        kernel = build_kernel(stored_kernel['shape'], int(stored_kernel.get('order', 1)))
    else:
        kernel = build_kernel('rectangular')

    bandwidth = args.bandwidth or settings['bandwidth'] or model.n ** (-FIG_BANDWIDTH_EXPONENT)
    points = _resolve_points(args, settings)
    cfg = EstimatorConfig(kernel=kernel, bandwidth=float(bandwidth), x_star=points[0] if points else 0.0,
                          subset=settings['subset'], epsilon=settings['epsilon'])

    if args.validate:
        # 验证模式：模型已知，附加 Ω 事件、真实值与误差分解
        with watch.measure('flow'):
            flow = solve_limit_ode(model)
        with watch.measure('estimate'):
            reports = [estimate_rate(traj, cfg.with_point(x), flow=flow, true_f=model.rate) for x in points]
            table = reports_to_frame(reports, true_f=model.rate)
        entries = [r.to_dict() for r in reports]
    else:
        with watch.measure('estimate'):
            reports = [estimate_rate(traj, cfg.with_point(x)) for x in points]
            table = reports_to_frame(reports).drop(columns=list(ORACLE_COLUMNS))
        entries = [{k: v for k, v in r.to_dict().items() if k not in ORACLE_COLUMNS} for r in reports]

    out_dir = output_dir(args)
    manifest = new_manifest('estimate', flat, traj.seed, trajectory=str(args.trajectory),
                            trajectory_digest=trajectory_digest(traj),
                            bandwidth=float(bandwidth), kernel=kernel.shape, points=points,
                            validate=bool(args.validate))
    csv_path = write_csv(table, out_dir / 'estimates.csv')
    manifest.record_output(csv_path)
    report = {'bandwidth': float(bandwidth), 'kernel': kernel.shape, 'n': model.n,
              'validate': bool(args.validate), 'reports': entries}
    json_path = write_json(report, out_dir / 'estimate_report.json')
    manifest.record_output(json_path)
    finish(manifest, out_dir, watch.timings)

    print(f"估计完成: {len(points)} 个点, h={bandwidth:.6g}, 输出目录={out_dir}")
    return 0
