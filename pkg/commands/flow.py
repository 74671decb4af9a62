"""
flow 子命令
求解极限 ODE，写出 (t, x_t) CSV 与平衡点 JSON
"""

import logging

from config import DEFAULT_SWEEP_INTERVAL
from src.core.errors import FlowDomainError
from src.core.flow import check_assumption2, find_equilibria, solve_limit_ode
from src.utils.config_parser import build_model, parse_float_list
from src.utils.output_writers import Stopwatch, write_csv, write_json
from .common import finish, new_manifest, output_dir, resolve_config

logger = logging.getLogger(__name__)


def run_flow_command(args) -> int:
    """
    极限流与平衡点

    :param args: 命令行参数（config, interval, points, out）
    :return: 退出码
    """
    flat, _ = resolve_config(args)
    model = build_model(flat)
    interval = tuple(parse_float_list(args.interval)) if args.interval else DEFAULT_SWEEP_INTERVAL
    if len(interval) != 2:
        raise FlowDomainError(f"--interval 需要两个数 (得到 {args.interval})")
    watch = Stopwatch()

    with watch.measure('flow'):
        flow = solve_limit_ode(model)
    with watch.measure('equilibria'):
        roots = find_equilibria(model, interval)

    points = parse_float_list(args.points) if args.points else []
    assumption2 = {f"{x:g}": check_assumption2(flow, x) for x in points}

    out_dir = output_dir(args)
    manifest = new_manifest('flow', flat, None, interval=list(interval))
    manifest.record_output(write_csv(flow.to_frame(), out_dir / 'flow.csv'))
    summary = {
        'x0': model.x0,
        'horizon': model.horizon,
        'x_T': flow.terminal,
        'search_interval': list(interval),
        'equilibria': roots,
        'assumption2': assumption2,
    }
    manifest.record_output(write_json(summary, out_dir / 'equilibria.json'))
    finish(manifest, out_dir, watch.timings)

    print(f"极限流: x_T={flow.terminal:.6f}, 平衡点={[round(r, 6) for r in roots]}")
    return 0
