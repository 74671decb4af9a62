"""
experiment 子命令
运行蒙特卡洛实验，写出 CSV 与 JSON 摘要；--check 时执行验收并以非零状态报告失败
"""

import logging

import pandas as pd

from src.core.errors import ModelConfigError
from src.experiments.acceptance_checker import AcceptanceChecker
from src.experiments.harness import EXPERIMENT_NAMES, default_plan, risk_result_from_table, run_experiment
from src.experiments.replica_runner import ReplicaRunner
from src.utils.output_writers import Stopwatch, write_csv, write_json
from .common import finish, new_manifest, output_dir, resolve_config, resolve_threads

logger = logging.getLogger(__name__)


def run_experiment_command(args) -> int:
    """
    运行实验

    :param args: 命令行参数（name, config, seed, threads, check, out）
    :return: 退出码（--check 且验收失败时为 1）
    """
    flat, seed = resolve_config(args, required=False)
    name = args.name or flat.get('experiment.name')
    if not name:
        raise ModelConfigError(f"需要实验名（位置参数或 experiment.name），可选: {', '.join(EXPERIMENT_NAMES)}")
    if seed is not None:
        flat['experiment.seed'] = int(seed)
    flat['experiment.name'] = name
    plan = default_plan(name, flat)
    threads = resolve_threads(args)
    runner = ReplicaRunner(max_workers=threads)
    watch = Stopwatch()

    with watch.measure('experiment'):
        if getattr(args, 'fixture', None):
            if name != 'risk':
                raise ModelConfigError("--fixture 只适用于 risk 实验")
            result = risk_result_from_table(pd.read_csv(args.fixture), plan.beta)
        else:
            result = run_experiment(plan, runner)

    out_dir = output_dir(args)
    manifest = new_manifest('experiment', flat, plan.seed, threads=threads, experiment=name,
                            n_values=list(plan.n_values), replicates=plan.replicates)
    for frame_name, frame in result.frames.items():
        manifest.record_output(write_csv(frame, out_dir / f"{name}_{frame_name}.csv"))

    summary = {'experiment': name, 'seed': plan.seed, 'n_values': list(plan.n_values),
               'replicates': plan.replicates, 'metrics': result.summary}
    passed = True
    if args.check:
        with watch.measure('check'):
            report = AcceptanceChecker(result).generate_report()
        summary['acceptance'] = report
        passed = report['passed']
    manifest.record_output(write_json(summary, out_dir / f"{name}_summary.json"))
    finish(manifest, out_dir, watch.timings)

    print(f"实验 {name} 完成，输出目录={out_dir}")
    if args.check:
        for check in summary['acceptance']['checks']:
            mark = '✓' if check['passed'] else ('·' if check['informational'] else '✗')
            print(f"  {mark} {check['name']}: {check['value']} ({check['threshold']})")
        if not passed:
            logger.warning(f"实验 {name} 验收未通过")
            return 1
    return 0
