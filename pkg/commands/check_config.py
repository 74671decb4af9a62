"""
check-config 子命令
只做解析与不变量校验，不运行模拟
"""

import logging

from src.utils.config_parser import build_kernel_from_config, build_model, estimator_settings
from src.experiments.harness import default_plan
from .common import resolve_config

logger = logging.getLogger(__name__)


def run_check_config_command(args) -> int:
    """
    校验配置文件

    :return: 退出码（配置错误由入口转为 2）
    """
    flat, seed = resolve_config(args)
    if 'experiment.name' in flat:
        plan = default_plan(flat['experiment.name'], flat)
        print(f"实验配置有效: {plan.name}, N={list(plan.n_values)}, R={plan.replicates}")
        return 0

    model = build_model(flat)
    kernel = build_kernel_from_config(flat)
    settings = estimator_settings(flat)
    print("配置有效")
    print(f"  漂移: {model.drift.kind}, 跳跃率: {model.rate.kind}, 权重律: {model.weights.kind} (w={model.w:g})")
    print(f"  N={model.n}, x0={model.x0:g}, T={model.horizon:g}, 核: {kernel.shape} (阶 {kernel.order})")
    if settings['points']:
        print(f"  估计点: {settings['points']}")
    if seed is not None:
        print(f"  种子: {seed}")
    return 0
