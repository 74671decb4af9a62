"""
命令行入口 - 子命令路由
simulate / estimate / flow / experiment / check-config
"""

import argparse
import logging
import sys
from typing import List, Optional

from config import RECORD_LEVELS, TOOL_VERSION
from src.core.errors import KernelError, MeanFieldError, ModelConfigError, TrajectoryFormatError
from src.experiments.harness import EXPERIMENT_NAMES

# 导入子命令
from commands.check_config import run_check_config_command
from commands.estimate import run_estimate_command
from commands.experiment import run_experiment_command
from commands.flow import run_flow_command
from commands.simulate import run_simulate_command

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG_ERROR = 2

# 配置类错误：输入本身无效
CONFIG_ERRORS = (ModelConfigError, KernelError, TrajectoryFormatError)

COMMANDS = {
    'simulate': run_simulate_command,
    'estimate': run_estimate_command,
    'flow': run_flow_command,
    'experiment': run_experiment_command,
    'check-config': run_check_config_command,
}


def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器（全局选项写在子命令之后）"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="JSON 配置文件（也可以是运行清单，用于重放）")
    common.add_argument("--seed", type=int, default=None, help="主种子（覆盖配置与清单中的种子）")
    common.add_argument("--threads", type=int, default=None, help="并行线程数上限（默认物理核数）")
    common.add_argument("--out", type=str, default=None,
                        help="输出目录（默认读取 MFN_OUTPUT_DIR，否则 outputs/）")
    common.add_argument("--check", action="store_true", help="运行验收检查，失败时返回非零状态")
    common.add_argument("-v", "--verbose", action="store_true", help="输出 DEBUG 日志")

    parser = argparse.ArgumentParser(
        prog="mfneuron",
        description="平均场脉冲神经元系统：精确模拟、跳跃率核估计与蒙特卡洛实验",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="模拟一条轨迹")
    simulate.add_argument("--record", choices=RECORD_LEVELS, default=None,
                          help="记录级别（默认取配置 simulation.record）")

    estimate = sub.add_parser("estimate", parents=[common], help="在已保存的轨迹上估计跳跃率")
    estimate.add_argument("trajectory", type=str, help="轨迹文件路径（simulate 的输出）")
    estimate.add_argument("--points", type=str, default=None, help="逗号分隔的估计点，如 -0.6,0,0.6")
    estimate.add_argument("--bandwidth", type=float, default=None, help="带宽 h（默认 N^-0.49）")
    estimate.add_argument("--validate", action="store_true",
                          help="验证模式：用轨迹文件中的模型计算 Ω 事件、真实值与误差分解")

    flow = sub.add_parser("flow", parents=[common], help="极限 ODE 与平衡点")
    flow.add_argument("--interval", type=str, default=None, help="平衡点搜索区间，如 -3,3")
    flow.add_argument("--points", type=str, default=None, help="检查 Assumption 2 的估计点")

    experiment = sub.add_parser("experiment", parents=[common], help="运行蒙特卡洛实验")
    experiment.add_argument("name", nargs="?", choices=EXPERIMENT_NAMES, default=None, help="实验名")
    experiment.add_argument("--fixture", type=str, default=None,
                            help="risk 实验：直接读取 (n, mse) CSV 而不运行模拟")

    sub.add_parser("check-config", parents=[common], help="只校验配置文件")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数 - 路由控制器"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # 配置日志
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s'
    )

    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as e:
        logger.error(f"配置错误: {e}")
        print(f"❌ 配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except MeanFieldError as e:
        logger.error(f"{args.command} 运行失败: {e}", exc_info=True)
        print(f"❌ 运行失败: {e}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} 运行失败: {e}", exc_info=True)
        print(f"❌ 运行失败: {e}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
