"""
桌面规模验收
依次运行各实验的桌面规模默认计划并执行验收检查
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import logging
import time

from src.experiments import AcceptanceChecker, ReplicaRunner, default_plan, run_experiment
from src.utils.output_writers import default_threads

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# 桌面规模的快速子集
DESK_EXPERIMENTS = ['fig1', 'fig3', 'fig4', 'occupation', 'extinction']


def main(names=None, seed: int = 0, threads=None) -> int:
    print("=" * 60)
    print("桌面规模验收")
    print("=" * 60)

    runner = ReplicaRunner(max_workers=threads or default_threads())
    results = {}
    for name in names or DESK_EXPERIMENTS:
        print(f"\n[{name}]")
        start = time.time()
        plan = default_plan(name, {'experiment.seed': seed})
        report = AcceptanceChecker(run_experiment(plan, runner)).generate_report()
        for check in report['checks']:
            mark = '✓' if check['passed'] else ('·' if check['informational'] else '✗')
            print(f"  {mark} {check['name']}: {check['value']} ({check['threshold']})")
        print(f"  耗时 {time.time() - start:.1f}s")
        results[name] = report['passed']

    print("\n" + "=" * 60)
    passed = sum(results.values())
    print(f"通过 {passed}/{len(results)} 个实验")
    for name, ok in results.items():
        print(f"  {'✅' if ok else '❌'} {name}")
    print("=" * 60)
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="桌面规模验收")
    parser.add_argument("names", nargs="*", help="实验名（默认快速子集）")
    parser.add_argument("--seed", type=int, default=0, help="主种子")
    parser.add_argument("--threads", type=int, default=None, help="并行线程数（默认物理核数）")
    args = parser.parse_args()
    sys.exit(main(args.names, args.seed, args.threads))
