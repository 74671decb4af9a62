"""
蒙特卡洛重复的并行执行
每个重复使用派生种子独立运行，结果按重复编号排序后归约

线程池只保证结果与线程数无关、按重复编号有序，不保证加速：
simulate 的事件循环是持有 GIL 的纯 Python 代码，多线程只在 numpy/scipy 释放 GIL 的块运算
与 DuckDB 读写上重叠。任务是闭包，不能直接交给进程池。
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from src.utils.output_writers import default_threads

logger = logging.getLogger(__name__)

T = TypeVar('T')


def replica_seed(master_seed: int, n_index: int, replicate: int) -> int:
    """
    由 (主种子, N 序号, 重复编号) 派生重复种子

    :return: 32 位无符号整数种子
    """
    state = np.random.SeedSequence([int(master_seed), int(n_index), int(replicate)]).generate_state(1)
    return int(state[0])


class ReplicaRunner:
    """重复执行器 - 线程池调度、固定顺序收集（受 GIL 限制，加速有限）"""

    def __init__(self, max_workers: Optional[int] = None):
        """
        初始化执行器

        :param max_workers: 并发线程数（None 为物理核数）
        """
        self.max_workers = max(1, int(max_workers or default_threads()))

    def run(self, task: Callable[[int, int], T], seeds: Sequence[int], label: str = '') -> List[T]:
        """
        并行执行 task(replicate, seed)

        :param task: 单个重复的计算
        :param seeds: 每个重复的种子（下标即重复编号）
        :param label: 日志标签
        :return: 按重复编号排序的结果列表
        """
        results: List[Optional[T]] = [None] * len(seeds)
        if not seeds:
            return []
        if self.max_workers == 1:
            for r, seed in enumerate(seeds):
                results[r] = task(r, seed)
            logger.info(f"{label} 完成 {len(seeds)}/{len(seeds)} 个重复")
            return results

        done = 0
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {executor.submit(task, r, seed): r for r, seed in enumerate(seeds)}
            for future in as_completed(futures):
                r = futures[future]
                try:
                    results[r] = future.result()
                except Exception as e:
                    logger.error(f"{label} 重复 {r} (seed={seeds[r]}) 失败: {e}", exc_info=True)
                    for pending in futures:
                        pending.cancel()
                    raise
                done += 1
                if done % max(1, len(seeds) // 10) == 0 or done == len(seeds):
                    logger.info(f"{label} 完成 {done}/{len(seeds)} 个重复")
        return results
