"""
子命令共享逻辑
配置解析、种子/线程解析、运行清单
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from runtime_env import get_output_dir
from src.core.errors import ModelConfigError
from src.utils.config_parser import load_config, nest_config
from src.utils.output_writers import RunManifest, default_threads

logger = logging.getLogger(__name__)


def resolve_config(args, required: bool = True) -> Tuple[Dict[str, Any], Optional[int]]:
    """
    读取 --config，返回 (点号键配置, 种子)

    种子优先级：--seed > 清单中的种子 > None
    """
    if not getattr(args, 'config', None):
        if required:
            raise ModelConfigError("缺少 --config 配置文件")
        return {}, args.seed
    flat, manifest_seed = load_config(args.config)
    seed = args.seed if args.seed is not None else manifest_seed
    return flat, seed


def resolve_threads(args) -> int:
    threads = getattr(args, 'threads', None)
    if threads is not None and threads < 1:
        raise ModelConfigError(f"--threads 必须 ≥ 1 (threads={threads})")
    return threads or default_threads()


def output_dir(args) -> Path:
    return get_output_dir(getattr(args, 'out', None))


def new_manifest(command: str, flat: Dict[str, Any], seed: Optional[int], threads: int = 1,
                 **extra) -> RunManifest:
    return RunManifest(command=command, config=nest_config(flat), seed=seed, threads=threads, extra=extra)


def finish(manifest: RunManifest, out_dir: Path, timings: Dict[str, float]) -> Path:
    """写出清单（所有输出文件已记录摘要）"""
    manifest.timings.update(timings)
    path = manifest.write(out_dir / f"{manifest.command.replace('-', '_')}_manifest.json")
    logger.info(f"运行清单: {path}")
    return path
