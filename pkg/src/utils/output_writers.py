"""
输出文件工具
CSV/JSON 写出、运行清单（原子写入）、SHA-256 摘要与系统资源信息
"""

import hashlib
import json
import logging
import os
import tempfile
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
import psutil

from config import DEFAULT_MAX_WORKERS, MANIFEST_VERSION, TOOL_VERSION

logger = logging.getLogger(__name__)


def default_threads() -> int:
    """默认线程数：物理核数（取不到时用配置默认值）"""
    return psutil.cpu_count(logical=False) or DEFAULT_MAX_WORKERS


def peak_memory_mb() -> float:
    """当前进程常驻内存（MB）"""
    info = psutil.Process().memory_info()
    return getattr(info, 'peak_wset', info.rss) / (1024 * 1024)


def file_digest(path: Union[str, Path]) -> str:
    sha = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b''):
            sha.update(chunk)
    return sha.hexdigest()


def array_digest(*arrays: np.ndarray) -> str:
    """多个数组规范字节（小端、C 连续）的 SHA-256"""
    sha = hashlib.sha256()
    for array in arrays:
        if array is None:
            sha.update(b'none')
            continue
        canonical = np.ascontiguousarray(array)
        canonical = canonical.astype(canonical.dtype.newbyteorder('<'), copy=False)
        sha.update(str(canonical.dtype).encode())
        sha.update(str(canonical.shape).encode())
        sha.update(canonical.tobytes())
    return sha.hexdigest()


def trajectory_digest(traj) -> str:
    """轨迹内容摘要（与存储格式无关）"""
    return array_digest(traj.times, traj.spikers, traj.weights, traj.pre_potentials,
                        traj.snapshots, traj.probe_times, traj.probe_states)


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"无法序列化的类型 {type(value).__name__}")


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    _atomic_write_text(path, json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True,
                                        default=_json_default) + '\n')
    logger.info(f"已写入 {path}")
    return path


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """写出 CSV（浮点使用 repr 精度，保证重放时逐字节一致）"""
    path = Path(path)
    _atomic_write_text(path, df.to_csv(index=False, float_format='%.17g', lineterminator='\n'))
    logger.info(f"已写入 {path} ({len(df)} 行)")
    return path


@dataclass
class RunManifest:
    """
    运行清单：配置快照、主种子、工具版本、耗时与输出文件摘要
    本身可作为 --config 输入以重放
    """
    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    threads: int = 1
    tool_version: str = TOOL_VERSION
    manifest_version: int = MANIFEST_VERSION
    timings: Dict[str, float] = field(default_factory=dict)
    digests: Dict[str, str] = field(default_factory=dict)
    peak_memory_mb: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    def record_output(self, path: Union[str, Path], digest: Optional[str] = None) -> None:
        path = Path(path)
        self.digests[path.name] = digest or file_digest(path)

    def write(self, path: Union[str, Path]) -> Path:
        self.peak_memory_mb = round(peak_memory_mb(), 1)
        return write_json(asdict(self), path)


class Stopwatch:
    """按阶段记录耗时"""

    def __init__(self):
        self.timings: Dict[str, float] = {}

    @contextmanager
    def measure(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - started, 4)
