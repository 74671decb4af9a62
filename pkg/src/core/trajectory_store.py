"""
轨迹文件存储
使用 DuckDB 保存事件日志、快照与探针状态，meta 表记录魔数与格式版本
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import duckdb
import numpy as np
import pandas as pd

from config import TOOL_VERSION, TRAJECTORY_FORMAT_VERSION, TRAJECTORY_MAGIC
from .errors import TrajectoryFormatError
from .simulator import SystemTrajectory

logger = logging.getLogger(__name__)


class TrajectoryStore:
    """轨迹文件管理类"""

    def __init__(self, db_path: Union[str, Path], read_only: bool = False):
        """
        打开（或创建）轨迹文件

        :param db_path: 文件路径
        :param read_only: 只读打开（文件必须存在）
        """
        self.db_path = str(db_path)
        if read_only and not Path(self.db_path).exists():
            raise TrajectoryFormatError(f"轨迹文件不存在: {self.db_path}")
        try:
            self.conn = duckdb.connect(self.db_path, read_only=read_only)
        except duckdb.Error as e:
            raise TrajectoryFormatError(f"无法打开轨迹文件 {self.db_path}: {e}")
        if not read_only:
            self._init_tables()

    def _init_tables(self):
        """初始化数据表"""
        # 元数据：魔数、格式版本、模型配置、种子、终止时刻
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS meta (
                key VARCHAR PRIMARY KEY,
                value VARCHAR NOT NULL
            )
        """)

        # 事件日志（spiker 为 0 起始编号）
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS events (
                n BIGINT NOT NULL,
                time DOUBLE NOT NULL,
                spiker BIGINT NOT NULL,
                weight DOUBLE NOT NULL,
                pre_potential DOUBLE NOT NULL
            )
        """)

        # 探针与快照状态（长表）
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS probes (
                probe BIGINT NOT NULL,
                time DOUBLE NOT NULL,
                neuron BIGINT NOT NULL,
                value DOUBLE NOT NULL
            )
        """)
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS snapshots (
                event BIGINT NOT NULL,
                neuron BIGINT NOT NULL,
                value DOUBLE NOT NULL
            )
        """)

    def save(self, traj: SystemTrajectory, kernel_config: Optional[Dict] = None):
        """
        写入一条轨迹（覆盖文件中已有内容）

        :param traj: 轨迹
        :param kernel_config: 附带保存的核配置（可选）
        """
        from src.utils.config_parser import model_to_config

        for table in ('meta', 'events', 'probes', 'snapshots'):
            self.conn.execute(f"DELETE FROM {table}")

        config = model_to_config(traj.model)
        if kernel_config:
            config['kernel'] = kernel_config
        meta = {
            'magic': TRAJECTORY_MAGIC,
            'format_version': str(TRAJECTORY_FORMAT_VERSION),
            'tool_version': TOOL_VERSION,
            'model_config': json.dumps(config, sort_keys=True),
            'seed': str(traj.seed),
            'terminal_time': repr(float(traj.terminal_time)),
            'record': traj.record,
        }
        meta_df = pd.DataFrame({'key': list(meta.keys()), 'value': list(meta.values())})
        self.conn.register('temp_meta_df', meta_df)
        self.conn.execute("INSERT INTO meta SELECT key, value FROM temp_meta_df")
        self.conn.unregister('temp_meta_df')

        events_df = traj.to_frame()
        if not events_df.empty:
            self.conn.register('temp_events_df', events_df)
            self.conn.execute("""
                INSERT INTO events SELECT n, time, spiker, weight, pre_potential FROM temp_events_df
            """)
            self.conn.unregister('temp_events_df')

        if traj.probe_states is not None:
            P, N = traj.probe_states.shape
            probes_df = pd.DataFrame({
                'probe': np.repeat(np.arange(P), N),
                'time': np.repeat(traj.probe_times, N),
                'neuron': np.tile(np.arange(N), P),
                'value': traj.probe_states.reshape(-1),
            })
            self.conn.register('temp_probes_df', probes_df)
            self.conn.execute("INSERT INTO probes SELECT probe, time, neuron, value FROM temp_probes_df")
            self.conn.unregister('temp_probes_df')

        if traj.snapshots is not None and traj.snapshots.size:
            E, N = traj.snapshots.shape
            snapshots_df = pd.DataFrame({
                'event': np.repeat(np.arange(E), N),
                'neuron': np.tile(np.arange(N), E),
                'value': traj.snapshots.reshape(-1),
            })
            self.conn.register('temp_snapshots_df', snapshots_df)
            self.conn.execute("INSERT INTO snapshots SELECT event, neuron, value FROM temp_snapshots_df")
            self.conn.unregister('temp_snapshots_df')

        logger.info(f"轨迹已写入 {self.db_path}: 事件数={traj.n_events}")

    def read_meta(self) -> Dict[str, str]:
        """读取并校验元数据"""
        try:
            rows = self.conn.execute("SELECT key, value FROM meta").fetchall()
        except duckdb.Error as e:
            raise TrajectoryFormatError(f"轨迹文件缺少 meta 表或已损坏: {e}")
        meta = dict(rows)
        if meta.get('magic') != TRAJECTORY_MAGIC:
            raise TrajectoryFormatError(f"魔数不符: {meta.get('magic')!r}（应为 {TRAJECTORY_MAGIC}）")
        if meta.get('format_version') != str(TRAJECTORY_FORMAT_VERSION):
            raise TrajectoryFormatError(
                f"格式版本不符: {meta.get('format_version')}（支持 {TRAJECTORY_FORMAT_VERSION}）"
            )
        return meta

    def load(self) -> SystemTrajectory:
        """
        读取轨迹

        :return: SystemTrajectory
        """
        from src.utils.config_parser import build_model, flatten_config

        meta = self.read_meta()
        try:
            config = json.loads(meta['model_config'])
            model = build_model(flatten_config(config))
            events = self.conn.execute(
                "SELECT time, spiker, weight, pre_potential FROM events ORDER BY n"
            ).df()
            probes = self.conn.execute(
                "SELECT probe, time, neuron, value FROM probes ORDER BY probe, neuron"
            ).df()
            snapshots = self.conn.execute(
                "SELECT event, neuron, value FROM snapshots ORDER BY event, neuron"
            ).df()
        except (KeyError, ValueError, duckdb.Error) as e:
            raise TrajectoryFormatError(f"轨迹文件内容损坏: {e}")

        n = model.n
        probe_times = probe_states = snapshot_array = None
        if not probes.empty:
            P = int(probes['probe'].max()) + 1
            probe_states = probes['value'].to_numpy().reshape(P, n)
            probe_times = probes['time'].to_numpy()[::n]
        if not snapshots.empty:
            E = int(snapshots['event'].max()) + 1
            snapshot_array = snapshots['value'].to_numpy().reshape(E, n)

        return SystemTrajectory(
            model=model,
            seed=int(meta['seed']),
            terminal_time=float(meta['terminal_time']),
            times=events['time'].to_numpy(dtype=float),
            spikers=events['spiker'].to_numpy(dtype=np.int64),
            weights=events['weight'].to_numpy(dtype=float),
            pre_potentials=events['pre_potential'].to_numpy(dtype=float),
            record=meta.get('record', 'events-only'),
            snapshots=snapshot_array,
            probe_times=probe_times,
            probe_states=probe_states,
        )

    def kernel_config(self) -> Optional[Dict]:
        """轨迹附带的核配置（若有）"""
        config = json.loads(self.read_meta()['model_config'])
        return config.get('kernel')

    def get_statistics(self) -> Dict:
        """
        获取轨迹文件统计信息

        :return: 统计信息字典
        """
        stats = {}
        stats['event_count'] = self.conn.execute("SELECT COUNT(*) FROM events").fetchone()[0]
        stats['distinct_spikers'] = self.conn.execute(
            "SELECT COUNT(DISTINCT spiker) FROM events"
        ).fetchone()[0]
        stats['last_event_time'] = self.conn.execute("SELECT MAX(time) FROM events").fetchone()[0]
        stats['probe_rows'] = self.conn.execute("SELECT COUNT(*) FROM probes").fetchone()[0]
        stats['snapshot_rows'] = self.conn.execute("SELECT COUNT(*) FROM snapshots").fetchone()[0]
        return stats

    def close(self):
        """关闭数据库连接"""
        self.conn.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def save_trajectory(traj: SystemTrajectory, path: Union[str, Path],
                    kernel_config: Optional[Dict] = None) -> Path:
    path = Path(path)
    with TrajectoryStore(path) as store:
        store.save(traj, kernel_config)
    return path


def load_trajectory(path: Union[str, Path]) -> SystemTrajectory:
    with TrajectoryStore(path, read_only=True) as store:
        return store.load()
