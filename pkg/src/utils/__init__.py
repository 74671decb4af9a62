"""
工具函数模块
- config_parser: 结构化配置解析
- output_writers: CSV/JSON 写出与运行清单
"""

from .config_parser import (
    build_kernel_from_config,
    build_model,
    estimator_settings,
    flatten_config,
    load_config,
    model_to_config,
    nest_config,
    parse_config_text,
    parse_float_list,
)
from .output_writers import RunManifest, Stopwatch, default_threads, trajectory_digest, write_csv, write_json

__all__ = [
    'build_kernel_from_config', 'build_model', 'estimator_settings', 'flatten_config',
    'load_config', 'model_to_config', 'nest_config', 'parse_config_text', 'parse_float_list',
    'RunManifest', 'Stopwatch', 'default_threads', 'trajectory_digest', 'write_csv', 'write_json',
]
