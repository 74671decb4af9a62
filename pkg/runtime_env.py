"""
运行环境配置
从环境变量读取输出目录覆盖，支持 .env 文件
"""
import os
from pathlib import Path
from typing import Optional

from config import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV_VAR

# 尝试加载 .env 文件
try:
    from dotenv import load_dotenv
    env_path = Path(__file__).parent / '.env'
    load_dotenv(env_path)
except ImportError:
    # 如果没有安装 python-dotenv，直接从环境变量读取
    pass


def get_output_dir(cli_value: Optional[str] = None) -> Path:
    """
    解析输出目录

    优先级：命令行 --out > 环境变量 MFN_OUTPUT_DIR > 默认目录

    :param cli_value: 命令行传入的目录
    :return: 输出目录路径（已创建）
    """
    value = cli_value or os.getenv(OUTPUT_DIR_ENV_VAR, '') or DEFAULT_OUTPUT_DIR
    out_dir = Path(value)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir
