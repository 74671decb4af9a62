"""
结构化配置解析工具
支持嵌套与扁平点号两种 JSON 写法（可混用），也接受运行清单作为配置
"""

import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from config import DEFAULT_OMEGA_EPSILON
from src.core.errors import ModelConfigError
from src.core.model import (
    DRIFT_BUILDERS,
    RATE_BUILDERS,
    KernelSpec,
    ModelSpec,
    build_kernel,
    point_weights,
    uniform_weights,
)

logger = logging.getLogger(__name__)

# 已知键及其类型
KNOWN_KEYS: Dict[str, tuple] = {
    'drift.kind': (str,),
    'drift.rate': (int, float),
    'rate.kind': (str,),
    'rate.params': (dict,),
    'rate.bound': (int, float),
    'weights.kind': (str,),
    'weights.a': (int, float),
    'weights.b': (int, float),
    'weights.value': (int, float),
    'n': (int,),
    'x0': (int, float),
    'horizon': (int, float),
    'kernel.shape': (str,),
    'kernel.order': (int,),
    'simulation.bound_strategy': (str,),
    'simulation.event_cap': (int,),
    'simulation.checkpoint': (int, float),
    'simulation.record': (str,),
    'estimator.bandwidth': (int, float),
    'estimator.x_star': (int, float),
    'estimator.points': (list,),
    'estimator.epsilon': (int, float),
    'estimator.subset': (list,),
    'experiment.name': (str,),
    'experiment.n_values': (list,),
    'experiment.replicates': (int,),
    'experiment.bandwidth_c': (int, float),
    'experiment.bandwidth_a': (int, float),
    'experiment.points': (list,),
    'experiment.gammas': (list,),
    'experiment.x_star': (int, float),
    'experiment.seed': (int,),
    'experiment.beta': (int, float),
}

# 值为字典的叶子键，不再向下展开
_DICT_LEAVES = {'rate.params'}

MODEL_DEFAULTS: Dict[str, Any] = {
    'drift.kind': 'linear-decay',
    'kernel.shape': 'rectangular',
    'kernel.order': 1,
}


def _flatten(node: Dict[str, Any], prefix: str, out: Dict[str, Any]) -> None:
    for key, value in node.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if path.startswith('rate.params.'):
            params = out.setdefault('rate.params', {})
            params[path[len('rate.params.'):]] = value
            continue
        if path in _DICT_LEAVES and isinstance(value, dict):
            out.setdefault(path, {}).update(value)
            continue
        if isinstance(value, dict):
            _flatten(value, path, out)
            continue
        if path in out and out[path] != value:
            raise ModelConfigError(f"配置键 {path} 重复且取值冲突")
        out[path] = value


def flatten_config(raw: Dict[str, Any]) -> Dict[str, Any]:
    """
    把嵌套/扁平混合写法统一展开为点号键，并校验键名与类型

    :param raw: JSON 解析得到的字典
    :return: 点号键字典
    """
    if not isinstance(raw, dict):
        raise ModelConfigError("配置顶层必须是 JSON 对象")
    flat: Dict[str, Any] = {}
    _flatten(raw, '', flat)
    for key, value in flat.items():
        if key not in KNOWN_KEYS:
            raise ModelConfigError(f"未知的配置键 {key}")
        expected = KNOWN_KEYS[key]
        if isinstance(value, bool) or not isinstance(value, expected):
            names = '/'.join(t.__name__ for t in expected)
            raise ModelConfigError(f"配置键 {key} 的类型应为 {names}，实际为 {type(value).__name__}")
    return flat


def parse_config_text(text: str, source: str = '<config>') -> Tuple[Dict[str, Any], Optional[int]]:
    """
    解析配置文本

    运行清单（含 manifest_version 与 config 字段）也被接受，此时返回其中的配置与种子

    :param text: JSON 文本
    :param source: 来源名（用于错误消息）
    :return: (点号键字典, 清单中的种子或 None)
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelConfigError(f"{source}: JSON 语法错误，第 {e.lineno} 行第 {e.colno} 列: {e.msg}")
    seed = None
    if isinstance(raw, dict) and 'manifest_version' in raw and 'config' in raw:
        seed = raw.get('seed')
        raw = raw['config']
    return flatten_config(raw), seed


def load_config(path: Union[str, Path]) -> Tuple[Dict[str, Any], Optional[int]]:
    """从文件读取并解析配置"""
    path = Path(path)
    if not path.exists():
        raise ModelConfigError(f"配置文件不存在: {path}")
    return parse_config_text(path.read_text(encoding='utf-8'), source=str(path))


def _require(flat: Dict[str, Any], key: str):
    if key not in flat:
        raise ModelConfigError(f"缺少必需的配置键 {key}")
    return flat[key]


def build_model(flat: Dict[str, Any]) -> ModelSpec:
    """
    由点号键字典构造 ModelSpec

    :param flat: flatten_config 的结果
    :return: ModelSpec
    """
    drift_kind = flat.get('drift.kind', MODEL_DEFAULTS['drift.kind'])
    if drift_kind not in DRIFT_BUILDERS:
        raise ModelConfigError(f"未知的漂移 drift.kind={drift_kind}")
    drift_kwargs = {'rate': float(flat['drift.rate'])} if 'drift.rate' in flat else {}
    drift = DRIFT_BUILDERS[drift_kind](**drift_kwargs)

    rate_kind = _require(flat, 'rate.kind')
    if rate_kind not in RATE_BUILDERS:
        raise ModelConfigError(f"未知的跳跃率 rate.kind={rate_kind}")
    try:
        rate = RATE_BUILDERS[rate_kind](**flat.get('rate.params', {}))
    except TypeError as e:
        raise ModelConfigError(f"rate.params 与 rate.kind={rate_kind} 不匹配: {e}")
    if 'rate.bound' in flat:
        rate = replace(rate, bound=float(flat['rate.bound']))

    weight_kind = _require(flat, 'weights.kind')
    if weight_kind == 'uniform':
        weights = uniform_weights(float(_require(flat, 'weights.a')), float(_require(flat, 'weights.b')))
    elif weight_kind == 'point':
        weights = point_weights(float(_require(flat, 'weights.value')))
    else:
        raise ModelConfigError(f"配置文件只支持 uniform 与 point 权重律 (weights.kind={weight_kind})")

    n = _require(flat, 'n')
    if n < 1:
        raise ModelConfigError(f"配置键 n 违反不变量 N ≥ 1 (n={n})")
    horizon = float(_require(flat, 'horizon'))
    if horizon <= 0:
        raise ModelConfigError(f"配置键 horizon 违反不变量 T > 0 (horizon={horizon})")
    return ModelSpec(drift=drift, rate=rate, weights=weights, n=int(n),
                     x0=float(_require(flat, 'x0')), horizon=horizon)


def build_kernel_from_config(flat: Dict[str, Any]) -> KernelSpec:
    return build_kernel(flat.get('kernel.shape', MODEL_DEFAULTS['kernel.shape']),
                        int(flat.get('kernel.order', MODEL_DEFAULTS['kernel.order'])))


def estimator_settings(flat: Dict[str, Any]) -> Dict[str, Any]:
    """估计器相关键：bandwidth、x_star、points、epsilon、subset"""
    return {
        'bandwidth': flat.get('estimator.bandwidth'),
        'x_star': flat.get('estimator.x_star'),
        'points': [float(p) for p in flat.get('estimator.points', [])],
        'epsilon': float(flat.get('estimator.epsilon', DEFAULT_OMEGA_EPSILON)),
        'subset': flat.get('estimator.subset'),
    }


def model_to_config(model: ModelSpec, kernel: Optional[KernelSpec] = None) -> Dict[str, Any]:
    """
    把模型序列化为嵌套配置字典（build_model 的逆）

    自定义采样器或自定义函数无法序列化
    """
    drift = model.drift
    if drift.kind in ('linear-decay', 'zero'):
        drift_cfg = {'kind': 'linear-decay', 'rate': float(drift.params.get('rate', 1.0))}
    elif drift.kind in DRIFT_BUILDERS:
        drift_cfg = {'kind': drift.kind}
    else:
        raise ModelConfigError(f"漂移 {drift.kind} 无法序列化")

    rate = model.rate
    if rate.kind not in RATE_BUILDERS:
        raise ModelConfigError(f"跳跃率 {rate.kind} 无法序列化")
    rate_cfg: Dict[str, Any] = {'kind': rate.kind}
    if rate.params:
        rate_cfg['params'] = dict(rate.params)
    if rate.bound != RATE_BUILDERS[rate.kind](**rate.params).bound:
        rate_cfg['bound'] = float(rate.bound)

    law = model.weights
    if law.kind == 'uniform':
        weights_cfg = {'kind': 'uniform', 'a': law.a, 'b': law.b}
    elif law.kind == 'point':
        weights_cfg = {'kind': 'point', 'value': law.value}
    else:
        raise ModelConfigError("自定义权重律无法序列化")

    out: Dict[str, Any] = {
        'drift': drift_cfg,
        'rate': rate_cfg,
        'weights': weights_cfg,
        'n': int(model.n),
        'x0': float(model.x0),
        'horizon': float(model.horizon),
    }
    if kernel is not None:
        out['kernel'] = {'shape': kernel.shape, 'order': int(kernel.order)}
    return out


def nest_config(flat: Dict[str, Any]) -> Dict[str, Any]:
    """点号键字典还原为嵌套字典（用于写入清单）"""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = key.split('.')
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return nested


def parse_float_list(text: str) -> List[float]:
    """命令行中逗号分隔的数值列表"""
    text = text.strip()
    if not text:
        return []
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ModelConfigError(f"无法解析数值列表: {text}")
