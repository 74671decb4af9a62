"""
配置解析测试：嵌套/扁平混写、键与类型校验、清单重放、模型序列化
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import json

import pytest

from config import SIGNED_WEIGHTS_CONFIG
from src.core.errors import KernelError, ModelConfigError
from src.core.model import build_kernel
from src.utils.config_parser import (
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


def test_nested_and_flat_keys():
    """测试用例1：嵌套与扁平写法可混用"""
    print("\n" + "="*60)
    print("测试用例1：嵌套/扁平混写")
    print("="*60)

    text = json.dumps({
        'rate': {'kind': 'two-minus-gauss'},
        'weights.kind': 'uniform',
        'weights': {'a': -2.0, 'b': 3},
        'n': 100, 'x0': -1, 'horizon': 10,
        'estimator': {'points': [0.0, 0.5], 'x_star': 0.0},
    })
    flat, seed = parse_config_text(text)
    print(f"展开结果: {flat}")
    assert seed is None
    assert flat['weights.kind'] == 'uniform' and flat['weights.b'] == 3
    model = build_model(flat)
    assert model.n == 100 and model.x0 == -1.0 and model.horizon == 10.0
    assert model.drift.kind == 'linear-decay', "drift 缺省为线性衰减"
    assert abs(model.w - 0.5) < 1e-15

    settings = estimator_settings(flat)
    assert settings['points'] == [0.0, 0.5] and settings['x_star'] == 0.0
    assert settings['bandwidth'] is None and settings['epsilon'] == 0.1

    assert nest_config(flat)['weights'] == {'kind': 'uniform', 'a': -2.0, 'b': 3}
    print("✓ 嵌套/扁平混写测试通过")


def test_rejections():
    """测试用例2：未知键、类型错误、冲突与不变量"""
    print("\n" + "="*60)
    print("测试用例2：配置拒绝")
    print("="*60)

    bad_configs = [
        ({'n': 10, 'neurons': 3}, '未知的配置键'),
        ({'n': True}, '类型'),
        ({'n': 10.5}, '类型'),
        ({'horizon': 'ten'}, '类型'),
        ({'weights.a': 1.0, 'weights': {'a': 2.0}}, '冲突'),
    ]
    for raw, fragment in bad_configs:
        with pytest.raises(ModelConfigError) as info:
            flatten_config(raw)
        print(f"{raw} -> {info.value}")
        assert fragment in str(info.value)

    # 相同取值的重复键允许
    assert flatten_config({'n': 3, 'weights.a': 1.0, 'weights': {'a': 1.0}})['weights.a'] == 1.0

    base = flatten_config(SIGNED_WEIGHTS_CONFIG)
    for key, value in (('n', 0), ('horizon', 0.0), ('rate.kind', 'sigmoid'),
                       ('weights.kind', 'gamma'), ('drift.kind', 'quadratic')):
        with pytest.raises(ModelConfigError) as info:
            build_model({**base, key: value})
        print(f"{key}={value} -> {info.value}")
    with pytest.raises(ModelConfigError) as info:
        build_model({**base, 'n': 0})
    assert 'N ≥ 1' in str(info.value)

    missing = dict(base)
    del missing['x0']
    with pytest.raises(ModelConfigError):
        build_model(missing)

    with pytest.raises(KernelError):
        build_kernel_from_config({'kernel.shape': 'triangular'})
    print("✓ 配置拒绝测试通过")


def test_json_syntax_error(tmp_path):
    """测试用例3：JSON 语法错误报告行列号"""
    print("\n" + "="*60)
    print("测试用例3：JSON 语法错误")
    print("="*60)

    path = tmp_path / 'broken.json'
    path.write_text('{\n  "n": 10,\n  "x0": ,\n}\n', encoding='utf-8')
    with pytest.raises(ModelConfigError) as info:
        load_config(path)
    print(f"错误消息: {info.value}")
    assert '第 3 行' in str(info.value) and str(path) in str(info.value)

    with pytest.raises(ModelConfigError):
        load_config(tmp_path / 'absent.json')
    with pytest.raises(ModelConfigError):
        parse_config_text('[1, 2, 3]')
    print("✓ JSON 语法错误测试通过")


def test_manifest_as_config(tmp_path):
    """测试用例4：运行清单可作为配置输入"""
    print("\n" + "="*60)
    print("测试用例4：清单作为配置")
    print("="*60)

    manifest = {
        'command': 'simulate',
        'config': SIGNED_WEIGHTS_CONFIG,
        'seed': 42,
        'manifest_version': 1,
        'timings': {'simulate': 1.25},
    }
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps(manifest), encoding='utf-8')
    flat, seed = load_config(path)
    print(f"清单中的种子: {seed}")
    assert seed == 42
    assert flat == flatten_config(SIGNED_WEIGHTS_CONFIG)
    print("✓ 清单作为配置测试通过")


def test_model_to_config():
    """测试用例5：模型序列化是 build_model 的逆"""
    print("\n" + "="*60)
    print("测试用例5：模型序列化")
    print("="*60)

    flat = flatten_config({
        'drift': {'kind': 'linear-decay', 'rate': 0.5},
        'rate': {'kind': 'constant', 'params': {'value': 1.5}, 'bound': 3.0},
        'weights': {'kind': 'point', 'value': 0.25},
        'n': 7, 'x0': 0.3, 'horizon': 2.0,
    })
    model = build_model(flat)
    assert model.rate.bound == 3.0, "rate.bound 覆盖构造器给出的上界"

    config = model_to_config(model, kernel=build_kernel('smooth-bump'))
    print(f"序列化结果: {config}")
    assert config['kernel'] == {'shape': 'smooth-bump', 'order': 1}
    assert config['rate'] == {'kind': 'constant', 'params': {'value': 1.5}, 'bound': 3.0}

    rebuilt = build_model(flatten_config(config))
    assert rebuilt.n == 7 and rebuilt.x0 == 0.3 and rebuilt.horizon == 2.0
    assert rebuilt.drift.decay_rate == 0.5
    assert rebuilt.weights.value == 0.25 and rebuilt.rate.bound == 3.0
    assert build_kernel_from_config(flatten_config(config)).shape == 'smooth-bump'

    plain = model_to_config(build_model(flatten_config(SIGNED_WEIGHTS_CONFIG)))
    assert 'bound' not in plain['rate'] and 'kernel' not in plain
    print("✓ 模型序列化测试通过")


def test_parse_float_list():
    """测试用例6：命令行数值列表"""
    print("\n" + "="*60)
    print("测试用例6：数值列表解析")
    print("="*60)

    assert parse_float_list('0,0.5, 1') == [0.0, 0.5, 1.0]
    assert parse_float_list('  ') == []
    assert parse_float_list('-1e-3,') == [-0.001]
    with pytest.raises(ModelConfigError):
        parse_float_list('0.1,abc')
    print("✓ 数值列表解析测试通过")


def main():
    """运行所有测试用例"""
    import tempfile

    print("="*60)
    print("配置解析测试")
    print("="*60)

    tests = [
        ("测试1：嵌套/扁平混写", test_nested_and_flat_keys, False),
        ("测试2：配置拒绝", test_rejections, False),
        ("测试3：JSON 语法错误", test_json_syntax_error, True),
        ("测试4：清单作为配置", test_manifest_as_config, True),
        ("测试5：模型序列化", test_model_to_config, False),
        ("测试6：数值列表解析", test_parse_float_list, False),
    ]
    test_results = []
    for name, fn, needs_tmp in tests:
        try:
            if needs_tmp:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
            test_results.append((name, True))
        except Exception as e:
            print(f"✗ {name} 失败: {e}")
            test_results.append((name, False))

    # 汇总结果
    print("\n" + "="*60)
    print("测试结果汇总")
    print("="*60)
    failed = sum(1 for _, ok in test_results if not ok)
    for name, ok in test_results:
        print(f"{'✓ 通过' if ok else '✗ 失败'}: {name}")
    print(f"\n总计: {len(test_results)} 个测试用例, 失败: {failed} 个")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
