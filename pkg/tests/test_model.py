"""
模型要素测试：F(x)、权重律、核函数与 Hölder 类检查
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import math

import numpy as np
import pytest

from src.core.errors import KernelError, ModelConfigError
from src.core.model import (
    HolderClassParams,
    KernelSpec,
    ModelSpec,
    RateSpec,
    abs_rate,
    build_kernel,
    check_holder_membership,
    constant_rate,
    cubic_leak_drift,
    evaluate_big_F,
    kernel_l2_norm,
    kernel_moment,
    linear_decay_drift,
    log1p_rate,
    point_weights,
    two_minus_gauss_rate,
    uniform_weights,
)


def signed_weights_model(n: int = 100) -> ModelSpec:
    return ModelSpec(drift=linear_decay_drift(), rate=two_minus_gauss_rate(),
                     weights=uniform_weights(-2.0, 3.0), n=n, x0=-1.0, horizon=10.0)


def test_big_F_values():
    """测试用例1：F(x) = b(x) + w·f(x) 的取值"""
    print("\n" + "="*60)
    print("测试用例1：F(x) 取值")
    print("="*60)

    model = signed_weights_model()
    value = float(evaluate_big_F(model, 0.0))
    print(f"符号权重模型 F(0) = {value}")
    assert abs(value - 0.5) < 1e-15, "F(0) 应为 0.5"

    zero = ModelSpec(drift=linear_decay_drift(), rate=constant_rate(0.0),
                     weights=point_weights(1.0), n=1, x0=0.0, horizon=1.0)
    assert float(evaluate_big_F(zero, 0.0)) == 0.0, "f=0、b(0)=0 时 F(0) 应为 0"

    excitatory = ModelSpec(drift=linear_decay_drift(), rate=log1p_rate(),
                           weights=uniform_weights(0.0, 4.0), n=1, x0=0.1, horizon=10.0)
    value = float(evaluate_big_F(excitatory, 2.5129))
    print(f"兴奋性模型 F(2.5129) = {value:.3e}")
    assert abs(value) < 5e-4, "2.5129 应接近 F 的根"
    print("✓ F(x) 取值测试通过")


def test_big_F_linear_in_w():
    """测试用例2：F 对 w 线性"""
    print("\n" + "="*60)
    print("测试用例2：F 对 w 线性")
    print("="*60)

    x = np.linspace(-3, 3, 61)
    base = ModelSpec(drift=linear_decay_drift(), rate=two_minus_gauss_rate(),
                     weights=point_weights(0.7), n=1, x0=0.0, horizon=1.0)
    doubled = ModelSpec(drift=linear_decay_drift(), rate=two_minus_gauss_rate(),
                        weights=point_weights(1.4), n=1, x0=0.0, horizon=1.0)
    diff = evaluate_big_F(doubled, x) - evaluate_big_F(base, x)
    err = np.max(np.abs(diff - 0.7 * two_minus_gauss_rate()(x)))
    print(f"最大偏差 = {err:.3e}")
    assert err < 1e-14, "F(2w) - F(w) 应等于 w·f"
    print("✓ 线性测试通过")


def test_model_invariants():
    """测试用例3：ModelSpec 与权重律的不变量"""
    print("\n" + "="*60)
    print("测试用例3：模型不变量")
    print("="*60)

    with pytest.raises(ModelConfigError):
        signed_weights_model(n=0)
    with pytest.raises(ModelConfigError):
        ModelSpec(drift=linear_decay_drift(), rate=log1p_rate(), weights=point_weights(1.0),
                  n=10, x0=0.0, horizon=0.0)
    with pytest.raises(ModelConfigError):
        point_weights(0.0)
    with pytest.raises(ModelConfigError):
        uniform_weights(1.0, 1.0)
    with pytest.raises(ModelConfigError):
        linear_decay_drift(-1.0)

    law = uniform_weights(-2.0, 3.0)
    assert law.mean == 0.5, "Uniform(-2,3) 的均值应为 0.5"
    assert abs(law.abs_moment(1) - 1.3) < 1e-12, "E|U| 应为 (4+9)/10 = 1.3"
    assert abs(law.abs_moment(2) - 7.0 / 3.0) < 1e-12, "E|U|² 应为 (8+27)/15"
    print("✓ 不变量测试通过")


def test_weight_sampling_mean():
    """测试用例4：权重律抽样均值在 4 个标准误内"""
    print("\n" + "="*60)
    print("测试用例4：权重律抽样均值")
    print("="*60)

    rng = np.random.default_rng(123)
    for law in (uniform_weights(-2.0, 3.0), uniform_weights(0.0, 1.0), point_weights(2.0)):
        draws = law.sample(rng, 1_000_000)
        se = draws.std() / math.sqrt(draws.size)
        print(f"{law.kind}: 均值={draws.mean():.5f}, w={law.mean}, 标准误={se:.2e}")
        assert abs(draws.mean() - law.mean) <= 4 * se + 1e-15, "样本均值偏离 w 过多"
    print("✓ 抽样测试通过")


def test_drift_flow_residual():
    """测试用例5：闭式流的 ODE 残差与数值流"""
    print("\n" + "="*60)
    print("测试用例5：漂移流")
    print("="*60)

    drift = linear_decay_drift()
    residual = drift.flow_residual(np.linspace(-3, 3, 13), np.linspace(0, 5, 11))
    print(f"线性衰减流残差 = {residual:.3e}")
    assert residual < 1e-9, "闭式流应满足 ODE"
    assert abs(drift.propagate(1.0, 1.0) - math.exp(-1.0)) < 1e-15

    cubic = cubic_leak_drift()
    assert not cubic.analytic_flow and not cubic.is_linear
    x1 = cubic.propagate(1.0, 0.5)
    # b(x) = -x - x³ 的闭式解：x² = e^{-2t} / (1 + x0⁻² - e^{-2t})
    exact = math.sqrt(math.exp(-1.0) / (2.0 - math.exp(-1.0)))
    print(f"三次泄漏流 φ(1, 0.5) = {x1:.12f}, 解析 = {exact:.12f}")
    assert abs(x1 - exact) < 1e-8, "数值流应与解析解一致"
    print("✓ 漂移流测试通过")


def test_rectangular_kernel():
    """测试用例6：矩形核"""
    print("\n" + "="*60)
    print("测试用例6：矩形核")
    print("="*60)

    kernel = build_kernel('rectangular')
    mass, first = kernel_moment(kernel, 0), kernel_moment(kernel, 1)
    l2 = kernel_l2_norm(kernel)
    print(f"∫Q = {mass}, ∫uQ = {first}, ∫Q² = {l2}")
    assert abs(mass - 1.0) < 1e-10
    assert abs(first) < 1e-10
    assert abs(l2 - 0.5) < 1e-8
    assert float(kernel(1.0)) == 0.5 and float(kernel(1.0001)) == 0.0
    print("✓ 矩形核测试通过")


def test_higher_order_kernel():
    """测试用例7：高阶核的矩条件与 ∫Q²"""
    print("\n" + "="*60)
    print("测试用例7：高阶核")
    print("="*60)

    kernel = build_kernel('higher-order', 3)
    for j in range(4):
        moment = kernel_moment(kernel, j)
        print(f"∫u^{j}Q = {moment:.3e}")
        assert abs(moment - (1.0 if j == 0 else 0.0)) < 1e-10, f"第 {j} 阶矩不满足"

    l2 = kernel_l2_norm(kernel)
    step = 1e-5
    midpoints = np.arange(-1.0 + step / 2, 1.0, step)
    riemann = float(np.sum(kernel(midpoints) ** 2) * step)
    print(f"∫Q² = {l2:.10f}, 中点和 = {riemann:.10f}")
    assert l2 > 0 and abs(l2 - riemann) < 1e-6

    bump = build_kernel('smooth-bump')
    assert abs(kernel_moment(bump, 0) - 1.0) < 1e-10
    print("✓ 高阶核测试通过")


def test_kernel_errors():
    """测试用例8：非法核"""
    print("\n" + "="*60)
    print("测试用例8：非法核")
    print("="*60)

    with pytest.raises(KernelError):
        build_kernel('triangle')
    with pytest.raises(KernelError):
        build_kernel('rectangular', 2)
    degenerate = KernelSpec(shape='rectangular', support=0.0, order=1, func=lambda u: 0.0 * u)
    with pytest.raises(KernelError):
        kernel_l2_norm(degenerate)
    print("✓ 非法核测试通过")


def test_holder_membership():
    """测试用例9：Hölder 类成员检查"""
    print("\n" + "="*60)
    print("测试用例9：Hölder 类成员检查")
    print("="*60)

    model = signed_weights_model()
    params = HolderClassParams(beta=2.0, lower=0.1, upper=2.2, interval=(-1.0, 0.6889), x_star=0.0)
    report = check_holder_membership(model, params)
    print(f"符号权重模型 f: member={report.member}, details={report.details}")
    assert report.member, f"2 - exp(-r²) 应属于 H(2, 0.1, 2.2): {report.violations}"

    larger = check_holder_membership(model, HolderClassParams(2.0, 0.1, 5.0, (-1.0, 0.6889)))
    assert larger.member, "放大 L 不应使成员检查失败"

    zero = ModelSpec(drift=linear_decay_drift(), rate=constant_rate(0.0),
                     weights=point_weights(1.0), n=1, x0=0.0, horizon=1.0)
    report = check_holder_membership(zero, HolderClassParams(2.0, 0.1, 2.2, (-1.0, 1.0)))
    print(f"f≡0: violations={report.violations}")
    assert not report.member and any('|F(x*)|' in v for v in report.violations)

    kinked = ModelSpec(drift=linear_decay_drift(), rate=abs_rate(),
                       weights=point_weights(1.0), n=1, x0=-1.0, horizon=1.0)
    report = check_holder_membership(kinked, HolderClassParams(2.0, 0.1, 5.0, (-1.0, 1.0), x_star=0.5))
    print(f"f=|r|: violations={report.violations}")
    assert not report.member and any('Hölder' in v for v in report.violations)

    with pytest.raises(ModelConfigError):
        HolderClassParams(beta=0.5, lower=0.1, upper=1.0, interval=(0.0, 1.0))
    print("✓ Hölder 类测试通过")


def test_holder_non_finite_rate():
    """测试用例10：扫描网格上出现 NaN/inf 的跳跃率不属于 Hölder 类"""
    print("\n" + "="*60)
    print("测试用例10：非有限跳跃率")
    print("="*60)

    raw = RateSpec(kind='log1p-unclipped', func=np.log1p, lipschitz=1.0)
    unclipped = ModelSpec(drift=linear_decay_drift(), rate=raw,
                          weights=uniform_weights(0.0, 4.0), n=100, x0=0.1, horizon=10.0)
    params = HolderClassParams(beta=2.0, lower=0.1, upper=2.0, interval=(0.1, 2.5), x_star=1.0)
    report = check_holder_membership(unclipped, params)
    print(f"log(1+r) 未截断: violations={report.violations}")
    assert not report.member
    assert any('非有限' in v for v in report.violations)

    clipped = ModelSpec(drift=linear_decay_drift(), rate=log1p_rate(),
                        weights=uniform_weights(0.0, 4.0), n=100, x0=0.1, horizon=10.0)
    report = check_holder_membership(clipped, params)
    print(f"log(1+r₊): member={report.member}, details={report.details}")
    assert report.member, report.violations
    assert all(np.isfinite(v) for v in report.details.values())
    assert float(log1p_rate()(-2.0)) == 0.0
    print("✓ 非有限跳跃率测试通过")


def main():
    """运行所有测试用例"""
    print("="*60)
    print("模型要素测试")
    print("="*60)

    tests = [
        ("测试1：F(x) 取值", test_big_F_values),
        ("测试2：F 对 w 线性", test_big_F_linear_in_w),
        ("测试3：模型不变量", test_model_invariants),
        ("测试4：权重律抽样", test_weight_sampling_mean),
        ("测试5：漂移流", test_drift_flow_residual),
        ("测试6：矩形核", test_rectangular_kernel),
        ("测试7：高阶核", test_higher_order_kernel),
        ("测试8：非法核", test_kernel_errors),
        ("测试9：Hölder 类", test_holder_membership),
        ("测试10：非有限跳跃率", test_holder_non_finite_rate),
    ]
    test_results = []
    for name, fn in tests:
        try:
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
