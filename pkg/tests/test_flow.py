"""
极限流测试：ODE 求解、逆流、平衡点、括号系统与 Assumption 2
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import math

import numpy as np
import pytest

from src.core.errors import FlowDomainError, StepSizeUnderflowError
from src.core.flow import (
    bracket_assumption2,
    bracketing_flows,
    check_assumption2,
    find_equilibria,
    flow_at_model,
    invert_flow,
    solve_limit_ode,
)
from src.core.model import (
    ModelSpec,
    RateSpec,
    constant_rate,
    evaluate_big_F,
    linear_decay_drift,
    log1p_rate,
    point_weights,
    two_minus_gauss_rate,
    uniform_weights,
)

EQUILIBRIUM_SIGNED = 0.6889
EQUILIBRIUM_EXCITATORY = 2.5129


def signed_weights_model() -> ModelSpec:
    return ModelSpec(drift=linear_decay_drift(), rate=two_minus_gauss_rate(),
                     weights=uniform_weights(-2.0, 3.0), n=100, x0=-1.0, horizon=10.0)


def decay_model(x0: float = 1.0, horizon: float = 1.0) -> ModelSpec:
    return ModelSpec(drift=linear_decay_drift(), rate=constant_rate(0.0),
                     weights=point_weights(0.5), n=1, x0=x0, horizon=horizon)


def test_linear_decay_flow():
    """测试用例1：f≡0 时的闭式解与不动点"""
    print("\n" + "="*60)
    print("测试用例1：线性衰减的极限流")
    print("="*60)

    sol = solve_limit_ode(decay_model())
    print(f"x_T = {sol.terminal:.10f}, e^-1 = {math.exp(-1):.10f}")
    assert abs(sol.terminal - math.exp(-1.0)) < 1e-7, "x_T 应为 e^-1"
    assert sol.midpoint_residual() <= 1e-7

    fixed = solve_limit_ode(decay_model(x0=0.0, horizon=5.0))
    assert np.all(fixed.states == 0.0), "从平衡点出发应保持不动"
    print("✓ 线性衰减测试通过")


def test_signed_weights_flow():
    """测试用例2：符号权重模型的极限流趋向平衡点"""
    print("\n" + "="*60)
    print("测试用例2：符号权重极限流")
    print("="*60)

    sol = solve_limit_ode(signed_weights_model())
    print(f"x_T = {sol.terminal:.6f}, 中点残差 = {sol.midpoint_residual():.3e}")
    assert abs(sol.terminal - EQUILIBRIUM_SIGNED) < 1e-2, "T=10 时流应接近平衡点"
    assert sol.terminal < EQUILIBRIUM_SIGNED, "流从下方单调逼近平衡点"
    assert np.all(np.diff(sol.states) > 0), "流应严格单调递增"
    assert sol.midpoint_residual() <= 1e-7

    frame = sol.to_frame()
    assert list(frame.columns) == ['t', 'x_t'] and len(frame) == sol.times.size
    print("✓ 符号权重极限流测试通过")


def test_semigroup():
    """测试用例3：半群性质"""
    print("\n" + "="*60)
    print("测试用例3：半群性质")
    print("="*60)

    model = signed_weights_model()
    full = solve_limit_ode(model)
    first = flow_at_model(model, model.x0, 4.0)
    second = flow_at_model(model, first.terminal, 6.0)
    print(f"一次求解 x_10 = {full.terminal:.10f}, 分两段 = {second.terminal:.10f}")
    assert abs(full.terminal - second.terminal) < 1e-7
    print("✓ 半群性质测试通过")


def test_invert_flow():
    """测试用例4：逆流"""
    print("\n" + "="*60)
    print("测试用例4：逆流 γ")
    print("="*60)

    sol = solve_limit_ode(decay_model())
    t_half = invert_flow(sol, 0.5)
    print(f"γ(0.5) = {t_half:.10f}, ln 2 = {math.log(2):.10f}")
    assert abs(t_half - math.log(2.0)) < 1e-7

    mid = sol.x0 + 0.5 * (sol.terminal - sol.x0)
    assert abs(sol(invert_flow(sol, mid)) - mid) <= 1e-8, "往返应回到中点"

    sol_signed = solve_limit_ode(signed_weights_model())
    t0 = sol_signed.inverse()(0.0)
    print(f"符号权重模型 γ(0) = {t0:.10f}, x_γ(0) = {sol_signed(t0):.3e}")
    assert 0 < t0 < 10 and abs(sol_signed(t0)) <= 1e-8

    with pytest.raises(FlowDomainError):
        invert_flow(sol_signed, 0.9)
    with pytest.raises(FlowDomainError):
        invert_flow(sol_signed, sol_signed.x0)
    print("✓ 逆流测试通过")


def test_find_equilibria():
    """测试用例5：平衡点"""
    print("\n" + "="*60)
    print("测试用例5：平衡点")
    print("="*60)

    signed = signed_weights_model()
    roots = find_equilibria(signed, (-5.0, 5.0))
    print(f"符号权重平衡点: {roots}")
    assert len(roots) == 1 and abs(roots[0] - EQUILIBRIUM_SIGNED) < 1e-3
    assert abs(float(evaluate_big_F(signed, roots[0]))) <= 1e-10

    stay = flow_at_model(signed, roots[0], 10.0)
    assert np.max(np.abs(stay.states - roots[0])) < 1e-6, "从平衡点出发应保持在平衡点附近"

    excitatory = ModelSpec(drift=linear_decay_drift(), rate=log1p_rate(),
                        weights=uniform_weights(0.0, 4.0), n=100, x0=0.1, horizon=10.0)
    roots = find_equilibria(excitatory, (-0.5, 5.0))
    print(f"兴奋性平衡点: {roots}")
    assert len(roots) == 2
    assert abs(roots[0]) < 1e-9 and abs(roots[1] - EQUILIBRIUM_EXCITATORY) < 1e-3

    assert find_equilibria(decay_model(), (-1.0, 1.0)) == [0.0] or \
        abs(find_equilibria(decay_model(), (-1.0, 1.0))[0]) < 1e-12
    print("✓ 平衡点测试通过")


def test_bracketing_flows():
    """测试用例6：括号系统"""
    print("\n" + "="*60)
    print("测试用例6：括号系统")
    print("="*60)

    model = signed_weights_model()
    flow = solve_limit_ode(model)
    l_T, r_T = bracketing_flows(model, 1.0, 2.0, 10.0, flow=flow)
    print(f"l_T = {l_T:.6f}, x_T = {flow.terminal:.6f}, r_T = {r_T:.6f}")
    assert l_T <= flow.terminal <= r_T
    assert l_T <= EQUILIBRIUM_SIGNED <= r_T

    constant = ModelSpec(drift=linear_decay_drift(), rate=constant_rate(1.5),
                         weights=uniform_weights(-2.0, 3.0), n=10, x0=-1.0, horizon=10.0)
    l_T, r_T = bracketing_flows(constant, 1.5, 1.5, 10.0)
    x_T = solve_limit_ode(constant).terminal
    assert abs(l_T - x_T) < 1e-9 and abs(r_T - x_T) < 1e-9, "上下界相等时应塌缩为真实流"

    l_T, _ = bracketing_flows(model, 0.0, 2.0, 10.0)
    assert abs(l_T - (-1.0) * math.exp(-10.0)) < 1e-9, "l_bound=0 时 l_T = x0·e^{-T}"

    assert bracket_assumption2(model, 1.0, 2.0, 0.2), "l_T≈0.5 > 0.2，括号系统保证越过 x*"
    assert not bracket_assumption2(model, 1.0, 2.0, 0.9)
    print("✓ 括号系统测试通过")


def test_check_assumption2():
    """测试用例7：Assumption 2"""
    print("\n" + "="*60)
    print("测试用例7：Assumption 2")
    print("="*60)

    sol = solve_limit_ode(signed_weights_model())
    assert check_assumption2(sol, 0.2)
    assert not check_assumption2(sol, sol.x0), "边界点应排除"
    assert not check_assumption2(sol, 0.9), "流不会越过平衡点"
    print("✓ Assumption 2 测试通过")


def test_step_size_underflow():
    """测试用例8：有限时间爆破时报告失败时刻"""
    print("\n" + "="*60)
    print("测试用例8：步长下溢")
    print("="*60)

    square = RateSpec(kind='square', func=lambda x: x ** 2, lipschitz=math.inf)
    model = ModelSpec(drift=linear_decay_drift(0.0), rate=square, weights=point_weights(1.0),
                      n=1, x0=1.0, horizon=2.0)
    with pytest.raises(StepSizeUnderflowError) as info:
        solve_limit_ode(model)
    print(f"失败时刻 = {info.value.failing_time}")
    assert info.value.failing_time <= 1.0 + 1e-6, "dx = x² 从 1 出发在 t=1 爆破"
    print("✓ 步长下溢测试通过")


def main():
    """运行所有测试用例"""
    print("="*60)
    print("极限流测试")
    print("="*60)

    tests = [
        ("测试1：线性衰减", test_linear_decay_flow),
        ("测试2：符号权重极限流", test_signed_weights_flow),
        ("测试3：半群性质", test_semigroup),
        ("测试4：逆流", test_invert_flow),
        ("测试5：平衡点", test_find_equilibria),
        ("测试6：括号系统", test_bracketing_flows),
        ("测试7：Assumption 2", test_check_assumption2),
        ("测试8：步长下溢", test_step_size_underflow),
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
