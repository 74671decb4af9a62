"""
平均场极限方程 dx = F(x)dt
求解、逆流 γ、平衡点搜索与括号系统
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, minimize_scalar

from config import (
    ASSUMPTION2_ENDPOINT_MARGIN,
    DEFAULT_FLOW_TOLERANCE,
    EQUILIBRIUM_DEDUP_TOLERANCE,
    EQUILIBRIUM_SCAN_STEP,
    EQUILIBRIUM_TOUCH_TOLERANCE,
    FLOW_MAX_STEP,
)
from .errors import FlowDomainError, StepSizeUnderflowError
from .model import ModelSpec, evaluate_big_F

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowSolution:
    """
    极限流的数值解

    times 严格递增，states 为对应时刻的 x_t，slopes = F(x_t)
    稠密输出使用以 F 为斜率的三次 Hermite 插值
    """
    times: np.ndarray
    states: np.ndarray
    slopes: np.ndarray
    rhs: Callable = field(repr=False, compare=False)
    spline: CubicHermiteSpline = field(repr=False, compare=False)

    def __call__(self, t):
        out = self.spline(np.clip(t, self.times[0], self.times[-1]))
        return float(out) if np.ndim(t) == 0 else out

    @property
    def x0(self) -> float:
        return float(self.states[0])

    @property
    def terminal(self) -> float:
        return float(self.states[-1])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def derivative(self, t):
        return self.spline.derivative()(t)

    def midpoint_residual(self) -> float:
        """网格中点处 max |dx/dt - F(x)| / (1 + |F(x)|)"""
        mid = 0.5 * (self.times[1:] + self.times[:-1])
        x_mid = self.spline(mid)
        F_mid = self.rhs(x_mid)
        return float(np.max(np.abs(self.derivative(mid) - F_mid) / (1.0 + np.abs(F_mid))))

    def inverse(self) -> 'InverseFlow':
        lo, hi = sorted((self.x0, self.terminal))
        return InverseFlow(domain=(lo, hi), solution=self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, 'x_t': self.states})


@dataclass(frozen=True)
class InverseFlow:
    """逆流 γ：开区间 ]x0, x_T[ 上 y -> 满足 x_γ(y) = y 的唯一时刻"""
    domain: Tuple[float, float]
    solution: FlowSolution = field(repr=False)

    def __call__(self, y: float) -> float:
        return invert_flow(self.solution, y)


def _integrate(rhs: Callable, x0: float, horizon: float, tol: float) -> FlowSolution:
    if tol <= 0:
        raise ValueError(f"tol 必须 > 0 (tol={tol})")
    start = float(np.asarray(rhs(np.array([x0]))).reshape(-1)[0])
    if not np.isfinite(start):
        raise FlowDomainError(f"F 在初值 x0={x0} 处不是有限值")
    sol = solve_ivp(
        lambda _t, y: rhs(y), (0.0, horizon), [x0],
        method='DOP853', rtol=tol, atol=tol * 1e-3, max_step=FLOW_MAX_STEP,
    )
    if sol.status == -1:
        failing_time = float(sol.t[-1]) if sol.t.size else 0.0
        raise StepSizeUnderflowError(f"极限方程积分失败: {sol.message}", failing_time)
    times = np.asarray(sol.t, dtype=float)
    states = np.asarray(sol.y[0], dtype=float)
    slopes = np.asarray(rhs(states), dtype=float)
    spline = CubicHermiteSpline(times, states, slopes)
    return FlowSolution(times=times, states=states, slopes=slopes, rhs=rhs, spline=spline)


def solve_limit_ode(model: ModelSpec, tol: float = DEFAULT_FLOW_TOLERANCE) -> FlowSolution:
    """
    在 [0, T] 上求解 dx = F(x)dt, x_0 = x0

    :param model: 模型
    :param tol: 局部相对误差容差
    :return: FlowSolution
    """
    sol = _integrate(lambda x: evaluate_big_F(model, x), model.x0, model.horizon, tol)
    logger.debug(f"极限流求解完成: x0={model.x0}, x_T={sol.terminal:.6f}, 步数={sol.times.size}")
    return sol


def invert_flow(sol: FlowSolution, y: float) -> float:
    """
    逆流 γ(y)

    :param sol: 单调的极限流
    :param y: 目标电位，必须严格位于 x0 与 x_T 之间
    :return: 满足 |x_t - y| ≤ 1e-8 的时刻 t
    """
    lo, hi = sorted((sol.x0, sol.terminal))
    if not lo < y < hi:
        raise FlowDomainError(f"y={y} 不在逆流定义域 ]{lo:.6g}, {hi:.6g}[ 内")
    return float(brentq(lambda t: sol(t) - y, 0.0, sol.horizon, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def find_equilibria(model: ModelSpec, search_interval: Tuple[float, float]) -> List[float]:
    """
    搜索 F 在区间上的变号根

    :param model: 模型
    :param search_interval: 有限的搜索区间 [lo, hi]
    :return: 升序排列的根列表（可为空）
    """
    lo, hi = map(float, search_interval)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"搜索区间无效: {search_interval}")
    grid = np.arange(lo, hi + 0.5 * EQUILIBRIUM_SCAN_STEP, EQUILIBRIUM_SCAN_STEP)
    grid[-1] = min(grid[-1], hi)
    values = np.asarray(evaluate_big_F(model, grid), dtype=float)
    F = lambda x: float(evaluate_big_F(model, x))

    roots = [float(x) for x in grid[values == 0.0]]
    crossings = np.nonzero(values[:-1] * values[1:] < 0)[0]
    for i in crossings:
        roots.append(float(brentq(F, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)))

    # 不变号的切触根（如 f(x₊) 在 0 处）：|F| 的局部极小点
    magnitude = np.abs(values)
    near_crossing = set(crossings.tolist()) | set((crossings + 1).tolist())
    for i in range(1, grid.size - 1):
        if i in near_crossing or magnitude[i] == 0.0:
            continue
        if magnitude[i] <= magnitude[i - 1] and magnitude[i] <= magnitude[i + 1]:
            res = minimize_scalar(lambda x: abs(F(x)), bounds=(grid[i - 1], grid[i + 1]),
                                  method='bounded', options={'xatol': 1e-14})
            if abs(F(res.x)) <= EQUILIBRIUM_TOUCH_TOLERANCE:
                roots.append(float(res.x))

    roots.sort()
    unique: List[float] = []
    for root in roots:
        if not unique or abs(root - unique[-1]) > EQUILIBRIUM_DEDUP_TOLERANCE:
            unique.append(root)
    return unique


def solve_bracket_flows(model: ModelSpec, l_bound: float, r_bound: float,
                        horizon: Optional[float] = None,
                        tol: float = DEFAULT_FLOW_TOLERANCE) -> Tuple[FlowSolution, FlowSolution]:
    """
    括号系统 l_t、r_t：以常数速率 l_bound、r_bound 代替 f

    w < 0 时两者的上下次序互换，返回值始终满足 l ≤ r
    """
    T = model.horizon if horizon is None else horizon
    w = model.w
    low_push, high_push = sorted((w * l_bound, w * r_bound))
    lower = _integrate(lambda x: model.drift(x) + low_push, model.x0, T, tol)
    upper = _integrate(lambda x: model.drift(x) + high_push, model.x0, T, tol)
    return lower, upper


def bracketing_flows(model: ModelSpec, l_bound: float, r_bound: float, T: float,
                     flow: Optional[FlowSolution] = None) -> Tuple[float, float]:
    """
    括号系统的终值 (l_T, r_T)

    :param model: 模型
    :param l_bound: f 的下界
    :param r_bound: f 的上界
    :param T: 终止时刻
    :param flow: 真实极限流（可选），给出时检查 l_T ≤ x_T ≤ r_T
    :return: (l_T, r_T)
    """
    lower, upper = solve_bracket_flows(model, l_bound, r_bound, horizon=T)
    l_T, r_T = lower.terminal, upper.terminal
    if flow is not None:
        x_T = flow(T)
        slack = 1e-7 * (1.0 + abs(x_T))
        if not (l_T - slack <= x_T <= r_T + slack):
            raise FlowDomainError(
                f"括号系统不成立: l_T={l_T:.9g}, x_T={x_T:.9g}, r_T={r_T:.9g}"
            )
    return l_T, r_T


def check_assumption2(sol: FlowSolution, x_star: float) -> bool:
    """
    x* 是否严格位于 ]x0, x_T[ 内且 F 在 [x0, x*] 上不为零

    :param sol: 极限流
    :param x_star: 估计点
    :return: 是否满足
    """
    lo, hi = sorted((sol.x0, sol.terminal))
    margin = ASSUMPTION2_ENDPOINT_MARGIN
    if not (lo + margin < x_star < hi - margin):
        return False
    count = max(101, int(abs(x_star - sol.x0) / EQUILIBRIUM_SCAN_STEP) + 1)
    grid = np.linspace(sol.x0, x_star, count)
    return bool(np.min(np.abs(sol.rhs(grid))) > 0.0)


def bracket_assumption2(model: ModelSpec, l_bound: float, r_bound: float, x_star: float,
                        horizon: Optional[float] = None) -> bool:
    """
    用括号系统判定极限流在 T 之前越过 x*

    l_T > x* > x0 时上行的真实流必越过 x*；r_T < x* < x0 时下行同理
    """
    T = model.horizon if horizon is None else horizon
    lower, upper = solve_bracket_flows(model, l_bound, r_bound, horizon=T)
    x0 = model.x0
    margin = ASSUMPTION2_ENDPOINT_MARGIN
    upward = x0 + margin < x_star < lower.terminal - margin
    downward = upper.terminal + margin < x_star < x0 - margin
    return bool(upward or downward)


def flow_at_model(model: ModelSpec, x0: float, horizon: float,
                  tol: float = DEFAULT_FLOW_TOLERANCE) -> FlowSolution:
    """从任意初值与时长重新求解同一模型的极限流"""
    return solve_limit_ode(replace(model, x0=x0, horizon=horizon), tol)
