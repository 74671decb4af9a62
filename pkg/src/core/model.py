"""
模型要素：漂移 b、跳跃率 f、突触权重律 ν、核函数 Q
以及 Hölder 类成员检查与核矩计算
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.integrate import solve_ivp
from scipy.special import eval_legendre

from config import (
    DEFAULT_GRID_STEP,
    DEFAULT_SWEEP_INTERVAL,
    DRIFT_ODE_TOLERANCE,
    HOLDER_DERIVATIVE_TOLERANCE,
    KERNEL_QUADRATURE_TOLERANCE,
)
from .errors import KernelError, ModelConfigError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

RECTANGULAR_KERNEL_WARNING = (
    "矩形核不满足核光滑性假设（Lipschitz），结果仅作数值参考"
)


# ---------------------------------------------------------------------------
# 漂移 b
# ---------------------------------------------------------------------------

def _linear_decay(x: ArrayLike, rate: float) -> ArrayLike:
    return -rate * np.asarray(x, dtype=float)


def _linear_decay_flow(x: ArrayLike, dt: ArrayLike, rate: float) -> ArrayLike:
    return np.asarray(x, dtype=float) * np.exp(-rate * np.asarray(dt, dtype=float))


def _cubic_leak(x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    return -x - x**3


@dataclass(frozen=True)
class DriftSpec:
    """
    漂移函数 b 的描述

    decay_rate 非空时 b(x) = -decay_rate * x，可使用 O(1) 事件表示
    flow 非空时表示存在闭式流 φ(x, dt)
    """
    kind: str
    func: Callable[[ArrayLike], ArrayLike]
    lipschitz: float
    lipschitz_interval: Tuple[float, float] = (-math.inf, math.inf)
    flow: Optional[Callable[[ArrayLike, ArrayLike], ArrayLike]] = None
    decay_rate: Optional[float] = None
    inward: bool = True
    params: Dict[str, float] = field(default_factory=dict)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.func(x)

    @property
    def analytic_flow(self) -> bool:
        return self.flow is not None

    @property
    def is_linear(self) -> bool:
        return self.decay_rate is not None

    def propagate(self, x: ArrayLike, dt: float) -> ArrayLike:
        """
        沿纯漂移流推进 dt 时间（跳跃之间的演化）

        :param x: 初值（标量或数组）
        :param dt: 推进时长（≥0）
        :return: φ(x, dt)
        """
        if dt <= 0.0:
            return x
        if self.flow is not None:
            return self.flow(x, dt)
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        sol = solve_ivp(
            lambda _t, y: self.func(y), (0.0, dt), x_arr,
            method='DOP853', rtol=DRIFT_ODE_TOLERANCE, atol=DRIFT_ODE_TOLERANCE * 1e-2,
            vectorized=False,
        )
        if not sol.success:
            raise RuntimeError(f"漂移流积分失败: {sol.message}")
        out = sol.y[:, -1]
        return float(out[0]) if np.ndim(x) == 0 else out

    def dense_flow(self, x: np.ndarray, duration: float) -> Callable[[ArrayLike], np.ndarray]:
        """
        返回区间 [0, duration] 上的稠密流 s -> φ(x, s)

        :param x: 初值数组
        :param duration: 区间长度
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.flow is not None:
            return lambda s: self.flow(x, s)
        sol = solve_ivp(
            lambda _t, y: self.func(y), (0.0, max(duration, 1e-300)), x,
            method='DOP853', rtol=DRIFT_ODE_TOLERANCE, atol=DRIFT_ODE_TOLERANCE * 1e-2,
            dense_output=True,
        )
        if not sol.success:
            raise RuntimeError(f"漂移流积分失败: {sol.message}")
        return lambda s: sol.sol(s)

    def flow_residual(self, x_grid: np.ndarray, t_grid: np.ndarray, step: float = 1e-5) -> float:
        """闭式流的 ODE 残差 max|dφ/dt - b(φ)|（中心差分）"""
        if self.flow is None:
            return 0.0
        xs, ts = np.meshgrid(np.asarray(x_grid, float), np.asarray(t_grid, float) + step)
        phi = self.flow(xs, ts)
        dphi = (self.flow(xs, ts + step) - self.flow(xs, ts - step)) / (2 * step)
        return float(np.max(np.abs(dphi - self.func(phi))))


def linear_decay_drift(rate: float = 1.0) -> DriftSpec:
    """b(x) = -rate·x；rate=0 时为零漂移"""
    if rate < 0:
        raise ModelConfigError(f"drift.rate 必须 ≥ 0 (drift.rate={rate})")
    return DriftSpec(
        kind='linear-decay' if rate > 0 else 'zero',
        func=partial(_linear_decay, rate=rate),
        lipschitz=rate,
        flow=partial(_linear_decay_flow, rate=rate),
        decay_rate=rate,
        inward=True,
        params={'rate': rate},
    )


def cubic_leak_drift() -> DriftSpec:
    """b(x) = -x - x³，只在有界区间上 Lipschitz，无闭式流"""
    return DriftSpec(
        kind='cubic-leak',
        func=_cubic_leak,
        lipschitz=1.0 + 3.0 * 9.0,
        lipschitz_interval=(-3.0, 3.0),
        inward=True,
    )


DRIFT_BUILDERS: Dict[str, Callable[..., DriftSpec]] = {
    'linear-decay': lambda rate=1.0: linear_decay_drift(rate),
    'zero': lambda rate=0.0: linear_decay_drift(0.0),
    'cubic-leak': lambda **_: cubic_leak_drift(),
}


# ---------------------------------------------------------------------------
# 跳跃率 f
# ---------------------------------------------------------------------------

def _two_minus_gauss(r: ArrayLike) -> ArrayLike:
    return 2.0 - np.exp(-np.square(r))


def _log1p_rate(r: ArrayLike) -> ArrayLike:
    return np.log1p(np.maximum(r, 0.0))


def _abs_rate(r: ArrayLike) -> ArrayLike:
    return np.abs(r)


def _constant_rate(r: ArrayLike, value: float) -> ArrayLike:
    return np.full_like(np.asarray(r, dtype=float), value) if np.ndim(r) else float(value)


@dataclass(frozen=True)
class RateSpec:
    """
    跳跃率函数 f 的描述

    bound: 全局上界 L（可无）
    monotone_in_abs: f 是否为 |x| 的不减函数（启用 monotone-decay 稀疏化上界）
    user_bound: 用户自定义上界 M -> sup_{|x|≤M} f(x)
    """
    kind: str
    func: Callable[[ArrayLike], ArrayLike]
    lipschitz: float
    bound: Optional[float] = None
    monotone_in_abs: bool = False
    user_bound: Optional[Callable[[float], float]] = None
    params: Dict[str, float] = field(default_factory=dict)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.func(x)

    def check(self, grid: np.ndarray) -> List[str]:
        """在测试网格上检查 f ≥ 0 与 f ≤ L"""
        values = np.asarray(self.func(np.asarray(grid, dtype=float)), dtype=float)
        problems = []
        if np.any(values < 0):
            problems.append(f"f 在网格上出现负值 (min={values.min():.3g})")
        if self.bound is not None and np.any(values > self.bound + 1e-12):
            problems.append(f"f 超过声明上界 L={self.bound} (max={values.max():.6g})")
        return problems


def two_minus_gauss_rate() -> RateSpec:
    """f(r) = 2 - exp(-r²)"""
    return RateSpec(
        kind='two-minus-gauss', func=_two_minus_gauss,
        lipschitz=math.sqrt(2.0) * math.exp(-0.5), bound=2.0, monotone_in_abs=True,
    )


def log1p_rate() -> RateSpec:
    """f(r) = log(1+r₊)；r < 0 时取 0"""
    return RateSpec(kind='log1p', func=_log1p_rate, lipschitz=1.0, monotone_in_abs=True)


def abs_rate() -> RateSpec:
    return RateSpec(kind='abs', func=_abs_rate, lipschitz=1.0, monotone_in_abs=True)


def constant_rate(value: float) -> RateSpec:
    if value < 0:
        raise ModelConfigError(f"rate.params.value 必须 ≥ 0 (value={value})")
    return RateSpec(
        kind='constant' if value > 0 else 'zero',
        func=partial(_constant_rate, value=float(value)),
        lipschitz=0.0, bound=float(value), monotone_in_abs=True,
        params={'value': float(value)},
    )


RATE_BUILDERS: Dict[str, Callable[..., RateSpec]] = {
    'two-minus-gauss': lambda **_: two_minus_gauss_rate(),
    'log1p': lambda **_: log1p_rate(),
    'abs': lambda **_: abs_rate(),
    'constant': lambda value=1.0, **_: constant_rate(value),
    'zero': lambda **_: constant_rate(0.0),
}


# ---------------------------------------------------------------------------
# 突触权重律 ν
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightLaw:
    """
    突触权重分布 ν

    kind: 'uniform'（[a, b] 上均匀）、'point'（点质量 value）、'custom'（自定义采样器）
    """
    kind: str
    mean: float
    a: Optional[float] = None
    b: Optional[float] = None
    value: Optional[float] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    moment_oracle: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind == 'uniform':
            if self.a is None or self.b is None or not self.a < self.b:
                raise ModelConfigError(f"weights.a < weights.b 不成立 (a={self.a}, b={self.b})")
            if abs(self.mean - 0.5 * (self.a + self.b)) > 1e-12:
                raise ModelConfigError("均匀分布的均值与 (a+b)/2 不一致")
        elif self.kind == 'point':
            if self.value is None or self.value == 0.0:
                raise ModelConfigError("点质量权重 weights.value 必须非零（ν({0}) = 0）")
            if abs(self.mean - self.value) > 1e-12:
                raise ModelConfigError("点质量的均值与 weights.value 不一致")
        elif self.kind == 'custom':
            if self.sampler is None or self.moment_oracle is None:
                raise ModelConfigError("自定义权重律需要 sampler 与 moment_oracle")
        else:
            raise ModelConfigError(f"未知的权重律 weights.kind={self.kind}")

    @property
    def support(self) -> Tuple[float, float]:
        if self.kind == 'uniform':
            return self.a, self.b
        if self.kind == 'point':
            return self.value, self.value
        return -math.inf, math.inf

    @property
    def nonnegative(self) -> bool:
        return self.support[0] >= 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == 'uniform':
            return rng.uniform(self.a, self.b, size)
        if self.kind == 'point':
            return np.full(size, self.value)
        return np.asarray(self.sampler(rng, size), dtype=float)

    def abs_moment(self, p: float) -> float:
        """p 阶绝对矩 ∫|u|^p ν(du)"""
        if self.kind == 'uniform':
            antiderivative = lambda u: math.copysign(abs(u) ** (p + 1), u) / (p + 1)
            return (antiderivative(self.b) - antiderivative(self.a)) / (self.b - self.a)
        if self.kind == 'point':
            return abs(self.value) ** p
        return float(self.moment_oracle(p))

    def expectation(self, g: Callable[[float], float]) -> float:
        """
        计算 ∫ g(u) ν(du)

        均匀分布用自适应积分，点质量直接求值，自定义分布用固定种子的 10⁵ 样本均值
        """
        if self.kind == 'uniform':
            value, _ = integrate.quad(g, self.a, self.b, epsabs=1e-12, epsrel=1e-10, limit=200)
            return value / (self.b - self.a)
        if self.kind == 'point':
            return float(g(self.value))
        draws = self.sample(np.random.default_rng(0), 100_000)
        return float(np.mean([g(u) for u in draws]))


def uniform_weights(a: float, b: float) -> WeightLaw:
    return WeightLaw(kind='uniform', mean=0.5 * (a + b), a=float(a), b=float(b))


def point_weights(value: float) -> WeightLaw:
    return WeightLaw(kind='point', mean=float(value), value=float(value))


# ---------------------------------------------------------------------------
# 模型
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """一个有限系统：漂移、跳跃率、权重律、神经元数 N、初始电位 x0、观测时长 T"""
    drift: DriftSpec
    rate: RateSpec
    weights: WeightLaw
    n: int
    x0: float
    horizon: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ModelConfigError(f"神经元数 n 必须为 ≥ 1 的整数 (n={self.n})")
        if not np.isfinite(self.x0):
            raise ModelConfigError(f"初始电位 x0 必须有限 (x0={self.x0})")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ModelConfigError(f"观测时长 horizon 必须 > 0 (horizon={self.horizon})")

    @property
    def w(self) -> float:
        return self.weights.mean


def evaluate_big_F(model: ModelSpec, x: ArrayLike) -> ArrayLike:
    """
    极限方程右端 F(x) = b(x) + w·f(x)

    :param model: 模型
    :param x: 电位（标量或数组）
    :return: F(x)
    """
    return model.drift(x) + model.w * model.rate(x)


# ---------------------------------------------------------------------------
# 核函数 Q
# ---------------------------------------------------------------------------

def _rectangular(u: ArrayLike) -> ArrayLike:
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _bump_raw(u: ArrayLike) -> ArrayLike:
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    safe = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def _bump(u: ArrayLike, scale: float) -> ArrayLike:
    return scale * _bump_raw(u)


def _legendre_kernel(u: ArrayLike, coefficients: Tuple[float, ...]) -> ArrayLike:
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u)
    for j, c in enumerate(coefficients):
        if c != 0.0:
            total = total + c * eval_legendre(j, u)
    return np.where(np.abs(u) <= 1.0, total, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """
    核函数 Q

    shape: 'rectangular' | 'smooth-bump' | 'higher-order'
    support: 支撑半径 K（Q(u)=0 当 |u|>K）
    order: 消失矩阶数 k
    """
    shape: str
    support: float
    order: int
    func: Callable[[ArrayLike], ArrayLike]
    nonnegative: bool = True

    def __call__(self, u: ArrayLike) -> ArrayLike:
        return self.func(u)

    @property
    def is_rectangular(self) -> bool:
        return self.shape == 'rectangular'

    def scaled(self, h: float) -> Callable[[ArrayLike], ArrayLike]:
        """Q_h(y) = Q(y/h)/h"""
        return lambda y: self.func(np.asarray(y, dtype=float) / h) / h


def kernel_moment(kernel: KernelSpec, j: int) -> float:
    """∫ u^j Q(u) du（自适应积分）"""
    K = kernel.support
    value, _ = integrate.quad(
        lambda u: u**j * kernel.func(u), -K, K,
        epsabs=1e-14, epsrel=1e-12, limit=200, points=[0.0],
    )
    return float(value)


def validate_kernel(kernel: KernelSpec) -> None:
    """检查 ∫Q=1、支撑外为零与声明的矩条件"""
    if not kernel.support > 0:
        raise KernelError(f"核支撑半径必须 > 0 (support={kernel.support})")
    mass = kernel_moment(kernel, 0)
    if abs(mass - 1.0) > KERNEL_QUADRATURE_TOLERANCE:
        raise KernelError(f"∫Q = {mass:.12f} ≠ 1")
    outside = np.array([kernel.support * 1.0001, kernel.support * 1.5, -kernel.support * 1.0001])
    if np.any(np.asarray(kernel.func(outside)) != 0.0):
        raise KernelError("核在支撑外不为零")
    for j in range(1, kernel.order + 1):
        moment = kernel_moment(kernel, j)
        if abs(moment) > KERNEL_QUADRATURE_TOLERANCE:
            raise KernelError(f"第 {j} 阶矩 {moment:.3e} 不为零")


def build_kernel(shape: str, order: int = 1) -> KernelSpec:
    """
    构造核函数

    rectangular: Q(u) = ½·1{|u|≤1}（一阶矩因对称性为零）
    smooth-bump: 归一化的 exp(-1/(1-u²))，C^∞ 紧支
    higher-order: [-1,1] 上的多项式核，把点值泛函 p -> p(0) 投影到次数 ≤ order 的
                  Legendre 基上，满足 ∫Q=1 且 1..order 阶矩为零

    :param shape: 核形状标签
    :param order: 消失矩阶数（≥0）
    :return: KernelSpec
    """
    if order < 0:
        raise KernelError(f"kernel.order 必须 ≥ 0 (order={order})")
    if shape == 'rectangular':
        if order > 1:
            raise KernelError("矩形核只满足一阶消失矩，请使用 higher-order")
        kernel = KernelSpec(shape='rectangular', support=1.0, order=order, func=_rectangular)
    elif shape == 'smooth-bump':
        if order > 1:
            raise KernelError("光滑鼓包核只满足一阶消失矩，请使用 higher-order")
        mass, _ = integrate.quad(_bump_raw, -1.0, 1.0, epsabs=1e-15, epsrel=1e-13)
        kernel = KernelSpec(shape='smooth-bump', support=1.0, order=order,
                            func=partial(_bump, scale=1.0 / mass))
    elif shape == 'higher-order':
        coefficients = tuple(
            (2 * j + 1) / 2.0 * float(eval_legendre(j, 0.0)) for j in range(order + 1)
        )
        kernel = KernelSpec(shape='higher-order', support=1.0, order=order,
                            func=partial(_legendre_kernel, coefficients=coefficients),
                            nonnegative=order <= 1)
    else:
        raise KernelError(f"未知的核形状 kernel.shape={shape}")
    validate_kernel(kernel)
    return kernel


def kernel_l2_norm(kernel: KernelSpec) -> float:
    """
    ∫Q²(u)du（CLT 方差中的核常数）

    :param kernel: 核函数
    :return: 平方积分
    """
    if not kernel.support > 0:
        raise KernelError(f"核支撑为零，∫Q² 无定义 (support={kernel.support})")
    K = kernel.support
    value, _ = integrate.quad(
        lambda u: float(kernel.func(u)) ** 2, -K, K,
        epsabs=1e-14, epsrel=1e-11, limit=200, points=[0.0],
    )
    if not np.isfinite(value) or value <= 0:
        raise KernelError(f"∫Q² 非正或非有限 ({value})")
    return float(value)


# ---------------------------------------------------------------------------
# Hölder 类
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderClassParams:
    """
    Hölder 类 H(β, l, L) 的参数

    beta = k + alpha，k = ⌈β⌉ - 1，0 < alpha ≤ 1
    interval: Hölder 条件的检查区间 [x0, x_T]
    sweep_interval: f ≤ L、|f'| ≤ L 的全局扫描区间
    """
    beta: float
    lower: float
    upper: float
    interval: Tuple[float, float]
    x_star: float = 0.0
    sweep_interval: Tuple[float, float] = DEFAULT_SWEEP_INTERVAL

    def __post_init__(self):
        if self.beta < 1:
            raise ModelConfigError(f"Hölder 正则性 β 必须 ≥ 1 (beta={self.beta})")
        if self.lower <= 0 or self.upper <= 0:
            raise ModelConfigError(f"l 与 L 必须 > 0 (l={self.lower}, L={self.upper})")

    @property
    def k(self) -> int:
        return int(math.ceil(self.beta)) - 1

    @property
    def alpha(self) -> float:
        return self.beta - self.k


@dataclass
class HolderReport:
    member: bool
    violations: List[str]
    details: Dict[str, float]


def _derivative(values: np.ndarray, step: float, order: int) -> np.ndarray:
    out = values
    for _ in range(order):
        out = np.gradient(out, step)
    return out


def check_holder_membership(model: ModelSpec, params: HolderClassParams,
                            grid_step: float = DEFAULT_GRID_STEP) -> HolderReport:
    """
    在有限网格上检查 f 是否属于 H(β, l, L)

    :param model: 模型（f 取自 model.rate）
    :param params: Hölder 类参数
    :param grid_step: 网格步长
    :return: HolderReport（member 与违例列表）
    """
    if grid_step <= 0:
        raise ModelConfigError(f"grid_step 必须 > 0 (grid_step={grid_step})")
    tol = HOLDER_DERIVATIVE_TOLERANCE
    L = params.upper
    violations: List[str] = []
    details: Dict[str, float] = {}

    F_star = float(abs(evaluate_big_F(model, params.x_star)))
    details['abs_F_at_x_star'] = F_star
    if F_star < params.lower:
        violations.append(f"|F(x*)| = {F_star:.6g} < l = {params.lower}")

    lo = min(params.sweep_interval[0], *params.interval)
    hi = max(params.sweep_interval[1], *params.interval)
    grid = np.arange(lo, hi + 0.5 * grid_step, grid_step)
    with np.errstate(invalid='ignore', divide='ignore'):
        values = np.asarray(model.rate(grid), dtype=float)
    finite = np.isfinite(values)
    if not finite.all():
        bad = grid[~finite]
        violations.append(
            f"f 在扫描网格上出现非有限值 ({bad.size} 个点，首个 x={bad[0]:.6g})"
        )
        details['non_finite_points'] = float(bad.size)
        logger.info(f"Hölder 类检查未通过: {violations}")
        return HolderReport(member=False, violations=violations, details=details)
    slope = np.gradient(values, grid_step)
    details['max_f'] = float(values.max())
    details['max_abs_f_prime'] = float(np.abs(slope).max())
    if values.min() < 0:
        violations.append(f"f 取负值 (min={values.min():.6g})")
    if details['max_f'] > L + tol:
        violations.append(f"sup f = {details['max_f']:.6g} > L = {L}")
    if details['max_abs_f_prime'] > L + tol:
        violations.append(f"sup |f'| = {details['max_abs_f_prime']:.6g} > L = {L}")

    a, b = sorted(params.interval)
    local = np.arange(a, b + 0.5 * grid_step, grid_step)
    if local.size >= 3:
        top = _derivative(np.asarray(model.rate(local), dtype=float), grid_step, params.k)
        worst = 0.0
        offset = 1
        while offset < local.size:
            diffs = np.abs(top[offset:] - top[:-offset])
            worst = max(worst, float(diffs.max()) / (offset * grid_step) ** params.alpha)
            offset *= 2
        details['holder_quotient'] = worst
        if worst > L + tol:
            violations.append(
                f"f^({params.k}) 的 {params.alpha:g}-Hölder 商 {worst:.6g} > L = {L}"
            )

    if violations:
        logger.info(f"Hölder 类检查未通过: {violations}")
    return HolderReport(member=not violations, violations=violations, details=details)
