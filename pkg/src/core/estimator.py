"""
跳跃率函数 f 的核估计
f̂(x*) = Σ_{n: I_n∈𝒮} Q_h(X^{I_n}_{T_n-} - x*) / Σ_{i∈𝒮} ∫₀ᵀ Q_h(X^i_s - x*) ds
以及占据时间比较、误差分解、强逼近诊断与 CLT 方差
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from config import DECOMPOSITION_TOLERANCE, DEFAULT_OMEGA_EPSILON
from .errors import DecompositionMismatchError, DegenerateEstimateError, FlowDomainError, ModelConfigError
from .flow import FlowSolution, invert_flow
from .model import RECTANGULAR_KERNEL_WARNING, KernelSpec, ModelSpec, RateSpec, evaluate_big_F, kernel_l2_norm
from .segment_integrals import occupation_contributions
from .simulator import SystemTrajectory, states_at

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorConfig:
    """
    估计器配置

    kernel: 核函数
    bandwidth: 带宽 h > 0
    x_star: 估计点
    window: 观测窗口终点（None 为整条轨迹）
    subset: 观测子集（神经元编号，0 起始；None 为全体）
    epsilon: Ω 事件容差 ε ∈ (0, 1)
    """
    kernel: KernelSpec
    bandwidth: float
    x_star: float
    window: Optional[float] = None
    subset: Optional[tuple] = None
    epsilon: float = DEFAULT_OMEGA_EPSILON

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ModelConfigError(f"estimator.bandwidth 必须 > 0 (bandwidth={self.bandwidth})")
        if not 0 < self.epsilon < 1:
            raise ModelConfigError(f"estimator.epsilon 必须位于 (0, 1) (epsilon={self.epsilon})")
        if self.subset is not None:
            subset = tuple(int(i) for i in self.subset)
            if not subset:
                raise ModelConfigError("estimator.subset 不能为空")
            object.__setattr__(self, 'subset', subset)

    def with_point(self, x_star: float) -> 'EstimatorConfig':
        return replace(self, x_star=float(x_star))

    def subset_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        if self.subset is None:
            mask[:] = True
            return mask
        ids = np.asarray(self.subset, dtype=np.int64)
        if ids.min() < 0 or ids.max() >= n:
            raise ModelConfigError(f"estimator.subset 含越界编号（N={n}）")
        mask[ids] = True
        return mask

    def window_end(self, traj: SystemTrajectory) -> float:
        T = traj.terminal_time if self.window is None else float(self.window)
        if T > traj.terminal_time + 1e-12 or T <= 0:
            raise ModelConfigError(f"观测窗口 {T} 超出轨迹时长 {traj.terminal_time}")
        return T


@dataclass
class EstimateReport:
    """一次估计的结果与诊断量"""
    x_star: float
    bandwidth: float
    estimate: float
    numerator: float
    denominator: float
    subset_size: int
    degenerate: bool
    contributions: np.ndarray = field(repr=False)
    omega_flag: Optional[bool] = None
    warnings: List[str] = field(default_factory=list)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_contributions: bool = False) -> Dict:
        out = {
            'x_star': self.x_star,
            'bandwidth': self.bandwidth,
            'estimate': self.estimate,
            'numerator': self.numerator,
            'denominator': self.denominator,
            'subset_size': self.subset_size,
            'degenerate': self.degenerate,
            'omega_flag': self.omega_flag,
            'warnings': list(self.warnings),
            'diagnostics': dict(self.diagnostics),
        }
        if include_contributions:
            out['contributions'] = self.contributions.tolist()
        return out


@dataclass
class OccupationComparison:
    A_N: float
    A_lim: float
    omega_flag: bool
    degenerate: bool


@dataclass
class DecompositionReport:
    M: float
    B: float
    A_N: float
    estimate: float
    true_value: float
    recomposed_error: float
    residual: float


@dataclass
class StrongApproxReport:
    """V^{N,i}_t = √N(X^{N,i}_t - x_t) 在探针时刻上的取值及其上确界的矩"""
    probe_times: np.ndarray
    fluctuations: np.ndarray = field(repr=False)
    sup_per_neuron: np.ndarray = field(repr=False)
    moments: Dict[int, float] = field(default_factory=dict)
    max_abs_deviation: float = 0.0


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 0.0
    return numerator / denominator


def _spike_numerator(traj: SystemTrajectory, cfg: EstimatorConfig, mask: np.ndarray,
                     t_end: float) -> float:
    count = int(np.searchsorted(traj.times, t_end, side='right'))
    selected = mask[traj.spikers[:count]]
    pre = traj.pre_potentials[:count][selected]
    h = cfg.bandwidth
    return float(np.sum(cfg.kernel((pre - cfg.x_star) / h) / h))


def occupation_integral(traj: SystemTrajectory, cfg: EstimatorConfig) -> float:
    """
    分母：Σ_{i∈𝒮} ∫₀ᵀ Q_h(X^i_s - x*) ds

    :param traj: 轨迹
    :param cfg: 估计器配置
    :return: 占据积分
    """
    mask = cfg.subset_mask(traj.model.n)
    contributions = occupation_contributions(
        traj, cfg.kernel, cfg.bandwidth, cfg.x_star, cfg.window_end(traj), mask,
    )
    return float(contributions[0].sum())


def estimate_rate(traj: SystemTrajectory, cfg: EstimatorConfig,
                  flow: Optional[FlowSolution] = None,
                  true_f: Optional[RateSpec] = None) -> EstimateReport:
    """
    f(x*) 的核估计（0/0 := 0）

    给出 flow 时计算 Ω 事件标志，给出 true_f 时附加误差分解诊断（验证模式）

    :param traj: 轨迹
    :param cfg: 估计器配置
    :param flow: 同一模型的极限流（可选）
    :param true_f: 真实跳跃率（可选）
    :return: EstimateReport
    """
    n = traj.model.n
    mask = cfg.subset_mask(n)
    t_end = cfg.window_end(traj)
    contributions = occupation_contributions(
        traj, cfg.kernel, cfg.bandwidth, cfg.x_star, t_end, mask,
    )[0]
    denominator = float(contributions.sum())
    numerator = _spike_numerator(traj, cfg, mask, t_end)
    subset_size = int(mask.sum())

    report = EstimateReport(
        x_star=cfg.x_star, bandwidth=cfg.bandwidth,
        estimate=_ratio(numerator, denominator),
        numerator=numerator, denominator=denominator,
        subset_size=subset_size, degenerate=denominator == 0.0,
        contributions=contributions,
    )
    report.diagnostics['A_N'] = denominator / subset_size
    if cfg.kernel.is_rectangular:
        report.warnings.append(RECTANGULAR_KERNEL_WARNING)

    if flow is not None:
        comparison = _compare(report.diagnostics['A_N'], flow, cfg, t_end)
        report.omega_flag = comparison.omega_flag
        report.diagnostics['A_lim'] = comparison.A_lim
        if comparison.degenerate:
            report.warnings.append("极限流未访问 x*（A_lim = 0），Ω 事件退化")
        elif not comparison.omega_flag:
            logger.warning(f"Ω 事件不成立: x*={cfg.x_star}, A_N={comparison.A_N:.6g}, "
                           f"A_lim={comparison.A_lim:.6g}")

    if true_f is not None:
        decomposition = error_decomposition(traj, cfg, true_f)
        report.diagnostics.update({
            'M': decomposition.M,
            'B': decomposition.B,
            'true_f': decomposition.true_value,
        })
    return report


BATCH_COLUMNS = ['x_star', 'estimate', 'numerator', 'denominator', 'true_f', 'error',
                 'omega_flag', 'degenerate']


def reports_to_frame(reports: Sequence[EstimateReport], true_f: Optional[RateSpec] = None) -> pd.DataFrame:
    """把估计报告整理为批量结果表（真实值未知时 true_f/error 为 NaN）"""
    rows = []
    for report in reports:
        truth = float(true_f(report.x_star)) if true_f is not None else np.nan
        rows.append({
            'x_star': float(report.x_star),
            'estimate': report.estimate,
            'numerator': report.numerator,
            'denominator': report.denominator,
            'true_f': truth,
            'error': report.estimate - truth if true_f is not None else np.nan,
            'omega_flag': report.omega_flag,
            'degenerate': report.degenerate,
        })
    return pd.DataFrame(rows, columns=BATCH_COLUMNS)


def estimate_batch(traj: SystemTrajectory, cfg: EstimatorConfig, points: Sequence[float],
                   flow: Optional[FlowSolution] = None,
                   true_f: Optional[RateSpec] = None) -> pd.DataFrame:
    """
    批量估计

    :return: DataFrame(x_star, estimate, numerator, denominator, true_f, error, omega_flag, degenerate)
    """
    reports = [estimate_rate(traj, cfg.with_point(x_star), flow=flow) for x_star in points]
    return reports_to_frame(reports, true_f)


def limit_occupation(flow: FlowSolution, kernel: KernelSpec, h: float, x_star: float,
                     t_end: float) -> float:
    """A_lim = ∫₀ᵀ Q_h(x_s - x*) ds（沿极限流的自适应积分）"""
    breaks = [0.0, t_end]
    for level in (x_star - h * kernel.support, x_star + h * kernel.support):
        try:
            crossing = invert_flow(flow, level)
        except FlowDomainError:
            continue
        if 0.0 < crossing < t_end:
            breaks.append(crossing)
    breaks.sort()
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        value, _ = integrate.quad(
            lambda s: float(kernel((flow(s) - x_star) / h)) / h, lo, hi,
            epsabs=1e-13, epsrel=1e-10, limit=400,
        )
        total += value
    return total


def _compare(A_N: float, flow: FlowSolution, cfg: EstimatorConfig, t_end: float) -> OccupationComparison:
    A_lim = limit_occupation(flow, cfg.kernel, cfg.bandwidth, cfg.x_star, t_end)
    if A_lim == 0.0:
        return OccupationComparison(A_N=A_N, A_lim=0.0, omega_flag=False, degenerate=True)
    return OccupationComparison(A_N=A_N, A_lim=A_lim,
                                omega_flag=abs(A_N / A_lim - 1.0) <= cfg.epsilon,
                                degenerate=False)


def compare_occupation(traj: SystemTrajectory, flow: FlowSolution,
                       cfg: EstimatorConfig) -> OccupationComparison:
    """
    经验占据 A_N = 占据积分/|𝒮| 与极限占据 A_lim 的比较

    omega_flag = |A_N/A_lim - 1| ≤ ε；A_lim = 0 时标记退化
    """
    mask = cfg.subset_mask(traj.model.n)
    A_N = occupation_integral(traj, cfg) / int(mask.sum())
    return _compare(A_N, flow, cfg, cfg.window_end(traj))


def error_decomposition(traj: SystemTrajectory, cfg: EstimatorConfig,
                        true_f: RateSpec) -> DecompositionReport:
    """
    误差分解 (f̂ - f(x*))·A_N = M + B

    B = (1/|𝒮|)·Σ_i ∫ Q_h(X^i_s - x*)[f(X^i_s) - f(x*)] ds
    M = (1/|𝒮|)·[Σ_spikes Q_h(X_{T_n-} - x*) - Σ_i ∫ f(X^i_s) Q_h(X^i_s - x*) ds]

    :raises DecompositionMismatchError: 恒等式偏差超过 1e-9（A_N > 0 时）
    """
    n = traj.model.n
    mask = cfg.subset_mask(n)
    t_end = cfg.window_end(traj)
    f_star = float(true_f(cfg.x_star))
    integrals = occupation_contributions(
        traj, cfg.kernel, cfg.bandwidth, cfg.x_star, t_end, mask,
        weights=(lambda x: true_f(x), lambda x: true_f(x) - f_star),
    ).sum(axis=1)
    size = int(mask.sum())
    denominator, weighted, centred = (float(v) for v in integrals)
    numerator = _spike_numerator(traj, cfg, mask, t_end)

    A_N = denominator / size
    estimate = _ratio(numerator, denominator)
    M = (numerator - weighted) / size
    B = centred / size
    recomposed = (M + B) / A_N if A_N > 0 else 0.0
    residual = abs((estimate - f_star) * A_N - (M + B)) if A_N > 0 else 0.0
    scale = max(1.0, abs(numerator) / size, abs(weighted) / size)
    if A_N > 0 and residual > DECOMPOSITION_TOLERANCE * scale:
        raise DecompositionMismatchError(
            f"误差分解不成立: |(f̂-f)·A_N - (M+B)| = {residual:.3e} (x*={cfg.x_star})"
        )
    return DecompositionReport(M=M, B=B, A_N=A_N, estimate=estimate, true_value=f_star,
                               recomposed_error=recomposed, residual=residual)


def strong_approx_diag(traj: SystemTrajectory, flow: FlowSolution,
                       probes: Optional[Sequence[float]] = None) -> StrongApproxReport:
    """
    强逼近诊断：探针时刻上的 V^{N,i}_t 与 sup_t |V| 的 1、2、4 阶经验矩

    :param traj: 轨迹
    :param flow: 同一模型的极限流
    :param probes: 探针时刻（默认使用轨迹记录的探针，否则 linspace(0, T, 101)）
    """
    n = traj.model.n
    if probes is None:
        probes = traj.probe_times if traj.probe_times is not None \
            else np.linspace(0.0, traj.terminal_time, 101)
    probes = np.asarray(probes, dtype=float)
    use_recorded = (traj.probe_states is not None and traj.probe_times is not None
                    and traj.probe_times.shape == probes.shape
                    and np.array_equal(traj.probe_times, probes))
    if use_recorded:
        states = np.asarray(traj.probe_states, dtype=float)
    else:
        states = np.vstack([states_at(traj, float(t)) for t in probes])
    limit = np.asarray(flow(probes), dtype=float).reshape(-1, 1)
    V = math.sqrt(n) * (states - limit)
    if not np.all(np.isfinite(V)):
        raise DegenerateEstimateError("涨落过程 V 出现非有限值")
    sup = np.max(np.abs(V), axis=0)
    moments = {p: float(np.mean(sup ** p)) for p in (1, 2, 4)}
    return StrongApproxReport(probe_times=probes, fluctuations=V, sup_per_neuron=sup,
                              moments=moments, max_abs_deviation=float(sup.max()) / math.sqrt(n))


def clt_variance(model: ModelSpec, x_star: float, kernel: KernelSpec) -> float:
    """
    渐近方差 κ² = |F(x*)·f(x*)|·∫Q²

    :raises DegenerateEstimateError: F(x*) = 0（平衡点处 CLT 退化）
    """
    F = float(evaluate_big_F(model, x_star))
    if F == 0.0:
        raise DegenerateEstimateError(f"F(x*) = 0，x*={x_star} 是平衡点，CLT 退化")
    return abs(F * float(model.rate(x_star))) * kernel_l2_norm(kernel)


def martingale_variance(model: ModelSpec, x_star: float, kernel: KernelSpec) -> float:
    """鞅层方差 σ² = f(x*)/|F(x*)|·∫Q²，满足 σ²·F(x*)² = κ²"""
    F = float(evaluate_big_F(model, x_star))
    if F == 0.0:
        raise DegenerateEstimateError(f"F(x*) = 0，x*={x_star} 是平衡点，CLT 退化")
    return float(model.rate(x_star)) / abs(F) * kernel_l2_norm(kernel)
