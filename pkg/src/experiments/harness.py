"""
蒙特卡洛实验
估计精度（全观测/部分观测）、L² 风险曲线、CLT、强逼近、占据极限与熄灭研究
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from config import (
    CLT_BANDWIDTH_EXPONENT,
    DEFAULT_OMEGA_EPSILON,
    EXCITATORY_EXTINCTION_CONFIG,
    EXCITATORY_METASTABLE_CONFIG,
    EXTINCTION_HORIZON,
    FIG1_POINTS,
    FIG3_POINTS,
    FIG4_POINTS,
    FIG_BANDWIDTH_EXPONENT,
    NORMALITY_MC_SAMPLES,
    PARTIAL_OBS_FRACTIONS,
    RISK_N_VALUES,
    SIGNED_WEIGHTS_CONFIG,
    STRONG_APPROX_N_VALUES,
)
from src.core.errors import ModelConfigError
from src.core.estimator import (
    EstimatorConfig,
    clt_variance,
    estimate_rate,
    occupation_integral,
    strong_approx_diag,
)
from src.core.flow import solve_limit_ode
from src.core.model import KernelSpec, ModelSpec, RateSpec, evaluate_big_F, uniform_weights
from src.core.simulator import detect_extinction, log_extinction_lower_bound, simulate
from src.utils.config_parser import build_kernel_from_config, build_model, flatten_config
from .replica_runner import ReplicaRunner, replica_seed

logger = logging.getLogger(__name__)

EXPERIMENT_NAMES = ('fig1', 'partial', 'risk', 'clt', 'fig3', 'fig4',
                    'strong', 'occupation', 'extinction')


@dataclass(frozen=True)
class ExperimentPlan:
    """
    一组蒙特卡洛重复的计划

    带宽规则 h = c·N^{-a}，要求 a ∈ (0, 1/2) 以保证 N·h² → ∞
    """
    name: str
    model: ModelSpec
    kernel: KernelSpec
    n_values: Tuple[int, ...]
    replicates: int = 1
    bandwidth_c: float = 1.0
    bandwidth_a: float = FIG_BANDWIDTH_EXPONENT
    points: Tuple[float, ...] = ()
    x_star: float = 0.0
    gammas: Tuple[int, ...] = ()
    seed: int = 0
    beta: float = 1.0
    epsilon: float = DEFAULT_OMEGA_EPSILON

    def __post_init__(self):
        if not self.n_values:
            raise ModelConfigError("experiment.n_values 不能为空")
        for n in self.n_values:
            if int(n) != n or n < 1:
                raise ModelConfigError(f"experiment.n_values 中的 N 必须为 ≥ 1 的整数 (N={n})")
        if self.replicates < 1:
            raise ModelConfigError(f"experiment.replicates 必须 ≥ 1 (replicates={self.replicates})")
        if not 0 < self.bandwidth_a < 0.5:
            raise ModelConfigError(
                f"experiment.bandwidth_a 必须位于 (0, 1/2) 以保证 N·h² → ∞ (a={self.bandwidth_a})"
            )
        if self.bandwidth_c <= 0:
            raise ModelConfigError(f"experiment.bandwidth_c 必须 > 0 (c={self.bandwidth_c})")
        object.__setattr__(self, 'n_values', tuple(int(n) for n in self.n_values))

    def bandwidth(self, n: int) -> float:
        return self.bandwidth_c * n ** (-self.bandwidth_a)

    def model_for(self, n: int) -> ModelSpec:
        return replace(self.model, n=int(n))

    def seeds(self, n_index: int) -> List[int]:
        return [replica_seed(self.seed, n_index, r) for r in range(self.replicates)]


@dataclass
class RiskCurve:
    """风险曲线：逐重复的平方误差、按 N 汇总的 MSE 与对数-对数斜率"""
    rows: pd.DataFrame
    summary: pd.DataFrame
    slope: float
    slope_stderr: float
    target_slope: float


@dataclass
class CLTReport:
    n: int
    bandwidth: float
    samples: np.ndarray
    kappa2: float
    empirical_variance: float
    variance_ratio: float
    mean: float
    mean_stderr: float
    p_value: float


@dataclass
class ExperimentResult:
    name: str
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    curve: Optional[RiskCurve] = None


def _runner(runner: Optional[ReplicaRunner]) -> ReplicaRunner:
    return runner if runner is not None else ReplicaRunner(max_workers=1)


def _estimate_rows(traj, kernel: KernelSpec, h: float, points: Sequence[float],
                   true_f: RateSpec, epsilon: float, flow=None,
                   subset: Optional[tuple] = None) -> List[Dict[str, Any]]:
    rows = []
    for x_star in points:
        cfg = EstimatorConfig(kernel=kernel, bandwidth=h, x_star=float(x_star),
                              subset=subset, epsilon=epsilon)
        report = estimate_rate(traj, cfg, flow=flow)
        truth = float(true_f(x_star))
        rows.append({
            'x_star': float(x_star),
            'estimate': report.estimate,
            'true_f': truth,
            'error': report.estimate - truth,
            'omega_flag': report.omega_flag,
            'degenerate': report.degenerate,
        })
    return rows


# ---------------------------------------------------------------------------
# 估计精度
# ---------------------------------------------------------------------------

def reproduce_fig1(plan: ExperimentPlan, runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """
    全观测估计精度：在 plan.points 上估计 f

    :return: DataFrame(n, h, replicate, seed, x_star, estimate, true_f, error, omega_flag, degenerate)
    """
    runner = _runner(runner)
    frames = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        h = plan.bandwidth(n)
        flow = solve_limit_ode(model)

        def task(r: int, seed: int):
            traj = simulate(model, seed)
            rows = _estimate_rows(traj, plan.kernel, h, plan.points, model.rate, plan.epsilon, flow)
            for row in rows:
                row.update({'n': n, 'h': h, 'replicate': r, 'seed': seed})
            return rows

        results = runner.run(task, plan.seeds(n_index), label=f"[{plan.name}] N={n}")
        frames.append(pd.DataFrame([row for rows in results for row in rows]))
    columns = ['n', 'h', 'replicate', 'seed', 'x_star', 'estimate', 'true_f', 'error',
               'omega_flag', 'degenerate']
    return pd.concat(frames, ignore_index=True)[columns]


def partial_block(n: int, gamma: int, start: int = 0) -> tuple:
    """从 start 开始的 γ 个连续神经元编号"""
    if gamma > n:
        raise ModelConfigError(f"部分观测规模 γ={gamma} 超过 N={n}")
    if gamma < 1:
        raise ModelConfigError(f"部分观测规模 γ 必须 ≥ 1 (γ={gamma})")
    if start < 0 or start + gamma > n:
        raise ModelConfigError(f"块 [{start}, {start + gamma}) 超出 N={n}")
    return tuple(range(start, start + gamma))


def partial_layout(n: int, gammas: Sequence[int], blocks: int = 1) -> Dict[Tuple[int, int], tuple]:
    """
    为每个 (γ, 块序号) 分配神经元子集

    γ < N 的块按 γ 从大到小依次排开，互不相交；γ = N 为全观测参照，使用全部神经元

    :raises ModelConfigError: 部分观测块总规模超过 N
    """
    if blocks < 1:
        raise ModelConfigError(f"blocks 必须 ≥ 1 (blocks={blocks})")
    partial = sorted({int(g) for g in gammas if int(g) != n}, reverse=True)
    total = blocks * sum(partial)
    if total > n:
        raise ModelConfigError(
            f"部分观测块总规模 {total} 超过 N={n} (γ={partial}, blocks={blocks})"
        )
    layout: Dict[Tuple[int, int], tuple] = {}
    offset = 0
    for gamma in partial:
        for k in range(blocks):
            layout[(gamma, k)] = partial_block(n, gamma, offset)
            offset += gamma
    if any(int(g) == n for g in gammas):
        for k in range(blocks):
            layout[(n, k)] = partial_block(n, n, 0)
    return layout


def partial_gammas(n: int, fractions: Sequence[int]) -> List[int]:
    """γ = N/k（k 取自 fractions，从小到大）再加上全观测 γ = N"""
    if not fractions:
        return []
    return sorted({max(1, n // int(k)) for k in fractions} | {n})


def reproduce_partial_obs(plan: ExperimentPlan, gammas: Optional[Sequence[int]] = None,
                          runner: Optional[ReplicaRunner] = None, blocks: int = 1) -> pd.DataFrame:
    """
    部分观测估计：每个 γ 只使用一个互不相交块中的 γ 个神经元

    :return: DataFrame(n, gamma, block, replicate, seed, x_star, estimate, true_f, error)
    """
    runner = _runner(runner)
    gammas = list(plan.gammas if gammas is None else gammas)
    frames = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        h = plan.bandwidth(n)
        subsets = partial_layout(n, gammas, blocks)

        def task(r: int, seed: int):
            traj = simulate(model, seed)
            out = []
            for (gamma, k), subset in subsets.items():
                for row in _estimate_rows(traj, plan.kernel, h, plan.points, model.rate,
                                          plan.epsilon, subset=subset):
                    row.update({'n': n, 'gamma': int(gamma), 'block': k, 'replicate': r, 'seed': seed})
                    out.append(row)
            return out

        results = runner.run(task, plan.seeds(n_index), label=f"[{plan.name}] N={n}")
        frames.append(pd.DataFrame([row for rows in results for row in rows]))
    columns = ['n', 'gamma', 'block', 'replicate', 'seed', 'x_star', 'estimate', 'true_f', 'error']
    return pd.concat(frames, ignore_index=True)[columns]


# ---------------------------------------------------------------------------
# 风险曲线
# ---------------------------------------------------------------------------

def fit_slope(n_values: Sequence[float], mse: Sequence[float]) -> Tuple[float, float]:
    """
    log MSE 对 log N 的最小二乘斜率

    :return: (斜率, 标准误)
    """
    n_values = np.asarray(n_values, dtype=float)
    mse = np.asarray(mse, dtype=float)
    if np.unique(n_values).size < 3:
        raise ModelConfigError("风险曲线斜率拟合至少需要 3 个不同的 N")
    if np.any(mse <= 0) or not np.all(np.isfinite(mse)):
        raise ModelConfigError("MSE 必须为正的有限值才能做对数拟合")
    fit = stats.linregress(np.log(n_values), np.log(mse))
    return float(fit.slope), float(fit.stderr)


def target_risk_slope(beta: float) -> float:
    """理论斜率 -2β/(2β+1)"""
    return -2.0 * beta / (2.0 * beta + 1.0)


def summarize_risk(rows: pd.DataFrame) -> pd.DataFrame:
    """按 N 汇总：只在 Ω 事件成立的重复上计算 MSE，Ω 失败单独计数"""
    records = []
    for n, group in rows.groupby('n', sort=True):
        kept = group[group['omega_flag'] == True]  # noqa: E712
        sq = kept['sq_error'].to_numpy()
        records.append({
            'n': int(n),
            'h': float(group['h'].iloc[0]),
            'mse': float(np.mean(sq)) if sq.size else np.nan,
            'mse_stderr': float(np.std(sq, ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else np.nan,
            'replicates': int(len(group)),
            'omega_failures': int(len(group) - len(kept)),
            'omega_failure_fraction': float((len(group) - len(kept)) / len(group)),
        })
    return pd.DataFrame(records)


def risk_curve(plan: ExperimentPlan, true_f: Optional[RateSpec] = None,
               runner: Optional[ReplicaRunner] = None) -> RiskCurve:
    """
    L² 风险随 N 的衰减

    :param plan: 计划（x_star 为估计点，bandwidth_a 通常取 1/(2β+1)）
    :param true_f: 真实跳跃率（默认取模型的 f）
    :return: RiskCurve
    """
    if len(set(plan.n_values)) < 3:
        raise ModelConfigError("风险曲线至少需要 3 个不同的 N")
    runner = _runner(runner)
    true_f = true_f or plan.model.rate
    truth = float(true_f(plan.x_star))
    records = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        h = plan.bandwidth(n)
        flow = solve_limit_ode(model)
        cfg = EstimatorConfig(kernel=plan.kernel, bandwidth=h, x_star=plan.x_star, epsilon=plan.epsilon)

        def task(r: int, seed: int):
            report = estimate_rate(simulate(model, seed), cfg, flow=flow)
            return {'n': n, 'h': h, 'replicate': r, 'seed': seed, 'estimate': report.estimate,
                    'sq_error': (report.estimate - truth) ** 2, 'omega_flag': bool(report.omega_flag)}

        records.extend(runner.run(task, plan.seeds(n_index), label=f"[risk] N={n}"))

    rows = pd.DataFrame(records)
    summary = summarize_risk(rows)
    usable = summary.dropna(subset=['mse'])
    slope, stderr = fit_slope(usable['n'], usable['mse'])
    logger.info(f"风险曲线斜率 = {slope:.4f} ± {stderr:.4f}（理论 {target_risk_slope(plan.beta):.4f}）")
    return RiskCurve(rows=rows, summary=summary, slope=slope, slope_stderr=stderr,
                     target_slope=target_risk_slope(plan.beta))


def risk_curve_from_summary(n_values: Sequence[int], mse: Sequence[float], beta: float = 1.0) -> RiskCurve:
    """由已汇总的 (N, MSE) 构造风险曲线（用于外部结果或合成数据的检验）"""
    summary = pd.DataFrame({'n': list(n_values), 'mse': list(mse),
                            'omega_failure_fraction': [0.0] * len(n_values)})
    slope, stderr = fit_slope(n_values, mse)
    return RiskCurve(rows=pd.DataFrame(), summary=summary, slope=slope, slope_stderr=stderr,
                     target_slope=target_risk_slope(beta))


# ---------------------------------------------------------------------------
# CLT
# ---------------------------------------------------------------------------

def clt_study(model: ModelSpec, x_star: float, kernel: KernelSpec, n: int,
              bandwidth_c: float = 1.0, bandwidth_a: float = CLT_BANDWIDTH_EXPONENT,
              replicates: int = 200, seed: int = 0,
              runner: Optional[ReplicaRunner] = None) -> CLTReport:
    """
    标准化误差 √(Nh)·(f̂ - f(x*)) 的方差与正态性

    :raises DegenerateEstimateError: F(x*) = 0
    """
    kappa2 = clt_variance(model, x_star, kernel)
    plan = ExperimentPlan(name='clt', model=model, kernel=kernel, n_values=(n,),
                          replicates=replicates, bandwidth_c=bandwidth_c,
                          bandwidth_a=bandwidth_a, x_star=x_star, seed=seed)
    runner = _runner(runner)
    system = plan.model_for(n)
    h = plan.bandwidth(n)
    truth = float(system.rate(x_star))
    cfg = EstimatorConfig(kernel=kernel, bandwidth=h, x_star=x_star)
    scale = math.sqrt(n * h)

    def task(r: int, seed_r: int):
        return scale * (estimate_rate(simulate(system, seed_r), cfg).estimate - truth)

    samples = np.array(runner.run(task, plan.seeds(0), label=f"[clt] N={n}"))
    variance = float(np.var(samples, ddof=1)) if samples.size > 1 else 0.0
    p_value = float('nan')
    if samples.size >= 8 and variance > 0:
        result = stats.goodness_of_fit(stats.norm, samples, statistic='ad',
                                       n_mc_samples=NORMALITY_MC_SAMPLES,
                                       random_state=np.random.default_rng(seed))
        p_value = float(result.pvalue)
    mean = float(np.mean(samples))
    stderr = math.sqrt(variance / samples.size) if samples.size > 1 else float('nan')
    logger.info(f"CLT: 经验方差={variance:.4f}, κ²={kappa2:.4f}, p={p_value:.3f}")
    return CLTReport(n=n, bandwidth=h, samples=samples, kappa2=kappa2,
                     empirical_variance=variance, variance_ratio=variance / kappa2 if kappa2 else float('nan'),
                     mean=mean, mean_stderr=stderr, p_value=p_value)


# ---------------------------------------------------------------------------
# 兴奋性系统（对数速率）
# ---------------------------------------------------------------------------

def reproduce_excitatory(plan: ExperimentPlan, runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """兴奋性系统的估计精度，并附带每次运行的熄灭判定"""
    runner = _runner(runner)
    frames = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        h = plan.bandwidth(n)

        def task(r: int, seed: int):
            traj = simulate(model, seed)
            extinct = detect_extinction(traj).extinct
            rows = _estimate_rows(traj, plan.kernel, h, plan.points, model.rate, plan.epsilon)
            for row in rows:
                row.update({'n': n, 'h': h, 'replicate': r, 'seed': seed, 'extinct': extinct})
            return rows

        results = runner.run(task, plan.seeds(n_index), label=f"[{plan.name}] N={n}")
        frames.append(pd.DataFrame([row for rows in results for row in rows]))
    columns = ['n', 'h', 'replicate', 'seed', 'x_star', 'estimate', 'true_f', 'error', 'extinct']
    return pd.concat(frames, ignore_index=True)[columns]


def reproduce_fig3_fig4(n: int = 4000, replicates: int = 1, seed: int = 0,
                        runner: Optional[ReplicaRunner] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """两种权重律下的兴奋性系统估计：亚稳态 (w=2) 与熄灭 (w=1/2)"""
    fig3 = default_plan('fig3', {'n': n, 'experiment.replicates': replicates, 'experiment.seed': seed})
    fig4 = default_plan('fig4', {'n': n, 'experiment.replicates': replicates, 'experiment.seed': seed})
    return reproduce_excitatory(fig3, runner), reproduce_excitatory(fig4, runner)


# ---------------------------------------------------------------------------
# 强逼近、占据极限与熄灭
# ---------------------------------------------------------------------------

def strong_approx_study(plan: ExperimentPlan,
                        runner: Optional[ReplicaRunner] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    E[sup_t |V|²] 随 N 的有界性与 sup_t |X^{N,1} - x| 的 N^{-1/2} 衰减

    :return: (逐重复明细, 按 N 汇总)
    """
    runner = _runner(runner)
    flow = solve_limit_ode(plan.model)
    probes = np.linspace(0.0, plan.model.horizon, 101)
    records = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)

        def task(r: int, seed: int):
            traj = simulate(model, seed, record='probed', probe_times=probes)
            report = strong_approx_diag(traj, flow, probes)
            return {'n': n, 'replicate': r, 'seed': seed,
                    'mean_sup_v2': report.moments[2],
                    'sup_deviation_first': float(report.sup_per_neuron[0]) / math.sqrt(n)}

        records.extend(runner.run(task, plan.seeds(n_index), label=f"[strong] N={n}"))
    rows = pd.DataFrame(records)
    summary = rows.groupby('n', sort=True).agg(
        e_sup_v2=('mean_sup_v2', 'mean'),
        mean_sup_deviation=('sup_deviation_first', 'mean'),
    ).reset_index()
    return rows, summary


def occupation_limit_study(plan: ExperimentPlan,
                           runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """每个神经元的平均占据 A_N 与 1/|F(x*)| 的比较"""
    runner = _runner(runner)
    target = 1.0 / abs(float(evaluate_big_F(plan.model, plan.x_star)))
    records = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        h = plan.bandwidth(n)
        cfg = EstimatorConfig(kernel=plan.kernel, bandwidth=h, x_star=plan.x_star)

        def task(r: int, seed: int):
            A_N = occupation_integral(simulate(model, seed), cfg) / n
            return {'n': n, 'h': h, 'replicate': r, 'seed': seed, 'A_N': A_N,
                    'target': target, 'relative_error': A_N / target - 1.0}

        records.extend(runner.run(task, plan.seeds(n_index), label=f"[occupation] N={n}"))
    return pd.DataFrame(records)


def extinction_study(plan: ExperimentPlan, runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """逐种子的熄灭判定，以及初值处熄灭概率下界的对数"""
    runner = _runner(runner)
    records = []
    for n_index, n in enumerate(plan.n_values):
        model = plan.model_for(n)
        log_bound = log_extinction_lower_bound(n, model.x0) if model.x0 >= 0 else float('nan')

        def task(r: int, seed: int):
            report = detect_extinction(simulate(model, seed))
            return {'n': n, 'replicate': r, 'seed': seed, 'w': model.w,
                    'extinct': report.extinct, 'last_spike': report.last_spike,
                    'terminal_rate': report.terminal_rate, 'log_lower_bound': log_bound}

        records.extend(runner.run(task, plan.seeds(n_index), label=f"[extinction] N={n}"))
    return pd.DataFrame(records)


def metastable_counterpart(plan: ExperimentPlan) -> ExperimentPlan:
    """同 N、同时长的亚稳态对照：ν = Uniform(0, 4)（w = 2），x₀ = 0.1"""
    model = replace(plan.model, weights=uniform_weights(0.0, 4.0), x0=0.1)
    return replace(plan, model=model, seed=plan.seed + 1)


# ---------------------------------------------------------------------------
# 默认计划与调度
# ---------------------------------------------------------------------------

_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'fig1': {'base': SIGNED_WEIGHTS_CONFIG, 'n': 4000, 'replicates': 1, 'a': FIG_BANDWIDTH_EXPONENT,
             'points': FIG1_POINTS},
    'partial': {'base': SIGNED_WEIGHTS_CONFIG, 'n': 10000, 'replicates': 20, 'a': FIG_BANDWIDTH_EXPONENT,
                'points': [0.6], 'gamma_fractions': PARTIAL_OBS_FRACTIONS},
    'risk': {'base': SIGNED_WEIGHTS_CONFIG, 'n_values': RISK_N_VALUES, 'replicates': 100, 'a': 1.0 / 3.0,
             'x_star': 0.2},
    'clt': {'base': SIGNED_WEIGHTS_CONFIG, 'n': 5000, 'replicates': 200, 'a': CLT_BANDWIDTH_EXPONENT,
            'x_star': 0.0},
    'fig3': {'base': EXCITATORY_METASTABLE_CONFIG, 'n': 4000, 'replicates': 1,
             'a': FIG_BANDWIDTH_EXPONENT, 'points': FIG3_POINTS},
    'fig4': {'base': EXCITATORY_EXTINCTION_CONFIG, 'n': 4000, 'replicates': 1,
             'a': FIG_BANDWIDTH_EXPONENT, 'points': FIG4_POINTS},
    'strong': {'base': SIGNED_WEIGHTS_CONFIG, 'n_values': STRONG_APPROX_N_VALUES, 'replicates': 50,
               'a': FIG_BANDWIDTH_EXPONENT},
    'occupation': {'base': SIGNED_WEIGHTS_CONFIG, 'n': 4000, 'replicates': 1,
                   'a': FIG_BANDWIDTH_EXPONENT, 'x_star': 0.0},
    'extinction': {'base': EXCITATORY_EXTINCTION_CONFIG, 'n': 1000, 'replicates': 100,
                   'a': FIG_BANDWIDTH_EXPONENT, 'horizon': EXTINCTION_HORIZON},
}


def default_plan(name: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentPlan:
    """
    构造实验的桌面规模默认计划，并应用点号键覆盖

    :param name: 实验名
    :param overrides: flatten_config 形式的覆盖项（模型键与 experiment.* 键）
    :return: ExperimentPlan
    """
    if name not in _DEFAULTS:
        raise ModelConfigError(f"未知的实验 experiment.name={name}（可选 {', '.join(EXPERIMENT_NAMES)}）")
    preset = _DEFAULTS[name]
    overrides = dict(overrides or {})
    flat = flatten_config(preset['base'])
    if 'horizon' in preset:
        flat['horizon'] = preset['horizon']
    if 'n' in preset:
        flat['n'] = preset['n']
    flat.update({k: v for k, v in overrides.items() if not k.startswith(('experiment.', 'estimator.', 'simulation.'))})

    model = build_model(flat)
    kernel = build_kernel_from_config(flat)
    # n 只改单一 N 的预设；多 N 预设的网格须经 experiment.n_values 覆盖
    n_values = overrides.get('experiment.n_values') or preset.get('n_values') or [model.n]
    if 'n' in overrides and 'experiment.n_values' not in overrides and 'n_values' not in preset:
        n_values = [overrides['n']]
    elif 'n' in overrides and 'experiment.n_values' not in overrides:
        logger.warning(f"实验 {name} 使用 N 网格 {list(n_values)}，忽略 n={overrides['n']}")
    gammas = overrides.get('experiment.gammas')
    if gammas is None:
        gammas = partial_gammas(int(min(n_values)), preset.get('gamma_fractions', []))
    return ExperimentPlan(
        name=name,
        model=model,
        kernel=kernel,
        n_values=tuple(n_values),
        replicates=int(overrides.get('experiment.replicates', preset['replicates'])),
        bandwidth_c=float(overrides.get('experiment.bandwidth_c', 1.0)),
        bandwidth_a=float(overrides.get('experiment.bandwidth_a', preset['a'])),
        points=tuple(float(p) for p in overrides.get('experiment.points', preset.get('points', []))),
        x_star=float(overrides.get('experiment.x_star', preset.get('x_star', 0.0))),
        gammas=tuple(int(g) for g in gammas),
        seed=int(overrides.get('experiment.seed', 0)),
        beta=float(overrides.get('experiment.beta', 1.0)),
        epsilon=float(overrides.get('estimator.epsilon', DEFAULT_OMEGA_EPSILON)),
    )


def run_experiment(plan: ExperimentPlan, runner: Optional[ReplicaRunner] = None) -> ExperimentResult:
    """
    按名称运行实验

    :return: ExperimentResult（frames 为要写出的表，summary 为验收指标）
    """
    name = plan.name
    result = ExperimentResult(name=name)
    logger.info(f"开始实验 {name}: N={list(plan.n_values)}, R={plan.replicates}, seed={plan.seed}")
    if name == 'fig1':
        df = reproduce_fig1(plan, runner)
        result.frames['estimates'] = df
        result.summary['mean_abs_error'] = df.groupby('x_star')['error'].apply(
            lambda e: float(np.mean(np.abs(e)))).to_dict()
    elif name == 'partial':
        df = reproduce_partial_obs(plan, runner=runner)
        result.frames['estimates'] = df
        per_point = df.groupby(['gamma', 'x_star'])['estimate'].var(ddof=1)
        result.summary['variance_by_gamma'] = {
            int(g): float(v) for g, v in per_point.groupby(level=0).mean().items()
        }
    elif name == 'risk':
        curve = risk_curve(plan, runner=runner)
        result.frames['replicates'] = curve.rows
        result.frames['summary'] = curve.summary
        result.summary.update({'slope': curve.slope, 'slope_stderr': curve.slope_stderr,
                               'target_slope': curve.target_slope})
        result.curve = curve
    elif name == 'clt':
        report = clt_study(plan.model, plan.x_star, plan.kernel, plan.n_values[0],
                           plan.bandwidth_c, plan.bandwidth_a, plan.replicates, plan.seed, runner)
        result.frames['samples'] = pd.DataFrame({'replicate': np.arange(report.samples.size),
                                                 'standardized_error': report.samples})
        result.summary.update({'kappa2': report.kappa2, 'empirical_variance': report.empirical_variance,
                               'variance_ratio': report.variance_ratio, 'mean': report.mean,
                               'mean_stderr': report.mean_stderr, 'p_value': report.p_value,
                               'bandwidth': report.bandwidth})
    elif name in ('fig3', 'fig4'):
        df = reproduce_excitatory(plan, runner)
        result.frames['estimates'] = df
        result.summary['mean_abs_error'] = df.groupby('x_star')['error'].apply(
            lambda e: float(np.mean(np.abs(e)))).to_dict()
        result.summary['extinct_fraction'] = float(df.groupby('replicate')['extinct'].first().mean())
    elif name == 'strong':
        rows, summary = strong_approx_study(plan, runner)
        result.frames['replicates'] = rows
        result.frames['summary'] = summary
        result.summary['e_sup_v2'] = dict(zip(summary['n'].tolist(), summary['e_sup_v2'].tolist()))
        result.summary['mean_sup_deviation'] = dict(
            zip(summary['n'].tolist(), summary['mean_sup_deviation'].tolist()))
    elif name == 'occupation':
        df = occupation_limit_study(plan, runner)
        result.frames['replicates'] = df
        result.summary['mean_relative_error'] = float(df['relative_error'].mean())
    elif name == 'extinction':
        extinct_df = extinction_study(plan, runner)
        metastable_df = extinction_study(metastable_counterpart(plan), runner)
        result.frames['replicates'] = pd.concat([extinct_df, metastable_df], ignore_index=True)
        result.summary['extinct_fraction'] = float(extinct_df['extinct'].mean())
        result.summary['metastable_survival_fraction'] = float(1.0 - metastable_df['extinct'].mean())
        result.summary['w'] = float(plan.model.w)
    else:
        raise ModelConfigError(f"未知的实验 experiment.name={name}")
    return result


def risk_result_from_table(table: pd.DataFrame, beta: float = 1.0) -> ExperimentResult:
    """
    由外部 (n, mse) 表构造风险曲线结果，供验收检查使用

    :param table: 至少含 n 与 mse 两列
    :param beta: 有效光滑度
    """
    missing = {'n', 'mse'} - set(table.columns)
    if missing:
        raise ModelConfigError(f"风险曲线表缺少列: {', '.join(sorted(missing))}")
    curve = risk_curve_from_summary(table['n'].tolist(), table['mse'].tolist(), beta)
    return ExperimentResult(
        name='risk',
        frames={'summary': curve.summary},
        summary={'slope': curve.slope, 'slope_stderr': curve.slope_stderr,
                 'target_slope': curve.target_slope},
        curve=curve,
    )
