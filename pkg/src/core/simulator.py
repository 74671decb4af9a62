"""
有限平均场系统的精确事件驱动模拟（稀疏化/接受-拒绝）
轨迹记录、电位重建、放电神经元识别与熄灭诊断
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.optimize import minimize_scalar

from config import (
    BOUND_CHECK_TOLERANCE,
    DEFAULT_CHECKPOINT_INTERVAL,
    DEFAULT_EVENT_CAP,
    DEFAULT_PROBE_COUNT,
    DEFAULT_QUIET_FRACTION,
    DEFAULT_RATE_EPSILON_PER_NEURON,
    RANDOM_BLOCK_SIZE,
    RECORD_LEVELS,
)
from .errors import (
    AmbiguousSpikerError,
    EventCapExceeded,
    ModelConfigError,
    ThinningBoundViolation,
)
from .model import ModelSpec

logger = logging.getLogger(__name__)

# e^{λT} 超过该指数时，线性表示改走逐段重放
MAX_LINEAR_EXPONENT = 600.0
# 快速表示的参考时刻重置阈值
REBASE_EXPONENT = 20.0


@dataclass(frozen=True)
class SpikeEvent:
    """一次放电：时刻、放电神经元（0 起始）、权重、放电前电位"""
    time: float
    spiker: int
    weight: float
    pre_potential: float


# ---------------------------------------------------------------------------
# 稀疏化上界
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThinningBound:
    """
    稀疏化上界

    strategy:
      global-L        每个神经元的上界为常数 L
      monotone-decay  f 随 |x| 单调且漂移向内时，上界取 f(M)，M 为 max|X| 的包络
      user            用户给出 M -> sup_{|x|≤M} f(x)
    每个神经元的上界相同，候选神经元均匀抽取
    """
    strategy: str
    level: Optional[float] = None
    envelope_rule: Optional[Callable[[float], float]] = field(default=None, repr=False)
    checkpoint_interval: float = DEFAULT_CHECKPOINT_INTERVAL

    @property
    def refreshes(self) -> bool:
        return self.strategy != 'global-L'

    def neuron_bound(self, envelope: float) -> float:
        if self.strategy == 'global-L':
            return self.level
        return max(float(self.envelope_rule(envelope)), 0.0)

    def total(self, n: int, envelope: float) -> float:
        """当前总速率上界 Λ"""
        return n * self.neuron_bound(envelope)


def select_thinning_bound(model: ModelSpec, strategy: Optional[str] = None,
                          checkpoint_interval: float = DEFAULT_CHECKPOINT_INTERVAL) -> ThinningBound:
    """
    为 (b, f) 选择并校验稀疏化上界

    :param model: 模型
    :param strategy: 'global-L' | 'monotone-decay' | 'user'；None 时自动选择
    :param checkpoint_interval: 包络精确重算间隔
    :return: ThinningBound
    """
    rate = model.rate
    if strategy is None:
        if rate.user_bound is not None:
            strategy = 'user'
        elif rate.monotone_in_abs and model.drift.inward:
            strategy = 'monotone-decay'
        elif rate.bound is not None:
            strategy = 'global-L'
        else:
            raise ModelConfigError("没有可用的稀疏化上界：f 既无全局上界也不满足单调-衰减条件")

    if checkpoint_interval <= 0:
        raise ModelConfigError(f"simulation.checkpoint 必须 > 0 (checkpoint={checkpoint_interval})")
    if strategy == 'global-L':
        if rate.bound is None:
            raise ModelConfigError("global-L 需要 f 的全局上界 rate.bound")
        return ThinningBound(strategy='global-L', level=float(rate.bound),
                             checkpoint_interval=checkpoint_interval)
    if strategy == 'monotone-decay':
        if not rate.monotone_in_abs:
            raise ModelConfigError("monotone-decay 需要 f 随 |x| 单调")
        if not model.drift.inward:
            raise ModelConfigError("monotone-decay 需要漂移使 |x| 在跳跃间不增")
        return ThinningBound(strategy='monotone-decay', envelope_rule=lambda m: rate.func(m),
                             checkpoint_interval=checkpoint_interval)
    if strategy == 'user':
        if rate.user_bound is None:
            raise ModelConfigError("user 策略需要 RateSpec.user_bound")
        return ThinningBound(strategy='user', envelope_rule=rate.user_bound,
                             checkpoint_interval=checkpoint_interval)
    raise ModelConfigError(f"未知的稀疏化策略 simulation.bound_strategy={strategy}")


# ---------------------------------------------------------------------------
# 随机流
# ---------------------------------------------------------------------------

class _BufferedStream:
    """按块抽取的随机数流"""

    def __init__(self, draw: Callable[[int], np.ndarray], block: int = RANDOM_BLOCK_SIZE):
        self._draw = draw
        self._block = block
        self._buffer: List[float] = []
        self._pos = 0

    def next(self):
        if self._pos >= len(self._buffer):
            self._buffer = np.asarray(self._draw(self._block)).tolist()
            self._pos = 0
        value = self._buffer[self._pos]
        self._pos += 1
        return value


def spawn_generators(seed: int, count: int) -> List[np.random.Generator]:
    """由主种子派生 count 个计数器型（Philox）随机数发生器"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


# ---------------------------------------------------------------------------
# 状态表示
# ---------------------------------------------------------------------------

class FastLinearState:
    """
    线性漂移 b(x) = -λx 的 O(1)/事件表示

    X^i_t = e^{-λ(t - t_ref)}·(A_i + S)
    神经元 j 在 t 时刻放电、权重 u：c = e^{λ(t - t_ref)}·u/N，S += c，A_j -= c
    """

    def __init__(self, n: int, x0: float, rate: float):
        self.rate = rate
        self.n = n
        self.t_ref = 0.0
        self.A = np.full(n, float(x0))
        self.S = 0.0

    def value(self, j: int, t: float) -> float:
        return math.exp(-self.rate * (t - self.t_ref)) * (self.A[j] + self.S)

    def all_values(self, t: float) -> np.ndarray:
        return math.exp(-self.rate * (t - self.t_ref)) * (self.A + self.S)

    def apply_spike(self, j: int, t: float, u: float, pre: float) -> None:
        c = math.exp(self.rate * (t - self.t_ref)) * u / self.n
        self.S += c
        self.A[j] -= c
        if self.rate * (t - self.t_ref) > REBASE_EXPONENT:
            self.A = self.all_values(t)
            self.S = 0.0
            self.t_ref = t


class GeneralState:
    """通用表示：保存上次事件时刻的全部电位，按需沿漂移流推进"""

    def __init__(self, n: int, x0: float, drift):
        self.drift = drift
        self.n = n
        self.X = np.full(n, float(x0))
        self.t_last = 0.0

    def value(self, j: int, t: float) -> float:
        return float(self.drift.propagate(float(self.X[j]), t - self.t_last))

    def all_values(self, t: float) -> np.ndarray:
        return np.array(self.drift.propagate(self.X, t - self.t_last), dtype=float, copy=True)

    def apply_spike(self, j: int, t: float, u: float, pre: float) -> None:
        X = self.all_values(t)
        X += u / self.n
        X[j] = pre
        self.X = X
        self.t_last = t


def _decay_envelope(drift, envelope: float, dt: float) -> float:
    if dt <= 0.0 or drift.flow is None:
        return envelope
    return max(abs(float(drift.flow(envelope, dt))), abs(float(drift.flow(-envelope, dt))))


# ---------------------------------------------------------------------------
# 轨迹
# ---------------------------------------------------------------------------

def _readonly(array: Optional[np.ndarray], dtype=float) -> Optional[np.ndarray]:
    if array is None:
        return None
    out = np.ascontiguousarray(array, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SystemTrajectory:
    """
    一次模拟的分段确定性记录

    事件按时间严格递增；spikers 为 0 起始的神经元编号
    snapshots[n] 为第 n 个事件后的全部电位（record='snapshots'）
    probe_states[k] 为 probe_times[k] 时刻的全部电位（record='probed'）
    """
    model: ModelSpec
    seed: int
    terminal_time: float
    times: np.ndarray
    spikers: np.ndarray
    weights: np.ndarray
    pre_potentials: np.ndarray
    record: str = 'events-only'
    snapshots: Optional[np.ndarray] = None
    probe_times: Optional[np.ndarray] = None
    probe_states: Optional[np.ndarray] = None
    stats: Dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'times', _readonly(self.times))
        object.__setattr__(self, 'spikers', _readonly(self.spikers, np.int64))
        object.__setattr__(self, 'weights', _readonly(self.weights))
        object.__setattr__(self, 'pre_potentials', _readonly(self.pre_potentials))
        object.__setattr__(self, 'snapshots', _readonly(self.snapshots))
        object.__setattr__(self, 'probe_times', _readonly(self.probe_times))
        object.__setattr__(self, 'probe_states', _readonly(self.probe_states))

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def events(self) -> Iterator[SpikeEvent]:
        for t, i, u, x in zip(self.times.tolist(), self.spikers.tolist(),
                              self.weights.tolist(), self.pre_potentials.tolist()):
            yield SpikeEvent(time=t, spiker=i, weight=u, pre_potential=x)

    def to_frame(self) -> pd.DataFrame:
        """事件日志表 (n, time, spiker, weight, pre_potential)"""
        return pd.DataFrame({
            'n': np.arange(1, self.n_events + 1),
            'time': self.times,
            'spiker': self.spikers,
            'weight': self.weights,
            'pre_potential': self.pre_potentials,
        })

    @property
    def linear_closed_form(self) -> bool:
        drift = self.model.drift
        return drift.is_linear and drift.decay_rate * self.terminal_time <= MAX_LINEAR_EXPONENT

    @cached_property
    def jump_contributions(self) -> np.ndarray:
        """线性漂移下 c_n = e^{λT_n}·U_n/N"""
        lam = self.model.drift.decay_rate or 0.0
        return _readonly(np.exp(lam * self.times) * self.weights / self.model.n)

    @cached_property
    def cumulative_contributions(self) -> np.ndarray:
        return _readonly(np.concatenate([[0.0], np.cumsum(self.jump_contributions)]))


# ---------------------------------------------------------------------------
# 模拟
# ---------------------------------------------------------------------------

def simulate(model: ModelSpec, seed: int, record: str = 'events-only', *,
             path: str = 'auto', bound_strategy: Optional[str] = None,
             event_cap: int = DEFAULT_EVENT_CAP,
             checkpoint_interval: float = DEFAULT_CHECKPOINT_INTERVAL,
             probe_times: Optional[Sequence[float]] = None,
             relabel: Optional[Sequence[int]] = None) -> SystemTrajectory:
    """
    在 [0, T] 上精确模拟有限系统

    候选时刻来自速率 Λ 的 Poisson 流，候选神经元均匀抽取，以 f(X^j_{t-})/bound_j 接受；
    接受后抽取 U ~ ν，除放电者外每个神经元电位增加 U/N

    :param model: 模型
    :param seed: 主种子（非负整数）
    :param record: 'events-only' | 'snapshots' | 'probed'
    :param path: 'auto' | 'fast' | 'general'
    :param bound_strategy: 稀疏化策略（None 为自动）
    :param event_cap: 事件数上限
    :param checkpoint_interval: 包络精确重算间隔
    :param probe_times: 探针时刻（record='probed'，默认 linspace(0, T, 101)）
    :param relabel: 神经元编号置换 σ：候选流抽到 j 时改用神经元 σ(j)（默认恒等）
    :return: SystemTrajectory
    """
    if record not in RECORD_LEVELS:
        raise ModelConfigError(f"未知的记录级别 simulation.record={record}")
    if seed is None or int(seed) < 0:
        raise ModelConfigError(f"种子必须为非负整数 (seed={seed})")
    bound = select_thinning_bound(model, bound_strategy, checkpoint_interval)

    drift = model.drift
    n = model.n
    T = float(model.horizon)
    if path == 'auto':
        path = 'fast' if drift.is_linear else 'general'
    if path == 'fast':
        if not drift.is_linear:
            raise ModelConfigError("快速表示只适用于线性漂移 b(x) = -λx")
        state = FastLinearState(n, model.x0, drift.decay_rate)
    elif path == 'general':
        state = GeneralState(n, model.x0, drift)
    else:
        raise ModelConfigError(f"未知的模拟路径 path={path}")

    probes = None
    if record == 'probed':
        probes = np.linspace(0.0, T, DEFAULT_PROBE_COUNT) if probe_times is None \
            else np.sort(np.asarray(probe_times, dtype=float))
        if probes.size and (probes[0] < 0 or probes[-1] > T):
            raise ModelConfigError("探针时刻必须位于 [0, T] 内")

    clock_gen, choice_gen, accept_gen, weight_gen = spawn_generators(int(seed), 4)
    clock = _BufferedStream(clock_gen.standard_exponential)
    if relabel is None:
        choice = _BufferedStream(lambda k: choice_gen.integers(0, n, k))
    else:
        sigma = np.asarray(relabel, dtype=np.int64)
        if sigma.shape != (n,) or not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ModelConfigError(f"relabel 必须是 0..{n - 1} 的一个置换")
        choice = _BufferedStream(lambda k: sigma[choice_gen.integers(0, n, k)])
    accept = _BufferedStream(accept_gen.random)
    marks = _BufferedStream(lambda k: model.weights.sample(weight_gen, k))
    f = model.rate.func

    times: List[float] = []
    spikers: List[int] = []
    weights: List[float] = []
    pres: List[float] = []
    snapshots: List[np.ndarray] = []
    probe_values: List[np.ndarray] = []
    next_probe = 0

    started = time.perf_counter()
    t = 0.0
    envelope = abs(float(model.x0))
    next_check = checkpoint_interval
    candidates = 0

    while True:
        per_neuron = bound.neuron_bound(envelope)
        total = n * per_neuron
        if total <= 0.0:
            break
        t_candidate = t + clock.next() / total
        if bound.refreshes and next_check < T and t_candidate > next_check:
            envelope = float(np.max(np.abs(state.all_values(next_check))))
            t = next_check
            next_check += checkpoint_interval
            continue
        if t_candidate > T:
            break

        candidates += 1
        j = choice.next()
        z = accept.next()
        x_j = state.value(j, t_candidate)
        rate_j = float(f(x_j))
        if rate_j > per_neuron + BOUND_CHECK_TOLERANCE:
            raise ThinningBoundViolation(
                f"稀疏化上界被突破: f(X)={rate_j:.12g} > bound={per_neuron:.12g}",
                state={'time': t_candidate, 'neuron': j, 'potential': x_j,
                       'envelope': envelope, 'strategy': bound.strategy},
            )
        envelope = _decay_envelope(drift, envelope, t_candidate - t)
        t = t_candidate
        if z * per_neuron >= rate_j:
            continue

        u = float(marks.next())
        if probes is not None:
            while next_probe < probes.size and probes[next_probe] < t:
                probe_values.append(state.all_values(probes[next_probe]))
                next_probe += 1
        state.apply_spike(j, t, u, x_j)
        times.append(t)
        spikers.append(j)
        weights.append(u)
        pres.append(x_j)
        envelope += abs(u) / n
        if record == 'snapshots':
            snapshots.append(state.all_values(t))
        if len(times) > event_cap:
            raise EventCapExceeded(f"事件数超过上限 {event_cap} (t={t:.6g})，系统可能处于失控区域")

    if probes is not None:
        while next_probe < probes.size:
            probe_values.append(state.all_values(probes[next_probe]))
            next_probe += 1

    elapsed = time.perf_counter() - started
    accepted = len(times)
    stats = {
        'candidates': candidates,
        'events': accepted,
        'rejection_rate': 1.0 - accepted / candidates if candidates else 0.0,
        'elapsed_seconds': elapsed,
        'path': path,
        'bound_strategy': bound.strategy,
    }
    logger.info(f"模拟完成: N={n}, T={T}, seed={seed}, 路径={path}, 事件数={accepted}, "
                f"候选数={candidates}, 拒绝率={stats['rejection_rate']:.3f}, 耗时={elapsed:.2f}s")

    snapshot_array = np.array(snapshots).reshape(accepted, n) if record == 'snapshots' else None
    probe_array = np.array(probe_values).reshape(probes.size, n) if probes is not None else None
    return SystemTrajectory(
        model=model, seed=int(seed), terminal_time=T,
        times=np.array(times, dtype=float), spikers=np.array(spikers, dtype=np.int64),
        weights=np.array(weights, dtype=float), pre_potentials=np.array(pres, dtype=float),
        record=record, snapshots=snapshot_array, probe_times=probes, probe_states=probe_array,
        stats=stats,
    )


# ---------------------------------------------------------------------------
# 电位重建
# ---------------------------------------------------------------------------

def _check_time(traj: SystemTrajectory, t: float) -> None:
    if not 0.0 <= t <= traj.terminal_time:
        raise ValueError(f"时刻 t={t} 不在 [0, {traj.terminal_time}] 内")


def _events_before(traj: SystemTrajectory, t: float, left: bool) -> int:
    return int(np.searchsorted(traj.times, t, side='left' if left else 'right'))


def states_at(traj: SystemTrajectory, t: float, left: bool = False) -> np.ndarray:
    """
    重建 t 时刻全部神经元的电位

    :param traj: 轨迹
    :param t: 时刻
    :param left: True 时返回左极限 X_{t-}
    :return: 长度 N 的数组
    """
    _check_time(traj, t)
    model = traj.model
    n = model.n
    count = _events_before(traj, t, left)

    if traj.snapshots is not None and count > 0:
        base = np.array(traj.snapshots[count - 1], dtype=float)
        return np.asarray(model.drift.propagate(base, t - traj.times[count - 1]), dtype=float)

    if traj.linear_closed_form:
        lam = model.drift.decay_rate
        own = np.zeros(n)
        np.add.at(own, traj.spikers[:count], traj.jump_contributions[:count])
        common = model.x0 + traj.cumulative_contributions[count]
        return math.exp(-lam * t) * (common - own)

    X = np.full(n, float(model.x0))
    last = 0.0
    for k in range(count):
        tk = float(traj.times[k])
        X = np.asarray(model.drift.propagate(X, tk - last), dtype=float)
        spiker = traj.spikers[k]
        X = X + traj.weights[k] / n
        X[spiker] = traj.pre_potentials[k]
        last = tk
    return np.asarray(model.drift.propagate(X, t - last), dtype=float)


def potential_at(traj: SystemTrajectory, i: int, t: float, left: bool = False) -> float:
    """
    重建神经元 i 在 t 时刻的电位 X^i_t

    :param traj: 轨迹
    :param i: 神经元编号（0 起始）
    :param t: 时刻
    :param left: True 时返回左极限
    :return: 电位
    """
    n = traj.model.n
    if not 0 <= i < n:
        raise IndexError(f"神经元编号 {i} 超出范围 [0, {n})")
    _check_time(traj, t)
    model = traj.model
    count = _events_before(traj, t, left)

    if traj.snapshots is not None and count > 0:
        return float(model.drift.propagate(float(traj.snapshots[count - 1, i]),
                                           t - traj.times[count - 1]))

    if traj.linear_closed_form:
        lam = model.drift.decay_rate
        own_mask = traj.spikers[:count] == i
        own = float(np.sum(traj.jump_contributions[:count][own_mask]))
        return math.exp(-lam * t) * (model.x0 + traj.cumulative_contributions[count] - own)

    x = float(model.x0)
    last = 0.0
    for k in range(count):
        tk = float(traj.times[k])
        if traj.spikers[k] == i:
            x = float(traj.pre_potentials[k])
        else:
            x = float(model.drift.propagate(x, tk - last)) + traj.weights[k] / traj.model.n
        last = tk
    return float(model.drift.propagate(x, t - last))


def identify_spiker(increments: Sequence[float]) -> int:
    """
    由一次事件的各神经元电位增量识别放电者：I_n = argmin |Δ_n(i)|

    :param increments: 各神经元的跳跃增量
    :return: 放电神经元编号（0 起始）
    """
    magnitudes = np.abs(np.asarray(increments, dtype=float))
    if magnitudes.size == 0:
        raise AmbiguousSpikerError("增量为空")
    smallest = magnitudes.min()
    ties = int(np.count_nonzero(magnitudes == smallest))
    if ties > 1:
        raise AmbiguousSpikerError(f"最小增量不唯一（{ties} 个神经元并列）")
    return int(np.argmin(magnitudes))


def event_increments(traj: SystemTrajectory, k: int) -> np.ndarray:
    """第 k 个事件（0 起始）处各神经元的观测增量 X_{T_k} - X_{T_k-}"""
    t = float(traj.times[k])
    return states_at(traj, t) - states_at(traj, t, left=True)


# ---------------------------------------------------------------------------
# 熄灭与 Lyapunov 诊断
# ---------------------------------------------------------------------------

@dataclass
class ExtinctionReport:
    extinct: bool
    last_spike: Optional[float]
    terminal_rate: float


def detect_extinction(traj: SystemTrajectory, quiet_horizon: Optional[float] = None,
                      rate_epsilon: Optional[float] = None) -> ExtinctionReport:
    """
    熄灭判定：最后 quiet_horizon 时间内无事件，且终端总速率 Σf(X^i_T) < rate_epsilon

    :param traj: 轨迹
    :param quiet_horizon: 安静窗口（默认 T 的 20%）
    :param rate_epsilon: 总速率阈值（默认 1e-6·N）
    """
    T = traj.terminal_time
    quiet = DEFAULT_QUIET_FRACTION * T if quiet_horizon is None else quiet_horizon
    eps = DEFAULT_RATE_EPSILON_PER_NEURON * traj.model.n if rate_epsilon is None else rate_epsilon
    last_spike = float(traj.times[-1]) if traj.n_events else None
    terminal = states_at(traj, T)
    terminal_rate = float(np.sum(traj.model.rate(terminal)))
    quiet_ok = last_spike is None or last_spike < T - quiet
    return ExtinctionReport(extinct=bool(quiet_ok and terminal_rate < eps),
                            last_spike=last_spike, terminal_rate=terminal_rate)


def _log1p_over_u(u: float) -> float:
    return math.log1p(u) / u if u > 0 else 1.0


def log_extinction_lower_bound(N: int, r: float) -> float:
    """熄灭概率下界的对数：-N·∫₀ʳ log(1+u)/u du"""
    if r < 0:
        raise ModelConfigError(f"r 必须 ≥ 0 (r={r})")
    if r == 0:
        return 0.0
    value, _ = integrate.quad(_log1p_over_u, 0.0, r, epsabs=0.0, epsrel=1e-12, limit=200)
    return -N * value


def extinction_lower_bound(N: int, r: float) -> float:
    """
    f(r)=log(1+r)、b(x)=-x、初值 r 时的熄灭概率下界 exp{-N·∫₀ʳ log(1+u)/u du}

    N 较大时会下溢为 0，此时使用 log_extinction_lower_bound
    """
    return math.exp(log_extinction_lower_bound(N, r))


@dataclass
class LyapunovReport:
    generator_values: np.ndarray
    lyapunov_values: np.ndarray
    constant: float
    max_excess: float
    bounded: bool


def _expected_abs_increments(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """E_ν[|x_j + u/N| - |x_j|]，对每个 j"""
    n = model.n
    law = model.weights
    if law.kind == 'point':
        return np.abs(x + law.value / n) - np.abs(x)
    if law.kind == 'uniform':
        value, _ = integrate.quad_vec(lambda u: np.abs(x + u / n) - np.abs(x), law.a, law.b,
                                      epsabs=1e-13, epsrel=1e-10)
        return value / (law.b - law.a)
    draws = law.sample(np.random.default_rng(0), 100_000)
    total = np.zeros_like(x)
    for chunk in np.array_split(draws, 100):
        total += np.sum(np.abs(x[None, :] + chunk[:, None] / n) - np.abs(x)[None, :], axis=0)
    return total / draws.size


def lyapunov_generator(model: ModelSpec, x: np.ndarray) -> float:
    """
    V(x) = Σ|x_i| 的生成元
    A^N V(x) = Σ b(x_i)·sign(x_i) + Σ_i f(x_i)·∫[V(x + (u/N)(𝟙 - e_i)) - V(x)] ν(du)
    """
    x = np.asarray(x, dtype=float)
    drift_part = float(np.sum(model.drift(x) * np.sign(x)))
    increments = _expected_abs_increments(model, x)
    jump_part = float(np.sum(model.rate(x) * (increments.sum() - increments)))
    return drift_part + jump_part


def lyapunov_constant(model: ModelSpec) -> float:
    """C = N·sup_{x≥0} [b(x) + (N-1)/N·m·f(x) - ½x]，m 为 w 或 E|u|"""
    n = model.n
    m = model.w if model.weights.nonnegative else model.weights.abs_moment(1.0)
    coef = (n - 1) / n * m
    objective = lambda x: -(float(model.drift(x)) + coef * float(model.rate(x)) - 0.5 * x)
    result = minimize_scalar(objective, bounds=(0.0, 1e4), method='bounded',
                             options={'xatol': 1e-10})
    best = max(-objective(0.0), -float(result.fun))
    return n * max(best, 0.0)


def lyapunov_drift_check(states: Sequence[np.ndarray], model: ModelSpec) -> LyapunovReport:
    """
    在给定状态上检查 A^N V(x) ≤ ½V(x) + C

    :param states: R₊^N 中的状态列表
    :param model: 模型（纯兴奋性，b(x) = -x）
    :return: LyapunovReport，max_excess 为 max(A^N V - ½V)
    """
    arrays = [np.asarray(s, dtype=float) for s in states]
    for s in arrays:
        if s.shape != (model.n,):
            raise ModelConfigError(f"状态维数 {s.shape} 与 N={model.n} 不符")
        if np.any(s < 0):
            raise ModelConfigError("Lyapunov 检查要求状态各分量非负")
    generator = np.array([lyapunov_generator(model, s) for s in arrays])
    lyap = np.array([float(np.sum(np.abs(s))) for s in arrays])
    constant = lyapunov_constant(model)
    excess = generator - 0.5 * lyap
    max_excess = float(excess.max()) if excess.size else -math.inf
    return LyapunovReport(
        generator_values=generator, lyapunov_values=lyap, constant=constant,
        max_excess=max_excess, bounded=bool(max_excess <= constant + 1e-9 * (1.0 + abs(constant))),
    )
