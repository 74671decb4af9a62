"""
事件间分段上的占据积分
Σ_i ∫ Q_h(X^i_s - x*)·g(X^i_s) ds 的逐神经元贡献
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import roots_legendre

from config import SEGMENT_BLOCK_SIZE, SEGMENT_QUAD_TOLERANCE, SEGMENT_QUADRATURE_NODES
from .model import KernelSpec
from .simulator import SystemTrajectory

logger = logging.getLogger(__name__)

WeightFunction = Callable[[np.ndarray], np.ndarray]

_NODES, _WEIGHTS = roots_legendre(SEGMENT_QUADRATURE_NODES)
MAX_BISECTION_DEPTH = 12


def _gauss_legendre(fn, lo: np.ndarray, hi: np.ndarray, idx: np.ndarray) -> np.ndarray:
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    points = mid[:, None] + half[:, None] * _NODES[None, :]
    values = fn(points, idx)
    return np.einsum('kmq,q->km', values, _WEIGHTS) * half[None, :]


def adaptive_gauss(fn, lo: np.ndarray, hi: np.ndarray, n_rows: int,
                   rtol: float = SEGMENT_QUAD_TOLERANCE, scale: float = 1.0) -> np.ndarray:
    """
    向量化的自适应 Gauss–Legendre 积分

    fn(points (m, q), idx (m,)) 返回 (n_rows, m, q) 的被积函数值；
    各区间独立二分，直到两级估计的差不超过 rtol·|估计| + 1e-12·scale·长度
    所有行共用同一划分，保证各行之间的线性关系在舍入误差内成立

    :return: (n_rows, len(lo)) 的积分值
    """
    total = np.zeros((n_rows, lo.size))
    if lo.size == 0:
        return total
    idx = np.arange(lo.size)
    a, b = lo.astype(float), hi.astype(float)
    coarse = _gauss_legendre(fn, a, b, idx)
    for _ in range(MAX_BISECTION_DEPTH):
        mid = 0.5 * (a + b)
        left = _gauss_legendre(fn, a, mid, idx)
        right = _gauss_legendre(fn, mid, b, idx)
        fine = left + right
        err = np.max(np.abs(fine - coarse), axis=0)
        bound = rtol * np.max(np.abs(fine), axis=0) + 1e-12 * scale * (b - a)
        done = err <= bound
        for row in range(n_rows):
            np.add.at(total[row], idx[done], fine[row, done])
        keep = ~done
        if not keep.any():
            return total
        idx = np.concatenate([idx[keep], idx[keep]])
        a, b = np.concatenate([a[keep], mid[keep]]), np.concatenate([mid[keep], b[keep]])
        coarse = np.concatenate([left[:, keep], right[:, keep]], axis=1)
    logger.debug(f"自适应积分达到最大二分深度，{idx.size} 个子区间按当前估计计入")
    for row in range(n_rows):
        np.add.at(total[row], idx, _gauss_legendre(fn, a, b, idx)[row])
    return total


def _window_interval(Y: np.ndarray, t0: np.ndarray, t1: np.ndarray, lam: float,
                     a: float, b: float):
    """
    X(s) = Y·e^{-λs} 在 [t0, t1] 内处于 [a, b] 的时间区间（已截断，可能为空）
    """
    if lam == 0.0:
        inside = (Y >= a) & (Y <= b)
        return np.where(inside, t0, t1), t1.copy()
    with np.errstate(divide='ignore', invalid='ignore'):
        r1 = a / Y
        r2 = b / Y
    u_lo = np.minimum(r1, r2)
    u_hi = np.maximum(r1, r2)
    s_start = np.where(u_hi > 0, -np.log(np.where(u_hi > 0, u_hi, 1.0)) / lam, np.inf)
    s_end = np.where(u_lo > 0, -np.log(np.where(u_lo > 0, u_lo, 1.0)) / lam, np.inf)
    zero = Y == 0.0
    if zero.any():
        inside = (a <= 0.0) & (b >= 0.0)
        s_start = np.where(zero, -np.inf if inside else np.inf, s_start)
        s_end = np.where(zero, np.inf, s_end)
    lo = np.clip(s_start, t0, t1)
    hi = np.clip(s_end, t0, t1)
    return lo, np.maximum(hi, lo)


class _Accumulator:
    """把 (神经元, Y, 区间) 对的积分累加到逐神经元数组"""

    def __init__(self, kernel: KernelSpec, h: float, x_star: float, lam: float,
                 weights: Sequence[WeightFunction], n: int):
        self.kernel = kernel
        self.h = h
        self.x_star = x_star
        self.lam = lam
        self.weights = list(weights)
        self.out = np.zeros((1 + len(self.weights), n))
        self.a = x_star - h * kernel.support
        self.b = x_star + h * kernel.support

    def _integrand(self, Y: np.ndarray):
        lam, h, x_star, kernel, weights = self.lam, self.h, self.x_star, self.kernel, self.weights

        def fn(points, idx):
            X = Y[idx, None] * np.exp(-lam * points)
            q = kernel((X - x_star) / h) / h
            rows = [q] + [q * g(X) for g in weights]
            return np.stack(rows)
        return fn

    def add(self, neurons: np.ndarray, Y: np.ndarray, t0: np.ndarray, t1: np.ndarray) -> None:
        if neurons.size == 0:
            return
        lo, hi = _window_interval(Y, t0, t1, self.lam, self.a, self.b)
        duration = hi - lo
        live = duration > 0
        if not live.any():
            return
        neurons, Y, lo, hi, duration = neurons[live], Y[live], lo[live], hi[live], duration[live]
        if self.kernel.is_rectangular:
            np.add.at(self.out[0], neurons, duration * float(self.kernel(0.0)) / self.h)
            if self.weights:
                inner = self._integrand(Y)
                extra = adaptive_gauss(
                    lambda p, i: inner(p, i)[1:], lo, hi, len(self.weights), scale=1.0 / self.h,
                )
                for row, values in enumerate(extra, start=1):
                    np.add.at(self.out[row], neurons, values)
            return
        values = adaptive_gauss(self._integrand(Y), lo, hi, self.out.shape[0], scale=1.0 / self.h)
        for row in range(self.out.shape[0]):
            np.add.at(self.out[row], neurons, values[row])


def _segment_bounds(traj: SystemTrajectory, t_end: float):
    keep = int(np.searchsorted(traj.times, t_end, side='right'))
    times = traj.times[:keep]
    starts = np.concatenate([[0.0], times])
    ends = np.concatenate([times, [t_end]])
    return keep, starts, ends


def _linear_contributions(traj: SystemTrajectory, kernel: KernelSpec, h: float, x_star: float,
                          t_end: float, mask: np.ndarray,
                          weights: Sequence[WeightFunction]) -> np.ndarray:
    model = traj.model
    n = model.n
    lam = float(model.drift.decay_rate)
    acc = _Accumulator(kernel, h, x_star, lam, weights, n)
    a, b = acc.a, acc.b

    E, seg_start, seg_end = _segment_bounds(traj, t_end)
    spikers = np.asarray(traj.spikers[:E])
    contrib = np.asarray(traj.jump_contributions[:E])
    S = np.asarray(traj.cumulative_contributions[:E + 1])
    A = np.full(n, float(model.x0))
    members = np.nonzero(mask)[0]

    for m0 in range(0, E + 1, SEGMENT_BLOCK_SIZE):
        m1 = min(m0 + SEGMENT_BLOCK_SIZE, E + 1)
        t0 = seg_start[m0:m1]
        t1 = seg_end[m0:m1]
        Sm = S[m0:m1]
        valid = t1 > t0
        e0 = np.exp(lam * t0)
        e1 = np.exp(lam * t1)
        y_lo = np.minimum(a * e0, a * e1)
        y_hi = np.maximum(b * e0, b * e1)

        block_spikers = spikers[m0:m1 - 1]
        dirty = np.intersect1d(block_spikers, members)
        clean = np.setdiff1d(members, dirty, assume_unique=True)

        # 区块内 A 不变的神经元：排序后按 Y 区间二分查找候选
        if clean.size:
            order = np.argsort(A[clean], kind='stable')
            sorted_ids = clean[order]
            sorted_A = A[sorted_ids]
            lo = np.searchsorted(sorted_A, y_lo - Sm, side='left')
            hi = np.searchsorted(sorted_A, y_hi - Sm, side='right')
            counts = np.where(valid, np.maximum(hi - lo, 0), 0)
            total = int(counts.sum())
            if total:
                seg = np.repeat(np.arange(m1 - m0), counts)
                offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
                neurons = sorted_ids[np.repeat(lo, counts) + offsets]
                acc.add(neurons, A[neurons] + Sm[seg], t0[seg], t1[seg])

        # 区块内自身放电的神经元：逐段累计自身贡献
        if dirty.size:
            position = {int(d): k for k, d in enumerate(dirty)}
            own = np.zeros((m1 - m0, dirty.size))
            for offset, (spiker, c) in enumerate(zip(block_spikers.tolist(),
                                                     contrib[m0:m1 - 1].tolist()), start=1):
                k = position.get(spiker)
                if k is not None:
                    own[offset, k] += c
            Y = A[dirty][None, :] - np.cumsum(own, axis=0) + Sm[:, None]
            hit = valid[:, None] & (Y >= y_lo[:, None]) & (Y <= y_hi[:, None])
            seg, col = np.nonzero(hit)
            acc.add(dirty[col], Y[seg, col], t0[seg], t1[seg])

        np.subtract.at(A, spikers[m0:m1], contrib[m0:m1])

    return acc.out


def _crossing_time(path, target: float, duration: float) -> float:
    return brentq(lambda s: path(s) - target, 0.0, duration, xtol=1e-14)


def _replay_contributions(traj: SystemTrajectory, kernel: KernelSpec, h: float, x_star: float,
                          t_end: float, mask: np.ndarray,
                          weights: Sequence[WeightFunction]) -> np.ndarray:
    model = traj.model
    drift = model.drift
    n = model.n
    rows = 1 + len(weights)
    out = np.zeros((rows, n))
    a = x_star - h * kernel.support
    b = x_star + h * kernel.support

    def integrand(path):
        def fn(s):
            x = path(s)
            q = float(kernel((x - x_star) / h)) / h
            return np.array([q] + [q * float(g(np.asarray(x))) for g in weights])
        return fn

    E, seg_start, seg_end = _segment_bounds(traj, t_end)
    X = np.full(n, float(model.x0))
    for m in range(E + 1):
        duration = float(seg_end[m] - seg_start[m])
        end = np.asarray(drift.propagate(X, duration), dtype=float) if duration > 0 else X
        if duration > 0:
            low = np.minimum(X, end)
            high = np.maximum(X, end)
            for i in np.nonzero(mask & (high >= a) & (low <= b))[0]:
                dense = drift.dense_flow(np.array([X[i]]), duration)
                path = lambda s, dense=dense: float(np.asarray(dense(s)).reshape(-1)[0])
                breaks = [0.0, duration]
                for level in (a, b):
                    if min(X[i], end[i]) < level < max(X[i], end[i]):
                        breaks.append(_crossing_time(path, level, duration))
                breaks.sort()
                fn = integrand(path)
                for lo, hi in zip(breaks[:-1], breaks[1:]):
                    if hi <= lo:
                        continue
                    centre = path(0.5 * (lo + hi))
                    if not a <= centre <= b:
                        continue
                    value, _ = integrate.quad_vec(fn, lo, hi, epsrel=SEGMENT_QUAD_TOLERANCE,
                                                  epsabs=1e-14)
                    out[:, i] += value
        if m < E:
            spiker = traj.spikers[m]
            X = end + traj.weights[m] / n
            X[spiker] = traj.pre_potentials[m]
    return out


def occupation_contributions(traj: SystemTrajectory, kernel: KernelSpec, h: float, x_star: float,
                             t_end: Optional[float] = None, mask: Optional[np.ndarray] = None,
                             weights: Sequence[WeightFunction] = (),
                             method: str = 'auto') -> np.ndarray:
    """
    逐神经元的核加权占据积分

    第 0 行为 ∫₀^{t_end} Q_h(X^i_s - x*) ds，第 k 行为 ∫ Q_h(X^i_s - x*)·g_k(X^i_s) ds；
    不在观测子集中的神经元贡献为 0

    :param traj: 轨迹
    :param kernel: 核函数
    :param h: 带宽
    :param x_star: 估计点
    :param t_end: 观测窗口终点（默认轨迹终止时刻）
    :param mask: 观测子集布尔掩码
    :param weights: 额外的权函数 g_k
    :param method: 'auto' | 'block'（线性漂移的分块交叉时刻算法）| 'replay'（逐段重放）
    :return: (1 + len(weights), N) 数组
    """
    n = traj.model.n
    T = traj.terminal_time if t_end is None else float(t_end)
    if not 0.0 <= T <= traj.terminal_time + 1e-12:
        raise ValueError(f"观测窗口 {T} 超出轨迹时长 {traj.terminal_time}")
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if method == 'auto':
        method = 'block' if traj.linear_closed_form else 'replay'
    if method == 'block':
        if not traj.linear_closed_form:
            raise ValueError("分块交叉时刻算法只适用于线性漂移")
        return _linear_contributions(traj, kernel, h, x_star, T, mask, weights)
    if method == 'replay':
        return _replay_contributions(traj, kernel, h, x_star, T, mask, weights)
    raise ValueError(f"未知的占据积分方法 method={method}")


def riemann_occupation(path: Callable[[np.ndarray], np.ndarray], kernel: KernelSpec, h: float,
                       x_star: float, t0: float, t1: float, step: float = 1e-6) -> float:
    """细网格中点 Riemann 和：∫_{t0}^{t1} Q_h(path(s) - x*) ds"""
    count = max(1, int(math.ceil((t1 - t0) / step)))
    edges = np.linspace(t0, t1, count + 1)
    total = 0.0
    for chunk in np.array_split(np.arange(count), max(1, count // 1_000_000)):
        mids = 0.5 * (edges[chunk] + edges[chunk + 1])
        total += float(np.sum(kernel((path(mids) - x_star) / h) / h * (edges[chunk + 1] - edges[chunk])))
    return total
