"""
核心模块
- model: 漂移、跳跃率、权重律、核函数与 Hölder 类
- flow: 极限 ODE、流的反函数与平衡点
- simulator: 精确稀疏化模拟与轨迹查询
- estimator: 核估计器与诊断量
- trajectory_store: 轨迹文件存储
"""

from .errors import (
    AmbiguousSpikerError,
    DecompositionMismatchError,
    DegenerateEstimateError,
    EventCapExceeded,
    FlowDomainError,
    KernelError,
    MeanFieldError,
    ModelConfigError,
    StepSizeUnderflowError,
    ThinningBoundViolation,
    TrajectoryFormatError,
)
from .model import DriftSpec, KernelSpec, ModelSpec, RateSpec, WeightLaw, build_kernel, evaluate_big_F
from .flow import FlowSolution, find_equilibria, invert_flow, solve_limit_ode
from .simulator import SystemTrajectory, detect_extinction, potential_at, simulate, states_at
from .estimator import EstimateReport, EstimatorConfig, estimate_batch, estimate_rate
from .trajectory_store import TrajectoryStore, load_trajectory, save_trajectory

__all__ = [
    'AmbiguousSpikerError', 'DecompositionMismatchError', 'DegenerateEstimateError',
    'EventCapExceeded', 'FlowDomainError', 'KernelError', 'MeanFieldError', 'ModelConfigError',
    'StepSizeUnderflowError', 'ThinningBoundViolation', 'TrajectoryFormatError',
    'DriftSpec', 'KernelSpec', 'ModelSpec', 'RateSpec', 'WeightLaw', 'build_kernel', 'evaluate_big_F',
    'FlowSolution', 'find_equilibria', 'invert_flow', 'solve_limit_ode',
    'SystemTrajectory', 'detect_extinction', 'potential_at', 'simulate', 'states_at',
    'EstimateReport', 'EstimatorConfig', 'estimate_batch', 'estimate_rate',
    'TrajectoryStore', 'load_trajectory', 'save_trajectory',
]
