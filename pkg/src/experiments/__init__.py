"""
实验模块
"""

from .acceptance_checker import AcceptanceChecker, CheckResult
from .harness import (
    EXPERIMENT_NAMES,
    ExperimentPlan,
    ExperimentResult,
    RiskCurve,
    clt_study,
    default_plan,
    extinction_study,
    occupation_limit_study,
    reproduce_fig1,
    reproduce_fig3_fig4,
    reproduce_partial_obs,
    risk_curve,
    run_experiment,
    strong_approx_study,
)
from .replica_runner import ReplicaRunner, replica_seed

__all__ = [
    'AcceptanceChecker',
    'CheckResult',
    'EXPERIMENT_NAMES',
    'ExperimentPlan',
    'ExperimentResult',
    'ReplicaRunner',
    'RiskCurve',
    'clt_study',
    'default_plan',
    'extinction_study',
    'occupation_limit_study',
    'replica_seed',
    'reproduce_fig1',
    'reproduce_fig3_fig4',
    'reproduce_partial_obs',
    'risk_curve',
    'run_experiment',
    'strong_approx_study',
]
