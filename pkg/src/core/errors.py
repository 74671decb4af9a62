"""
领域异常定义
"""


class MeanFieldError(Exception):
    """所有领域异常的基类"""


class ModelConfigError(MeanFieldError, ValueError):
    """模型或配置违反不变量"""


class KernelError(MeanFieldError, ValueError):
    """核函数无效"""


class FlowDomainError(MeanFieldError, ValueError):
    """极限流定义域错误（Assumption 2 不成立）"""


class StepSizeUnderflowError(MeanFieldError, RuntimeError):
    """ODE 步长下溢"""

    def __init__(self, message: str, failing_time: float):
        super().__init__(f"{message} (t={failing_time:.6g})")
        self.failing_time = failing_time


class ThinningBoundViolation(MeanFieldError, RuntimeError):
    """稀疏化上界被突破"""

    def __init__(self, message: str, state: dict):
        super().__init__(message)
        self.state = state


class EventCapExceeded(MeanFieldError, RuntimeError):
    """事件数超过上限"""


class AmbiguousSpikerError(MeanFieldError, ValueError):
    """无法唯一识别放电神经元"""


class DegenerateEstimateError(MeanFieldError, ValueError):
    """估计量或其渐近方差退化"""


class DecompositionMismatchError(MeanFieldError, ArithmeticError):
    """误差分解恒等式不成立"""


class TrajectoryFormatError(MeanFieldError, ValueError):
    """轨迹文件格式或版本不符"""
