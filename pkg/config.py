"""
配置文件
统一管理模拟、估计与实验的默认参数
"""

# 工具版本与轨迹文件格式
TOOL_VERSION = "1.0.0"
TRAJECTORY_MAGIC = "MFNTRAJ"
TRAJECTORY_FORMAT_VERSION = 1
MANIFEST_VERSION = 1

# 输出目录（可被 MFN_OUTPUT_DIR 或 --out 覆盖）
DEFAULT_OUTPUT_DIR = "outputs"
OUTPUT_DIR_ENV_VAR = "MFN_OUTPUT_DIR"

# 模型层
DEFAULT_GRID_STEP = 1e-3
HOLDER_DERIVATIVE_TOLERANCE = 1e-6
KERNEL_QUADRATURE_TOLERANCE = 1e-10
DEFAULT_SWEEP_INTERVAL = (-3.0, 3.0)

# 极限流
DEFAULT_FLOW_TOLERANCE = 1e-9
FLOW_MAX_STEP = 0.01
EQUILIBRIUM_SCAN_STEP = 1e-3
EQUILIBRIUM_DEDUP_TOLERANCE = 1e-8
EQUILIBRIUM_TOUCH_TOLERANCE = 1e-10
ASSUMPTION2_ENDPOINT_MARGIN = 1e-12

# 模拟器
DEFAULT_EVENT_CAP = 10**8
DEFAULT_CHECKPOINT_INTERVAL = 0.1
BOUND_CHECK_TOLERANCE = 1e-12
RANDOM_BLOCK_SIZE = 8192
DRIFT_ODE_TOLERANCE = 1e-10
DEFAULT_PROBE_COUNT = 101
RECORD_LEVELS = ("events-only", "snapshots", "probed")

# 熄灭判定：安静窗口占 T 的比例，总速率阈值按神经元数缩放
DEFAULT_QUIET_FRACTION = 0.2
DEFAULT_RATE_EPSILON_PER_NEURON = 1e-6

# 估计器
DEFAULT_OMEGA_EPSILON = 0.1
SEGMENT_QUADRATURE_NODES = 32
SEGMENT_BLOCK_SIZE = 256
SEGMENT_QUAD_TOLERANCE = 1e-8
DECOMPOSITION_TOLERANCE = 1e-9

# 实验
DEFAULT_MAX_WORKERS = 4
FIG1_POINTS = [-0.6, -0.4, -0.2, 0.0, 0.2, 0.3, 0.4, 0.5, 0.6]
FIG3_POINTS = [0.2, 0.5, 0.7, 1.2, 1.7, 2.2]
FIG4_POINTS = [0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9]
PARTIAL_OBS_FRACTIONS = [2, 4, 20, 200]
FIG_BANDWIDTH_EXPONENT = 0.49
CLT_BANDWIDTH_EXPONENT = 0.45
RISK_N_VALUES = [500, 1000, 2000, 4000, 8000]
STRONG_APPROX_N_VALUES = [1000, 4000, 16000]
EXTINCTION_HORIZON = 40.0
NORMALITY_MC_SAMPLES = 999

# 内置模型参数：符号权重（抑制+兴奋）与两种纯兴奋性权重律
SIGNED_WEIGHTS_CONFIG = {
    "drift": {"kind": "linear-decay"},
    "rate": {"kind": "two-minus-gauss"},
    "weights": {"kind": "uniform", "a": -2.0, "b": 3.0},
    "n": 20000,
    "x0": -1.0,
    "horizon": 10.0,
    "kernel": {"shape": "rectangular", "order": 1},
}

EXCITATORY_METASTABLE_CONFIG = {
    "drift": {"kind": "linear-decay"},
    "rate": {"kind": "log1p"},
    "weights": {"kind": "uniform", "a": 0.0, "b": 4.0},
    "n": 20000,
    "x0": 0.1,
    "horizon": 10.0,
    "kernel": {"shape": "rectangular", "order": 1},
}

EXCITATORY_EXTINCTION_CONFIG = {
    "drift": {"kind": "linear-decay"},
    "rate": {"kind": "log1p"},
    "weights": {"kind": "uniform", "a": 0.0, "b": 1.0},
    "n": 20000,
    "x0": 1.0,
    "horizon": 10.0,
    "kernel": {"shape": "rectangular", "order": 1},
}
