"""Learning aspect transition graphs of a manipulated object by intrinsically motivated exploration."""
from .config import ConfigError, ExperimentConfig, load_config
from .evaluation import GroundTruthModel, build_ground_truth, emit_curves, model_error, run_trials, welch_p
from .learner import LearnerConfig, LHSGrid, StepLog, ValueTable, run_baseline, run_learning
from .model import (
    GRASP,
    ORBIT,
    RELEASE,
    ActionEdge,
    ActionKind,
    AspectNode,
    ATGModel,
    Experience,
    Feature,
    GaussianDist,
    ParameterDomainError,
    StructureError,
)
from .observe import FeatureDetection, Observer
from .serialize import ModelFormatError, deserialize, export_dot, serialize
from .simworld import ARCubeWorld, SimConfig

__all__ = [name for name in dir() if not name.startswith("_")]
