"""Minimax deviation strategies for finite statistical models with learning data."""

__version__ = "0.1.0"

from .model import (
    FiniteObject,
    LearningData,
    LossMatrix,
    ModelSpecError,
    ScalingProfile,
    SizeError,
    Strategy,
    emit_model_spec,
    iid_product,
    load_model_spec,
    parse_model_spec,
    validate_object,
)
from .optimize import SolveReport, SolverConfig, grid_oracle, maximize_on_simplex, project_to_simplex
from .risk import (
    RiskModel,
    bayes_strategy,
    model_bayes_risk,
    risk,
    risk_curve,
    weighted_bayes_value,
)
from .strategies import (
    improperness_test,
    minimax_strategy,
    mindev_strategy,
    ml_strategy,
    scaled_minimax_strategy,
)

__all__ = [
    "FiniteObject", "LearningData", "LossMatrix", "ModelSpecError", "ScalingProfile",
    "SizeError", "Strategy", "emit_model_spec", "iid_product", "load_model_spec",
    "parse_model_spec", "validate_object", "SolveReport", "SolverConfig", "grid_oracle",
    "maximize_on_simplex", "project_to_simplex", "RiskModel", "bayes_strategy",
    "model_bayes_risk", "risk", "risk_curve", "weighted_bayes_value", "improperness_test",
    "minimax_strategy", "mindev_strategy", "ml_strategy", "scaled_minimax_strategy",
]
