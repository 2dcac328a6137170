"""Dropout / marginalized-corruption training for linear classifiers."""

from .augmentation import (
    ExampleMoments,
    HingeConfig,
    LogisticConfig,
    collapsed_hinge_objective,
    collapsed_logistic_objective,
    gamma_hinge,
    gamma_logistic,
    hinge_moments,
    logistic_moments,
    surrogate_hinge_objective,
)
from .data import (
    AugmentedView,
    Dataset,
    MulticlassDataset,
    SparseVector,
    SvmlightParseError,
    augment_with_offset,
    parse_svmlight,
    predict,
    serialize_svmlight,
)
from .evaluation import (
    DeletionSchedule,
    EvalResult,
    GridSpec,
    cross_validate,
    delete_features,
    evaluate,
    nightmare_curve,
)
from .noise import CorruptionMoments, MatrixMoments, NoiseSpec, moments, sample
from .trainers import (
    IRLSState,
    OvaModel,
    TrainReport,
    train_dropout_logistic,
    train_dropout_svm,
    train_explicit_corruption,
    train_mcf_quadratic,
    train_one_vs_all,
)
from .wls import (
    ModelParams,
    NumericalError,
    WlsProblem,
    solve_closed_form,
    solve_quasi_newton,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
