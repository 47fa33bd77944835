"""gramlab: kernel-methods toolkit.

Margin-loss classifiers over reproducing kernels, positive-semidefinite kernel
fitting from noisy squared dissimilarities (with out-of-sample embedding and
pair-holdout tuning), and manifold unrolling, plus sklearn-style estimator
wrappers and a CSV-emitting command line.
"""

from .classifiers import (
    ClassifierModel,
    KernelMarginClassifier,
    TrainingSet,
    classify,
    decision_from_gram_row,
    decision_value,
    fit,
    fit_l1,
    load_model,
    parse_model,
    probability_from_logit,
    save_model,
    serialize_model,
)
from .exceptions import (
    ConvergenceWarning,
    DisconnectedGraphWarning,
    InfeasibleEmbeddingError,
    NumericalError,
    SingularSystemError,
    TraceCapWarning,
    UnderdeterminedEmbeddingWarning,
)
from .experiments import (
    Figure2Result,
    ToyDataset,
    generate_swiss_roll,
    generate_toy,
    gibbs_overshoot,
    gibbs_seed_sweep,
    run_figure2,
)
from .kernels import (
    EigenSystem,
    Kernel,
    eigentruncate,
    gram,
    project_psd,
    pseudo_attributes,
    pseudo_inverse,
    read_matrix,
    squared_distance,
    squared_distances,
    truncate_rank,
    write_matrix,
)
from .losses import (
    MarginLoss,
    check_sign_consistency,
    evaluate,
    hinge,
    logistic,
    misclassification,
    population_minimizer,
    squared,
    subgradient,
)
from .rke import (
    KernelFromDissimilarities,
    NewbieEmbedding,
    RkeProblem,
    RkeSolution,
    cv2_tune,
    extend_kernel,
    fit_kernel,
    newbie_embed,
    newbie_predict,
)
from .unroll import KnnGraph, ManifoldUnroller, knn_graph, unroll, unrolled_embedding

__version__ = "0.1.0"

__all__ = [
    "ClassifierModel",
    "ConvergenceWarning",
    "DisconnectedGraphWarning",
    "EigenSystem",
    "Figure2Result",
    "InfeasibleEmbeddingError",
    "Kernel",
    "KernelFromDissimilarities",
    "KernelMarginClassifier",
    "KnnGraph",
    "ManifoldUnroller",
    "MarginLoss",
    "NewbieEmbedding",
    "NumericalError",
    "RkeProblem",
    "RkeSolution",
    "SingularSystemError",
    "ToyDataset",
    "TraceCapWarning",
    "TrainingSet",
    "UnderdeterminedEmbeddingWarning",
    "check_sign_consistency",
    "classify",
    "cv2_tune",
    "decision_from_gram_row",
    "decision_value",
    "eigentruncate",
    "evaluate",
    "extend_kernel",
    "fit",
    "fit_kernel",
    "fit_l1",
    "generate_swiss_roll",
    "generate_toy",
    "gibbs_overshoot",
    "gibbs_seed_sweep",
    "gram",
    "hinge",
    "knn_graph",
    "load_model",
    "logistic",
    "misclassification",
    "newbie_embed",
    "newbie_predict",
    "parse_model",
    "population_minimizer",
    "probability_from_logit",
    "project_psd",
    "pseudo_attributes",
    "pseudo_inverse",
    "read_matrix",
    "run_figure2",
    "save_model",
    "serialize_model",
    "squared",
    "squared_distance",
    "squared_distances",
    "subgradient",
    "truncate_rank",
    "unroll",
    "unrolled_embedding",
    "write_matrix",
]
