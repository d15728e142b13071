"""Causal autoencoder toolkit.

Estimates the distribution over the four causal populations (responder,
doomed, survivor, anti-responder) with an autoencoder whose latent layer
is gated by treatment/outcome constraints, plus T-learner baselines,
uplift/PEHE evaluation, and synthetic data tooling.
"""

from .baselines import LogisticConfig, MlpConfig, TLearner, predict_ite, train_t_learner
from .data import (
    Dataset,
    GeneratorConfig,
    Standardizer,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    standardize,
)
from .exceptions import CausalAeError, ConfigurationError, EvaluationError, OverlapWarning
from .metrics import (
    UpliftCurve,
    WilcoxonResult,
    auuc,
    group_lift_curve,
    pehe,
    population_accuracy,
    wilcoxon_signed_rank,
)
from .model import (
    CaeConfig,
    CausalAutoencoder,
    TrainReport,
    encode_population_distribution,
    encode_population_distributions,
    estimate_cate,
    estimate_cates,
    init_model,
    predict_counterfactual,
    predict_population,
    predict_populations,
    train,
)
from .populations import (
    CausalPopulation,
    LatentLayout,
    Mask,
    admissible_populations,
    apply_mask,
    build_mask,
)
from .store import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "CausalAeError",
    "CaeConfig",
    "CausalAutoencoder",
    "CausalPopulation",
    "ConfigurationError",
    "Dataset",
    "EvaluationError",
    "GeneratorConfig",
    "LatentLayout",
    "LogisticConfig",
    "Mask",
    "MlpConfig",
    "OverlapWarning",
    "Standardizer",
    "TLearner",
    "TrainReport",
    "UpliftCurve",
    "WilcoxonResult",
    "admissible_populations",
    "apply_mask",
    "auuc",
    "build_mask",
    "encode_population_distribution",
    "encode_population_distributions",
    "estimate_cate",
    "estimate_cates",
    "generate_synthetic",
    "group_lift_curve",
    "init_model",
    "load_csv",
    "load_model",
    "pehe",
    "population_accuracy",
    "predict_counterfactual",
    "predict_ite",
    "predict_population",
    "predict_populations",
    "save_csv",
    "save_model",
    "split",
    "standardize",
    "train",
    "train_t_learner",
    "wilcoxon_signed_rank",
]
