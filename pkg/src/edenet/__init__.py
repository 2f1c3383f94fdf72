"""Semi-supervised anomaly detection with encoder-decoder-encoder
ensembles and meta-learned ensemble sizing."""

from .data import (
    ANOMALY,
    NORMAL,
    Dataset,
    Schema,
    SchemaColumn,
    apply_scale,
    fit_scale,
    generate_synthetic,
    load_csv,
    load_schema,
    save_schema,
    split_normal_train,
    write_csv,
)
from .ensemble import (
    EnsembleModel,
    SampleWeights,
    TrainConfig,
    ensemble_score,
    init_ensemble,
    train_ensemble,
    update_sample_weights,
)
from .errors import (
    ConfigError,
    CsvParseError,
    DegenerateWeightsError,
    FitError,
    FormatError,
    NotFittedError,
    SchemaError,
    ShapeError,
    TrainingDivergedError,
    UndefinedAurocError,
)
from .metalearn import (
    MetaFeatures,
    MetaRecord,
    MetaTask,
    build_meta_dataset,
    extract_meta_features,
    pearson_skewness,
    select_hyperparams,
    svr_fit,
    svr_predict,
)
from .metrics import EvalReport, auroc, confusion_metrics, evaluate, threshold_top_q
from .model import (
    ArchSpec,
    EdeNet,
    ScoreVector,
    anomaly_score,
    combined_loss,
    encoding_loss,
    make_arch,
    normalize_scores,
    reconstruction_loss,
)
from .modelfile import load_model, save_model
from .svr import SvrModel, fit_svr, load_svr, predict_svr, save_svr

__version__ = "0.1.0"

__all__ = [
    "ANOMALY",
    "NORMAL",
    "ArchSpec",
    "ConfigError",
    "CsvParseError",
    "Dataset",
    "DegenerateWeightsError",
    "EdeNet",
    "EnsembleModel",
    "EvalReport",
    "FitError",
    "FormatError",
    "MetaFeatures",
    "MetaRecord",
    "MetaTask",
    "NotFittedError",
    "SampleWeights",
    "Schema",
    "SchemaColumn",
    "SchemaError",
    "ScoreVector",
    "ShapeError",
    "SvrModel",
    "TrainConfig",
    "TrainingDivergedError",
    "UndefinedAurocError",
    "anomaly_score",
    "apply_scale",
    "auroc",
    "build_meta_dataset",
    "combined_loss",
    "confusion_metrics",
    "encoding_loss",
    "ensemble_score",
    "evaluate",
    "extract_meta_features",
    "fit_scale",
    "fit_svr",
    "generate_synthetic",
    "init_ensemble",
    "load_csv",
    "load_model",
    "load_schema",
    "load_svr",
    "make_arch",
    "normalize_scores",
    "pearson_skewness",
    "predict_svr",
    "reconstruction_loss",
    "save_model",
    "save_schema",
    "save_svr",
    "select_hyperparams",
    "split_normal_train",
    "svr_fit",
    "svr_predict",
    "threshold_top_q",
    "train_ensemble",
    "update_sample_weights",
    "write_csv",
]
