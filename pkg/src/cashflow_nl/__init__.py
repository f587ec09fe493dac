"""Daily cash-flow diagnostics and cross-validated non-linearity testing."""

__version__ = "0.1.0"

from .cvtest import (
    CrossValidatedLinearityTest,
    CvConfig,
    CvErrorProfile,
    ImpactReport,
    Label,
    LabelReport,
    boxcox_impact_experiment,
    label_series,
    nse,
    outlier_impact_experiment,
    rolling_cv,
)
from .dataset import (
    CashFlowObservation,
    CashFlowSeries,
    DatasetError,
    SummaryStatistics,
    parse_dataset,
    poincare_pairs,
    read_dataset,
    summarize,
    write_dataset,
)
from .stattests import HypothesisTestResult
from .synth import SynthKind, SynthSpec, generate
from .transform import BoxCoxParams, BoxCoxTransformer, OutlierInterpolator

__all__ = [
    "BoxCoxParams",
    "BoxCoxTransformer",
    "CashFlowObservation",
    "CashFlowSeries",
    "CrossValidatedLinearityTest",
    "CvConfig",
    "CvErrorProfile",
    "DatasetError",
    "HypothesisTestResult",
    "ImpactReport",
    "Label",
    "LabelReport",
    "OutlierInterpolator",
    "SummaryStatistics",
    "SynthKind",
    "SynthSpec",
    "boxcox_impact_experiment",
    "generate",
    "label_series",
    "nse",
    "outlier_impact_experiment",
    "parse_dataset",
    "poincare_pairs",
    "read_dataset",
    "rolling_cv",
    "summarize",
    "write_dataset",
]
