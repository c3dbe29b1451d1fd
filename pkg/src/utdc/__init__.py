"""Calibration of classifier confidence on an unlabelled target domain."""

__version__ = "0.1.0"

from .accuracy import (  # noqa: E402
    AccuracyEstimate,
    GaussianSummary,
    MetaDatasetRecord,
    MetaRegression,
    atc_estimate,
    frechet_distance_sq,
    meta_estimate,
    meta_fit,
    oracle_estimate,
    summarize_features,
)
from .engine import (  # noqa: E402
    UtdcInputs,
    UtdcResult,
    bin_ratio_diagnostic,
    r_sweep,
    rescale_bin_accuracies,
    uda_ada_ece,
    utdc_fit,
)
from .grid import DEFAULT_GRID, TemperatureGrid  # noqa: E402
from .maps import (  # noqa: E402
    CalibrationMap,
    FitReport,
    apply_map,
    fit_matrix_scaling,
    fit_temperature_ada_ece,
    fit_temperature_nll,
    fit_vector_scaling,
)
from .metrics import (  # noqa: E402
    BinPartition,
    ConfidenceProfile,
    PredictionSet,
    ada_ece,
    brier,
    ece,
    nll,
    partition_equal_mass,
    partition_equal_width,
    profile,
    softmax,
)
from .synth import synth_generate  # noqa: E402
