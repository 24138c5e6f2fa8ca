"""Online multivariate changepoint detection on streaming time series.

The package combines a Bayesian run-length engine over conjugate Gaussian
models (independent dimensions or a joint covariance), a prediction-error
anomaly detector, margin-based F-score evaluation with grid search, and
synthetic benchmark generation with stable file formats.
"""

from .bench import BenchRow, run_cost_benchmark
from .conjugate import (
    NiwParams,
    NormalGammaParams,
    ng_posterior_predictive_logpdf,
    ng_update,
    niw_posterior_predictive_logpdf,
    niw_update,
)
from .data import (
    FixedSegmentLength,
    GeometricSegmentLength,
    LabeledStream,
    Observation,
    Stream,
    SyntheticSpec,
    generate,
    read_changepoints,
    read_detections,
    read_series,
    write_changepoints,
    write_detections,
    write_posterior_matrix,
    write_series,
)
from .engine import (
    BocdEngine,
    Detection,
    EngineRun,
    FactorizedModel,
    HazardSpec,
    MapTracker,
    MultivariateModel,
    RunLengthPosterior,
    StepResult,
    extract_max_prob,
    extract_threshold,
)
from .errors import (
    ChangepointError,
    ConfigError,
    DataFormatError,
    DataIOError,
    FitError,
    NumericError,
    ParameterError,
    ReplayError,
)
from .evaluate import (
    ChangepointSet,
    EvalReport,
    GridCell,
    GridResult,
    GridSpec,
    apply_delay,
    classical_f_score,
    eval_report_json,
    grid_search,
    margin_f_score,
)
from .predictive import (
    AnomalyScore,
    ExternalPredictor,
    LinearArPredictor,
    PersistencePredictor,
    PredictorSpec,
    WindowPair,
    anomaly_score,
    detect_by_threshold,
    fit_predictor,
    make_window_pairs,
    score_stream,
)
from .preprocess import SeriesStats, difference, standardize_apply, standardize_fit, standardize_invert

__version__ = "0.1.0"
