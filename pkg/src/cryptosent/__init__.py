"""Sentiment/market co-movement, spillover and forecasting toolkit."""

from .errors import ComputationError, ConvergenceError, CryptosentError, InputError
from .panel import SeriesPanel, TransformSpec, align_and_complete, compute_return, load_panel, volume_change
from .sentiment import SentimentIndexSeries, SentimentRecord, aggregate_tsi, merge_sentiment
from .diagnostics import AdfResult, JbResult, adf_test, jarque_bera, select_lag
from .var import VarModel, fit_var, ma_coefficients, spectral_radius
from .garch import DccFit, GarchParams, conditional_covariances, fit_dcc, fit_garch11
from .connectedness import ConnectednessTable, directional_measures, dynamic_connectedness, gfevd
from .multiscale import WaveletDecomposition, count_peaks, modwt, rolling_corr, sweep
from .topics import Corpus, TopicModel, kmeans, lda_gibbs, pca2, preprocess, select_k, tfidf
from .forecast import ForecastReport, Scenario, SplitSpec, evaluate, fit_predict, make_features, scenario_matrix, split

__version__ = "0.1.0"

__all__ = [
    "AdfResult",
    "ComputationError",
    "ConnectednessTable",
    "ConvergenceError",
    "Corpus",
    "CryptosentError",
    "DccFit",
    "ForecastReport",
    "GarchParams",
    "InputError",
    "JbResult",
    "Scenario",
    "SentimentIndexSeries",
    "SentimentRecord",
    "SeriesPanel",
    "SplitSpec",
    "TopicModel",
    "TransformSpec",
    "VarModel",
    "WaveletDecomposition",
    "adf_test",
    "aggregate_tsi",
    "align_and_complete",
    "compute_return",
    "conditional_covariances",
    "count_peaks",
    "directional_measures",
    "dynamic_connectedness",
    "evaluate",
    "fit_dcc",
    "fit_garch11",
    "fit_predict",
    "fit_var",
    "gfevd",
    "jarque_bera",
    "kmeans",
    "lda_gibbs",
    "load_panel",
    "ma_coefficients",
    "make_features",
    "merge_sentiment",
    "modwt",
    "pca2",
    "preprocess",
    "rolling_corr",
    "scenario_matrix",
    "select_k",
    "select_lag",
    "spectral_radius",
    "split",
    "sweep",
    "tfidf",
    "volume_change",
    "__version__",
]
