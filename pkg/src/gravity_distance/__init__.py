"""Gravity-model estimation of the trade-distance elasticity.

Load a bilateral trade panel, build either gravity specification, fit it by
log-linear OLS or Poisson pseudo-maximum-likelihood, track the distance
coefficient year by year and relate it to oil prices.  A synthetic
data-generating process with planted coefficients validates the estimators.
"""

__version__ = "0.1.0"

from .dataset import (
    DataError,
    PairObservation,
    PanelDataset,
    bundled_tables,
    load_panel,
    pair_observations,
    write_panel,
)
from .design import DesignMatrix, ModelSpec, build_design, column_summary
from .dgp import DGPConfig, planted_coefficients, recovery_experiment, simulate_panel
from .estimators import (
    EstimationError,
    FitResult,
    InferenceTable,
    RankDeficiencyError,
    inference,
    ols_fit,
    ppml_fit,
    render_table,
    robust_covariance,
)
from .geodesy import GeoPoint, capital_distance, haversine_km, weighted_city_distance
from .harness import CoefficientSeries, run_cross_sections, series_summary
from .report import emit_chart_data, read_chart_data
from .sensitivity import WindowSpec, pearson, window_sensitivity
