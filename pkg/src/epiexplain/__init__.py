"""R_t estimation from confirmed-case counts and explainable ranking of control measures."""

from .dataset import FEATURES, MEASURES
from .explain import ShapleyExplainer, ecpi_explain, shapley_exact, top_k
from .models import evaluate, predict, train_ecpi, train_forest
from .rt_core import estimate_rt, mean_filter, new_cases_from_cumulative, simulate_cases
from .serial_interval import discretize, gamma_cdf, gamma_from_mean_sd, serial_interval

__version__ = "0.1.0"
