"""Semiparametric multivariate Matérn-type covariance models.

Marginal Matérn spectra are tied together by B-spline coherence functions;
covariances follow by a finite Hankel sum. The package covers likelihood
fitting, simulation, band-pass filtering, co-kriging and scoring, plus
closed-form reference models (independent, full bivariate and parsimonious
Matérn, linear model of coregionalization).
"""

from .bspline import KnotConfig, basis_eval, basis_matrix
from .covariance import (
    LMC,
    BivariateMatern,
    FactorizationError,
    IndependentMatern,
    ParsimoniousMatern,
    SemiparamModel,
    assemble_sigma,
    hankel_sum_cov,
    matern_cov,
    parsimonious_cross_cov,
    reference_cov,
)
from .dataset import SpatialDataset, read_csv, write_csv
from .inference import FitResult, ParamCodec, aic, fit, loglik
from .modelfile import model_from_dict, model_to_dict
from .predict import PredictiveDistribution, ScoreReport, cokrige, score
from .simulate import FrequencyBand, bandpass_filter, empirical_correlation, grid_locations, simulate_grf
from .spectral import FrequencyGrid, MarginalParams, SplineCoherenceSpec, matern_sdf
from .validity import check_validity

__version__ = "0.1.0"
