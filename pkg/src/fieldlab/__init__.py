"""fieldlab: spatial-field interpolation on regular grids.

Simulate Gaussian random fields under several covariance families, fill in
missing cells with ordinary kriging or with a mask-aware convolutional
network trained on the single observed field, score predictions with
point-wise and spatial-structure metrics, and reproduce benchmark tables
deterministically.
"""

from .covariance import (ALL_FAMILIES, STATIONARY_FAMILIES, AnisotropyField,
                         CovarianceModel, JitterEvent, LocalAnisotropy,
                         NonstationaryField, StationaryParams,
                         build_cov_matrix, cov_exponential,
                         cov_matrix_cholesky, cov_nonstationary,
                         cov_product_exp_wave, cov_wave, matern_correlation,
                         pairwise_cov, q_distance)
from .errors import (ConfigError, DivergenceError, FieldLabError, GraphError,
                     InsufficientDataError, MaskError, NonFiniteError,
                     NotPositiveDefiniteError, ParameterError, ReplayError,
                     ShapeError, SizeLimitError, SolverError,
                     UndefinedMetricError)
from .grid import (GridField, ObservationMask, PointObservation,
                   RasterizeResult, grid_locations, rasterize_points,
                   read_grid_csv, read_mask_csv, read_points_csv, sample_mask,
                   split_mask, write_grid_csv, write_mask_csv,
                   write_points_csv)
from .harness import (AggregateCell, ExperimentPlan, ResultRow, aggregate,
                      aggregate_table_md, format_mean_std, results_csv,
                      run_plan)
from .kriging import (KrigingPrediction, KrigingSystem, build_kriging_system,
                      ok_predict)
from .losses import (LAPLACIAN_KERNEL, distance_weight, gaussian_kernel,
                     gaussian_weights_1d, masked_mse, smoothness_loss,
                     weight_decay)
from .metrics import SpatialWeights, mae, mi_discrepancy, morans_i, rmse
from .network import (LossRecord, ModelParameters, TrainConfig, TrainReport,
                      UNetConfig, build_unet, forward, make_network_input,
                      train_single_field)
from .seeding import stable_seed
from .simulate import (MAX_SIM_CELLS, ParamFieldSpec, SimulationSpec,
                       make_param_fields, sample_composite, sample_grf)
from .viz import field_to_svg, save_svg

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "FieldLabError", "ParameterError", "ShapeError", "MaskError",
    "InsufficientDataError", "NotPositiveDefiniteError", "SolverError",
    "UndefinedMetricError", "SizeLimitError", "ConfigError",
    "DivergenceError", "GraphError", "NonFiniteError", "ReplayError",
    # grid
    "GridField", "ObservationMask", "PointObservation", "RasterizeResult",
    "grid_locations", "sample_mask", "split_mask", "rasterize_points",
    "read_grid_csv", "write_grid_csv", "read_mask_csv", "write_mask_csv",
    "read_points_csv", "write_points_csv",
    # covariance
    "StationaryParams", "LocalAnisotropy", "AnisotropyField",
    "NonstationaryField", "CovarianceModel", "JitterEvent",
    "STATIONARY_FAMILIES", "ALL_FAMILIES", "cov_exponential", "cov_wave",
    "cov_product_exp_wave", "matern_correlation", "q_distance",
    "cov_nonstationary", "pairwise_cov", "build_cov_matrix",
    "cov_matrix_cholesky",
    # simulation
    "SimulationSpec", "ParamFieldSpec", "MAX_SIM_CELLS", "sample_grf",
    "make_param_fields", "sample_composite",
    # kriging
    "KrigingSystem", "KrigingPrediction", "build_kriging_system", "ok_predict",
    # losses / network
    "LAPLACIAN_KERNEL", "masked_mse", "gaussian_weights_1d", "gaussian_kernel",
    "smoothness_loss", "distance_weight", "weight_decay",
    "UNetConfig", "ModelParameters", "build_unet", "forward",
    "make_network_input", "TrainConfig", "LossRecord", "TrainReport",
    "train_single_field",
    # metrics
    "SpatialWeights", "rmse", "mae", "morans_i", "mi_discrepancy",
    # harness
    "ExperimentPlan", "ResultRow", "AggregateCell", "run_plan", "aggregate",
    "format_mean_std", "results_csv", "aggregate_table_md",
    # seeding / viz
    "stable_seed", "field_to_svg", "save_svg",
]
