from .lorenz import Lorenz63Params, lorenz63_rhs, lorenz_range_measurement
from .nrho import (NrhoConfig, nrho_measurement, nrho_rhs, radial_rate, station_keeping_truth,
                   wrap_angle)
from .pineapple import pineapple_gmm

__all__ = [
    "Lorenz63Params",
    "NrhoConfig",
    "lorenz63_rhs",
    "lorenz_range_measurement",
    "nrho_measurement",
    "nrho_rhs",
    "pineapple_gmm",
    "radial_rate",
    "station_keeping_truth",
    "wrap_angle",
]
