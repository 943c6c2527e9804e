"""Single-image super-resolution by iterative back-projection with a
similarity-domain Wiener regularizer."""
import os

import numba

# try OpenMP before TBB: probing an outdated TBB prints a warning on every run
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


from wsdsr.errors import InvalidInputError
from wsdsr.config import GlobalParams, ParamSet, StageParams, defaults, load_overrides
from wsdsr.driver import Profile, iteration_count, super_resolve, super_resolve_color, tau_schedule
from wsdsr.image import MultiPlane, psnr
from wsdsr.wsd_filter import FilterState, wsd

__all__ = [
    "InvalidInputError",
    "GlobalParams",
    "ParamSet",
    "StageParams",
    "defaults",
    "load_overrides",
    "Profile",
    "iteration_count",
    "super_resolve",
    "super_resolve_color",
    "tau_schedule",
    "MultiPlane",
    "psnr",
    "FilterState",
    "wsd",
]
