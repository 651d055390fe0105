"""Multi-task RGB-D scene analysis toolkit.

Dense semantic segmentation, bottom-up panoptic instance decoding,
per-instance orientation estimation and scene classification, built on
numpy with optional numba-accelerated kernels.
"""

from .accel import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
