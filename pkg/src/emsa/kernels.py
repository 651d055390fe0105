"""Kernel dispatch.

Re-exports the kernel set from the backend selected in :mod:`emsa.accel`.
Both backend modules stay importable individually so tests and benchmarks
can compare them directly.
"""

from . import accel

if accel.USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl

conv2d_core = _impl.conv2d_core
depthwise3x3_core = _impl.depthwise3x3_core
maxpool_core = _impl.maxpool_core
avgpool_core = _impl.avgpool_core
window_max_core = _impl.window_max_core
render_gaussian_max = _impl.render_gaussian_max
assign_pixels_core = _impl.assign_pixels_core

__all__ = [
    "conv2d_core",
    "depthwise3x3_core",
    "maxpool_core",
    "avgpool_core",
    "window_max_core",
    "render_gaussian_max",
    "assign_pixels_core",
]
