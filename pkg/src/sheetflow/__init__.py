"""Boundary-integral simulation of axisymmetric vortex sheets with surface tension."""
import warnings as _warnings
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

# numba probes TBB first and warns when the installed version is too old;
# it then falls back to OpenMP or its own work queue, which is fine here.
_warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")
