"""geomgate: path-optimized nonadiabatic geometric gates on transmon qubits.

Pulse synthesis for geometric single-qubit gates built from longitude/latitude
loops on the Bloch sphere, robustness analysis against coherent drive and
detuning errors, three-level open-system simulation with DRAG correction, and
a parametrically modulated two-transmon control-phase gate.
"""

from .errors import NumericalFailure, ValidationError

__version__ = "0.1.0"

__all__ = ["NumericalFailure", "ValidationError", "__version__"]
