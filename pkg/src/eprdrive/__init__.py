"""Two parametrically driven modes in a common heat bath.

Exact Gaussian propagation of the discretized system+reservoir model,
entanglement measures on the reduced two-mode state, and gradient-based
optimization of the local drive pulses.
"""

from .gaussian import (
    CovarianceMatrix,
    det_gamma,
    log_negativity,
    neg_log_nu,
    partial_transpose,
    symplectic_eigenvalues,
    symplectic_form,
    two_mode_nu_oracle,
    two_mode_squeezed_cov,
    vacuum_cov,
    wigner_grid,
)
from .exceptions import (
    ConfigurationError,
    EprdriveError,
    InvalidStateError,
    PropagationError,
    UsageError,
)

__all__ = [
    "CovarianceMatrix",
    "det_gamma",
    "log_negativity",
    "neg_log_nu",
    "partial_transpose",
    "symplectic_eigenvalues",
    "symplectic_form",
    "two_mode_nu_oracle",
    "two_mode_squeezed_cov",
    "vacuum_cov",
    "wigner_grid",
    "ConfigurationError",
    "EprdriveError",
    "InvalidStateError",
    "PropagationError",
    "UsageError",
]

__version__ = "0.1.0"
