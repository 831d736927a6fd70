"""Linear-optics laboratory for superradiant forward scattering in thick absorbers.

Submodules
----------
specfun
    Bessel kernels J0, J1, J1(2 sqrt u)/sqrt u and scaled I0, I1.
core
    Impulse response, convolution propagator and closed-form outputs.
analysis
    Energies, decay fits, the x parameter and optical-depth sweeps.
afc
    Single-peak collective emission budget of atomic frequency combs.
slowlight
    Spectral-hole transfer functions, group delay and polarization channels.
"""

__version__ = "0.1.0"

from .errors import (BandwidthError, ConfigError, ConvergenceError, DomainError,  # noqa: E402
                     NonUniformGridError, PreconditionError, RegimeWarning, SfsError)
from .envelope import PulseEnvelope, TimeGrid  # noqa: E402
from .core import ExpReversedSpec, ResonantMedium  # noqa: E402

__all__ = [
    "__version__",
    "SfsError",
    "DomainError",
    "PreconditionError",
    "NonUniformGridError",
    "BandwidthError",
    "ConvergenceError",
    "ConfigError",
    "RegimeWarning",
    "TimeGrid",
    "PulseEnvelope",
    "ResonantMedium",
    "ExpReversedSpec",
]
