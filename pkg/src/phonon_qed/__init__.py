"""Qubit / bulk-acoustic-phonon simulation toolkit."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    MaterialConstants,
    ModeBasis,
    PhononMode,
    Picture,
    ResonatorGeometry,
    build_basis,
    coupling_strength,
    free_spectral_range,
    mode_frequency,
    mode_normalization,
)
from .dynamics import (  # noqa: F401
    AmplitudeState,
    LindbladConfig,
    NumericalError,
    QubitParams,
    RabiMap,
    amplitude_evolve,
    build_hamiltonian,
    lindblad_evolve,
    rabi_map,
)
from .protocols import (  # noqa: F401
    DecaySignal,
    FitModel,
    FitResult,
    SwapPulse,
    calibrate_swap,
    fit_decay,
    phonon_t1_signal,
    phonon_t2_signal,
    t1_vs_swap_amplitude,
)
