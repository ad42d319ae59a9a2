"""Three-cavity Jaynes-Cummings STIRAP simulator.

Thin python layer over the C++ core: exact-diagonalization spectra,
semiclassical stationary points and Lyapunov exponents, OTOC series,
and real-time sweep diagnostics.
"""

from qstirap._core import (
    InvalidArgumentError,
    Model,
    ModelParams,
    NumericError,
    __version__,
    adiabatic_projection,
    basis_size,
    build_dark_state,
    diagonalize,
    efficiency_table,
    fit_growth,
    lyapunov_series,
    microcanonical_otoc,
    nearest_eigenstate,
    participation_number,
    pulse_values,
    single_particle_density,
    single_particle_purity,
    spectrum_energies,
    ssp_branch,
    sweep,
    thermal_otoc,
    track_route,
)

__all__ = [
    "InvalidArgumentError",
    "Model",
    "ModelParams",
    "NumericError",
    "__version__",
    "adiabatic_projection",
    "basis_size",
    "build_dark_state",
    "diagonalize",
    "efficiency_table",
    "fit_growth",
    "lyapunov_series",
    "microcanonical_otoc",
    "nearest_eigenstate",
    "participation_number",
    "pulse_values",
    "single_particle_density",
    "single_particle_purity",
    "spectrum_energies",
    "ssp_branch",
    "sweep",
    "thermal_otoc",
    "track_route",
]
