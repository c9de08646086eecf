"""Complex band structures and wave dynamics of dissipative lattices.

The package splits into five parts:

- lattice: the potential V0*cos(2x) - i*G(x) with a Gaussian absorber comb,
  its Fourier coefficients, and the delta-comb limit.
- bloch: the truncated plane-wave eigenproblem, band scans, and the
  biorthogonality / mode-coalescence diagnostics.
- kronig_penney: the analytic dispersion relation of the delta-comb limit,
  its root solver, and the catalog of exactly nondecaying modes.
- propagation: split-step evolution of the (possibly cubic) wave equation
  on one cell or a multi-cell line, with norm and shape diagnostics.
- cli: the ``dislat`` command that reproduces the survey datasets.
"""

from .errors import ConfigurationError, NumericsError
from .lattice import (PERIOD, LatticeSpec, delta_comb_strength,
                      dissipation_fourier, dissipation_value,
                      potential_fourier, real_potential_value)
from .bloch import (BandStructure, BlochEigenpair, BlochOperator, band_scan,
                    biorthogonality_residual, build_operator,
                    default_truncation, eigenpairs, exceptional_indicator,
                    min_decay, wrap_quasimomentum)
from .kronig_penney import (BranchJumpWarning, KPRoot, NondecayingMode,
                            dispersion_residual, nondecaying_catalog,
                            periodic_part, plane_wave_sum, refine_root,
                            solve_mu)
from .propagation import (AccuracyWarning, BoundaryContaminationWarning,
                          EnvelopeFit, Grid, WaveField, WaveTrajectory,
                          carrier_envelope, cell_grid, evolve_cell,
                          evolve_line, fit_decay_rate, line_grid,
                          mean_position, mean_position_slope,
                          sech_envelope_fit, sech_pulse, soliton_amplitude,
                          soliton_integral, spectrum_peaks)

__all__ = [
    "ConfigurationError", "NumericsError",
    "PERIOD", "LatticeSpec", "delta_comb_strength", "dissipation_fourier",
    "dissipation_value", "potential_fourier", "real_potential_value",
    "BandStructure", "BlochEigenpair", "BlochOperator", "band_scan",
    "biorthogonality_residual", "build_operator", "default_truncation",
    "eigenpairs", "exceptional_indicator", "min_decay", "wrap_quasimomentum",
    "BranchJumpWarning", "KPRoot", "NondecayingMode", "dispersion_residual",
    "nondecaying_catalog", "periodic_part", "plane_wave_sum", "refine_root",
    "solve_mu",
    "AccuracyWarning", "BoundaryContaminationWarning", "EnvelopeFit", "Grid",
    "WaveField", "WaveTrajectory", "carrier_envelope", "cell_grid",
    "evolve_cell", "evolve_line", "fit_decay_rate", "line_grid",
    "mean_position", "mean_position_slope", "sech_envelope_fit", "sech_pulse",
    "soliton_amplitude", "soliton_integral", "spectrum_peaks",
]
