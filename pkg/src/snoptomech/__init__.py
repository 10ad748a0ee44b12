"""Conditional quantum dynamics of gravitationally coupled optomechanics.

Library + CLI computing measurement-conditioned dynamics of
optomechanical test masses whose gravity is sourced either by conditional
expectation values (semiclassical, state-dependent potential) or by
operators, in both pictures: stochastic trajectories with Riccati/Kalman
filtering, and frequency-domain output statistics via Wiener-Hopf
spectral factorization, with covariance blocks and logarithmic
negativity of the outgoing light.
"""

__version__ = "0.1.0"

from .params import (Bath, ParameterError, PhysicalParams, Protocol, Theory,
                     WorkingParams, derive_working_params, load_physical_params,
                     physical_params_from_dict)
from .riccati import (ConditionalMoments, MomentsError, integrate_to_steady,
                      measurement_rate, riccati_rhs, riccati_step, steady_moments,
                      suggested_dt)
from .factorization import (RealRootRegimeError, SpectralRoots, phi_minus, phi_plus,
                            quartic_coefficients, roots_for, spectral_roots,
                            spectral_roots_numeric)
from .filters import (anticausal_mass, decay_rate, filter_time_domain,
                      filter_time_domain_ft, kalman_filter, mutual_filters,
                      oscillation_frequency, record_numerator, wiener_filter)
from .spectra import (CovarianceBlocks, chi_q, covariance_mutual, covariance_self,
                      mutual_output_transfer, qg_mutual_linear_solve, spectrum_self,
                      quantum_record_spectrum, transfer_self)
from .entanglement import (NegativityError, NegativityResult, log_negativity,
                           negativity_spectrum, negativity_symplectic)
from .trajectories import (MeasurementRecord, TrajectoryState, ensemble_spectrum,
                           initial_state, simulate_record, trajectory_step_mutual,
                           trajectory_step_self)
from .welch import (SegmentPolicy, SpectrumEstimate, SpectrumEstimateError,
                    WelchAccumulator, estimate_cross_spectrum, estimate_spectrum)
from .grids import GridSpec, default_grid, parse_grid_arg
from .verify import VerificationReport, run_verification
