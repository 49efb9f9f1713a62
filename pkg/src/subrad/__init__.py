"""Simulation and inference toolkit for radiatively coupled two-level
emitters with vibrational branching: dressed-state spectroscopy, collective
decay, second-order correlations, saturation spectra, and parameter fits."""

from .model import (ANGULAR_MHZ_NS, COUPLING_CONST_MHZ, DegenerateGeometryError,
                    DressedStates, DriveParams, EmitterParams, MediumParams,
                    ModelError, SystemModel, collective_decay, dipole_coupling,
                    eigenmodes, greens_decay_factor)
from .lindblad import (CapacityError, DensityOperator, IntegrationError,
                       Liouvillian, NonUniqueSteadyStateError, SteadyStateError,
                       build_liouvillian, emission_rate, lowering_ops,
                       propagate, regression_correlation, steady_state)
from .traces import CorrelationTrace, Peak, PeakSet, SpectrumTrace
from .peaks import PeakFitError, lorentzian_sum, peak_fit
from .observables import (ExtinctionPoint, LifetimeTrace, NormalizationError,
                          ResonanceEstimate, SaturationStep,
                          baseline_resonance_probability, excitation_spectrum,
                          extinction_ratio_curve, g2_curve, lifetime_trace,
                          rabi_for_saturation, saturation_parameter,
                          saturation_series)
from .inference import (DataSegment, FitInputError, FitProblem, FitResult,
                        ProfilePoint, fit, forward, profile_scan,
                        synthesize_data)

__version__ = "0.1.0"
