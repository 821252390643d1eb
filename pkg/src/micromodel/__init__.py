"""Microscopic bosonic-bath models for time-local master equations with positive rates."""

from .bath import (CorrelationFunction, correlation_closed_form, correlation_numeric, delta_diagnostics,
                   khalfin_asymptotic, remainder_numeric, spectral_density)
from .core import (NumericalError, Tolerances, Trajectory, ValidationError, choi_of,
                   is_completely_positive, propagate_ode, trace_distance, unvec, vec)
from .exact import (compare_exact_vs_master, discretize, jaynes_cummings_oracle,
                    solve_single_excitation)
from .lindblad import check_cp_divisibility, gksl_generator, propagator, solve_lindblad
from .model import (BathSpec, ChannelSpec, ModelSpec, OperatorSchedule, dressed_coupling, parse_model,
                    serialize_model, validate_scales)
from .redfield import (compare_to_lindblad, interaction_picture_coupling, memory_coefficient,
                       solve_redfield, system_propagator)

__version__ = "0.1.0"
