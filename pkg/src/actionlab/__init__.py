"""actionlab: a numerical laboratory for inference over action space.

Densities of action states g(A; b, T | a) are built, composed through the
convolution law, tilted by maximum-entropy inference, and synthesized into
complex propagators with the unit-modulus character exp(i eta A). The
package verifies the identities this construction promises, at desk scale:
semigroup composition, unitarity on band-limited states, variance
additivity, resolution bounds, stationary-phase classical limits, the
emergent wave equation, and the lattice path-sum equivalence.
"""

from .calibration import SlitGeometry, action_difference, de_broglie, fringe_spacing, infer_eta
from .classical import (
    DiscretePath,
    action_number,
    classical_action_along,
    concentration_check,
    discrete_stationary_path,
    euler_lagrange_residual,
    stationary_midpoint,
)
from .composition import (
    CompositionReport,
    check_variance_additivity,
    compose_fields,
    compose_fields_translation_invariant,
    convolve_densities,
    iterate_short_time,
    levy_exponent,
)
from .density import (
    ActionDensity,
    EndpointDensityField,
    LagrangianSpec,
    classical_action,
    custom,
    delta_density,
    emergent_lagrangian,
    free_particle,
    gaussian_field,
    gaussian_short_time,
    grid_spike,
    harmonic,
    marginal_over_endpoints,
    mean_action,
    variance_action,
)
from .evolution import (
    EvolutionTrace,
    WaveFunction,
    apply_kernel,
    commutator_check,
    evolve,
    free_packet_exact,
    gaussian_integral_check,
    gaussian_packet,
    schrodinger_residual,
)
from .grids import ActionGrid, SpatialGrid, TimeStepping, build_action_grid, build_spatial_grid
from .inference import (
    MaxEntModel,
    cramer_rao_check,
    fisher_information,
    indistinguishability_ratio_diffusive,
    indistinguishability_ratio_fixed,
    maxent_tilt,
    solve_eta,
)
from .path_oracle import (
    LatticePathEnsemble,
    enumerate_paths,
    equivalence_check,
    histogram_g,
    path_sum_propagator,
)
from .propagator import (
    Character,
    Kernel,
    analytic_short_time,
    character_eval,
    completeness_check,
    compose_kernels,
    free_kernel,
    kernel_from_density,
    normalization_recursion_check,
)

__version__ = "0.1.0"
