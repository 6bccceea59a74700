"""Postselected quantum metrology under depolarizing noise.

QFIM machinery for pure, mixed, and filtered states; the lossless-compression
filter families with validity checks; closed-form information amplification
and compression efficiency under pre/post-filter noise; and the two regime
optimizers, all cross-checked against independent numerical oracles.
"""

__version__ = "0.1.0"

from .analysis import (
    AmplificationReport,
    NoiseGeometry,
    RatioReport,
    StateFamily,
    amplification_noisy_closed,
    amplification_numeric,
    amplification_t_closed,
    efficiency_noisy_closed,
    family_from_model,
    family_from_state,
    max_amplification,
    max_amplification_limit,
    max_amplification_vs_noiseless,
    noisy_information_prefactor,
    t_pp_squared,
)
from .core import (
    DerivativeDecomposition,
    ParameterizedModel,
    UsefulSubspace,
    decompose_derivative,
    depolarize,
    derivative_state,
    derivative_states,
    evolve,
    load_model,
    model_density,
    noise_after_ps_state,
    noise_before_ps_state,
    postselect,
    pure_density,
    random_model,
    save_model,
    useful_subspace,
)
from .errors import (
    DegenerateRegimeError,
    InvalidFilterError,
    InvalidInputError,
    PostselectionError,
    PsfilterError,
    SingularQFIMError,
)
from .filters import (
    DiagonalFilterParams,
    Filter,
    QubitFilterParams,
    diagonal_family_filter,
    jal_filter,
    load_filter,
    naive_filter,
    offdiag_qutrit_filter,
    optimal_noiseless_filter,
    qubit_filter,
    save_filter,
)
from .fisher import (
    classical_fim,
    crb,
    qfim_mixed,
    qfim_pure,
    qfim_pure_postselected,
    qfim_reduced,
    sld,
)
from .optimize import (
    FilterCategory,
    RegimeSolution,
    brute_force_filter_search,
    grid_max_amplification,
    grid_max_efficiency,
    optimize_ds,
    optimize_pp,
    optimum_path,
    p_star,
)
