"""Phase-space engine for the quantum canonical ensemble.

Thermal Wigner functions, partition functions and thermal averages for
one-degree-of-freedom (and quadratic N-DOF) Hamiltonians, computed by
classical, closed-form, short-time-corrected, normal-form and full
double-phase-space semiclassical methods, validated against an exact
finite-basis spectral oracle.
"""

from .averages import (
    AverageResult,
    Observable,
    PartitionResult,
    QuadratureSpec,
    double_beta_partition,
    energy_variance_and_heat_capacity,
    lopsided_energy,
    partition_weyl,
    sc_weyl_cloud,
    thermal_average,
    thermal_wigner_field,
    valid_methods,
)
from .closed_forms import (
    ThermalParams,
    auto_grid,
    classical_weight,
    coherent_observable,
    fock_wigner,
    ho_thermal,
    local_metaplectic_thermal,
    metaplectic_thermal,
    short_time_thermal,
)
from .double_dynamics import (
    DoubleState,
    DoubleTrajectory,
    IntegratorOptions,
    complex_consistency_check,
    integrate_double,
    integrate_double_batch,
    sc_weyl_batch,
    sc_weyl_thermal,
)
from .exceptions import (
    BasisSizeError,
    CausticError,
    DivergenceError,
    HyperbolicFormError,
    QuadratureError,
    ResolutionError,
    SingularHessianError,
    StiffnessError,
    ThermalWignerError,
    TruncationError,
    ValidityError,
)
from .fields import GridSpec, ThermalField, grid_integral
from .models import (
    Kerr,
    NormalForm,
    PolynomialPQ,
    Quadratic,
    centre_of_curvature,
    double_hamiltonian,
    eval_complex,
    eval_model,
    gradient,
    hessian,
    load_model,
    local_frequency,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .normal_form import (
    nf_jacobian,
    nf_midpoint_image,
    nf_real_action,
    nf_thermal_action,
    nf_thermal_weyl,
)
from .phase_space import (
    ChordCentrePair,
    apply_j,
    cayley_monodromy,
    symplectic_form,
    symplectic_matrix,
)
from .spectral import (
    SpectralDecomposition,
    diagonalize,
    jacobi_eigh,
    pure_state_wigner,
    spectral_average,
    spectral_heat_capacity,
    spectral_partition,
    spectral_thermal_wigner,
    spectral_weyl_exponential,
    wigner_point_values,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
