"""Special transmission eigenvalues of the radial variable-speed wave
equation and the radial Schrodinger equation: forward computation with
multiplicities, zero-product reconstruction, and inverse profile recovery."""

__version__ = "0.1.0"

from .dispersion import (
    DispersionEvaluator,
    DispersionValue,
    MaclaurinData,
    constant_potential_evaluator,
    constant_rho_evaluator,
    dispersion_evaluator,
    eval_D,
    eval_D_constant_rho,
    eval_D_schrodinger,
    maclaurin,
    maclaurin_schrodinger,
)
from .factorization import (
    SpectralData,
    TailModel,
    reconstruct_D,
    sample_dphi_grid,
    sample_phi_grid,
    spectral_data_evaluator,
    sum_rule_check,
    xi_eval,
)
from .inversion import (
    InversionProblem,
    InversionResult,
    ParamFamily,
    Parametrization,
    TargetSpec,
    extract_two_spectra,
    fit_profile,
    infer_travel_time,
)
from .profiles import (
    CubicPiece,
    LiouvilleImage,
    Profile,
    ProfileKind,
    Regime,
    classify_regime,
    liouville_transform,
    moments,
    travel_time,
)
from .shooting import (
    BatchTraces,
    EnvelopeReport,
    EquationKind,
    ShootingTrace,
    envelope_check,
    shoot_batch,
    shoot_schrodinger,
    shoot_wave,
)
from .spectra import (
    ContourBox,
    EigenvalueKind,
    EigenvalueRecord,
    asymptotic_lattice,
    count_zeros,
    dirichlet_neumann_spectrum,
    dirichlet_spectrum,
    find_eigenvalues,
    polish_root,
    records_from_csv,
    records_to_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
