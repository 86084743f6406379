"""Ranging accuracy bounds of random data-bearing modulation waveforms.

The library quantifies how the choice of unitary modulation basis shapes
the achievable multi-target ranging accuracy when sensing reuses random
communication symbols: Monte Carlo estimation of the expected conditional
bound, its universal Jensen floor, closed-form second-order gaps between
frequency-localized and frequency-spread bases, and the local geometry of
the bound over the unitary group.
"""
from ._kernels import backend_name
from .analysis import (
    GapReport,
    GeodesicReport,
    SpreadScalingReport,
    eisl_gap,
    geodesic_derivatives,
    hessian_r2_closed,
    jensen_bound,
    pair_weights,
    second_order_gap,
    sigma_s_closed,
    spread_gap_lower_bound_check,
)
from .constellation import (
    AssumptionReport,
    Constellation,
    SymbolVector,
    by_name,
    kurtosis,
    make_psk,
    make_qam,
    sample_symbols,
    validate_assumptions,
)
from .errors import (
    ConfigError,
    DegenerateScenarioError,
    InapplicableBasisError,
    InfeasibleSeparationError,
    InvalidDimensionError,
    InvalidParameterError,
    LinalgDomainError,
    NoValidDrawsError,
    NotPSDError,
    SingularFimError,
    SingularMatrixError,
    UnsupportedConstellationError,
    WavecrbError,
)
from .fim import FimSample, ResolventTerms, conditional_crb, fim, fim_via_cn, resolvent
from .linalg import (
    RCOND_SINGULAR,
    HermitianEig,
    dft_matrix,
    exp_skew,
    hermitian_eig,
    inverse,
    psd_sqrt,
    rcond_estimate,
)
from .montecarlo import (
    CrbEstimate,
    PairedDelta,
    SweepRow,
    ZScalingReport,
    empirical_sigma_s,
    enumerate_crb,
    estimate_crb,
    snr_sweep,
    snr_sweep_paired,
    z_moment_scaling,
)
from .scenario import (
    Geometry,
    Scenario,
    SelectionMatrix,
    build_geometry,
    delay_operator,
    load_scenario,
    random_scenario,
    range_unit_factor,
    save_scenario,
    selection,
    steering,
    steering_derivative,
)
from .waveform import (
    GeodesicDirection,
    UnitaryBasis,
    alpha_spread,
    basis_afdm,
    basis_from_selector,
    basis_geodesic,
    basis_ofdm,
    basis_otfs,
    basis_sc,
    load_custom_basis,
    mixing_matrix,
    random_direction,
    random_unitary_basis,
    rms_bandwidth,
    save_custom_basis,
)

__version__ = "0.1.0"
