"""Periodic-box pseudo-spectral solver and verification harness for 3D
Navier-Stokes/MHD with per-component anisotropic fractional hyper-dissipation.
"""

__version__ = "0.1.0"

from .indexsets import (
    MhdAssignment,
    NsAssignment,
    enumerate_good_mhd,
    enumerate_good_ns,
    explain_bad,
    is_bad_mhd,
    is_bad_ns,
    uniqueness_gates,
)
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    dealias,
    derivative,
    l2_norm,
    lambda_dir,
    lambda_full,
    leray_project,
    nonlinear_advection,
)
from .solver import (
    BlowupError,
    CflError,
    GateRefusalError,
    PhysParams,
    SimState,
    StepControl,
    dissipation_symbol,
    rhs_nonlinear,
    run,
    step_ifrk4,
)
from .norms import (
    MixedNormSpec,
    TrilinearForm,
    check_gn_interpolation,
    check_minkowski,
    check_sobolev_1d,
    check_trilinear,
    mixed_norm,
    run_lemma_suite,
)
from .diagnostics import (
    Accumulators,
    EnergyLedger,
    Recorder,
    energy_ledger,
    gronwall_rate_mhd,
    gronwall_rate_ns,
    regularity_report,
    twin_run,
)

__all__ = [name for name in dir() if not name.startswith("_")]
