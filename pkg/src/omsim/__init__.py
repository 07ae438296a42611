"""Membrane-in-the-middle optomechanics at large oscillation amplitude.

Classical limit cycles and attractor sweeps, plus Gaussian entanglement of
the fluctuations around them.
"""
__version__ = "0.1.0"

from omsim.model import (  # noqa: E402
    ModeParity,
    ParameterError,
    PhysicalConstants,
    SystemParams,
    check_single_mode_validity,
    derive_scales,
    detuning,
    mode_frequency_jet,
)
from omsim.dynamics import (  # noqa: E402
    ClassicalState,
    IntegrationConfig,
    IntegrationError,
    Trajectory,
    clamped_cavity_steady_state,
    classical_rhs,
    rk4_step,
    simulate,
)
from omsim.attractors import (  # noqa: E402
    AttractorRecord,
    CycleStats,
    RunPolicy,
    cluster_amplitudes,
    detect_resonance_peaks,
    extract_cycle_stats,
    phase_space_amplitude,
    run_to_attractor,
    sweep_attractors,
)
from omsim.covariance import (  # noqa: E402
    PhysicalityError,
    assemble_drift,
    cosimulate,
    covariance_rhs,
    initial_covariance,
    log_negativity,
    symplectic_eigenvalues,
    tmsv_covariance,
)
from omsim.kernels import BACKEND  # noqa: E402
