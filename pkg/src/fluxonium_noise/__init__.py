"""Decoherence modeling toolkit for low-frequency fluxonium qubits.

Spectrum and matrix elements of the fluxonium Hamiltonian, golden-rule loss
channels, an N-level rate-matrix depolarization model, echo-dephasing
analysis, standard-tunneling-model loss tangents, magnetic-field models, and
a least-squares + bootstrap fit harness.
"""

__version__ = "0.1.0"

from .channels import (
    AttenuationChain,
    ChargeLine,
    Dielectric,
    FluxLine,
    FluxNoise,
    Gamma1Breakdown,
    Inductive,
    PhenomPowerLaw,
    PurcellChannel,
    QpArray,
    QpJunction,
    attenuated_photon_number,
    effective_inductive_q,
    gamma1_two_level,
    purcell_input_impedance,
    transition_rates,
)
from .circuit import (
    CircuitParams,
    EigenSolution,
    FieldModelParams,
    ResonatorParams,
    diagonalize,
    dispersive_shifts,
    field_dependence,
    flux_sensitivity,
    matrix_element,
    melem_table,
)
from .config import RunConfig, baseline_channels, baseline_config, load_config
from .datasets import T1Dataset, load_dataset
from .dephasing import (
    EchoDataset,
    EchoModel,
    echo_coherence,
    extract_flux_noise_from_echo,
    fit_echo_trace,
    spinlock_flux_psd,
    z_alpha,
)
from .errors import (
    ConvergenceError,
    DegeneracyError,
    DomainError,
    FitError,
    IdentifiabilityError,
    QuadratureError,
    ValidationError,
)
from .fitting import (
    FitResult,
    T1FluxTables,
    bootstrap_confidence,
    effective_temperature,
    fit_exponential,
    fit_field_models,
    fit_hamiltonian_spectroscopy,
    fit_normalized_rate,
    fit_power_law_global,
    fit_t1_composite,
    gamma1_grid,
)
from .kinetics import (
    KineticModes,
    PopulationTrajectory,
    RateMatrix,
    build_rate_matrix,
    decompose_modes,
    evolve_populations,
    simulate_readout_estimators,
)
from .sweeps import SweepResult, generate_synthetic, generate_synthetic_echo, run_sweep
from .tls import (
    PhononBath,
    TlsEnsemble,
    relaxation_loss_asymptotic,
    relaxation_loss_tangent,
    resonant_loss_tangent,
    tau1_phonon,
)
