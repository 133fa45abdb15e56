"""N-level rate-matrix depolarization model.

Populations p(t) of the lowest N circuit levels obey dp/dt = B p, where the
off-diagonal entry B[j, i] is the golden-rule rate from level i to level j and
each diagonal entry carries minus the total outflow of its column.  The
effective depolarization rate is the decay rate of the non-steady-state
eigenmode with the largest overlap with the initial populations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import PhenomPowerLaw, channel_label, transition_rates
from .circuit import EigenSolution
from .errors import ConvergenceError, ValidationError

ZERO_MODE_RTOL = 1e-8
SYMMETRIZATION_RTOL = 1e-8
OVERLAP_TIE_FRACTION = 0.01


@dataclass(frozen=True)
class RateMatrix:
    """Rate matrix B (1/s) with per-channel contributions retained."""

    b: np.ndarray  # (n, n)
    temperature: float | None  # common bath temperature, None if mixed
    per_channel: tuple = ()  # (label, B_i) pairs
    sol: EigenSolution | None = None

    @property
    def n(self) -> int:
        return self.b.shape[0]


def build_rate_matrix(channels, sol: EigenSolution, n: int) -> RateMatrix:
    """Assemble the N-level rate matrix from golden-rule rates of all channels.

    Column sums vanish analytically: each diagonal entry is set to minus the
    sum of the off-diagonal entries of its column.
    """
    channels = list(channels)
    if not channels:
        raise ValidationError("at least one noise channel is required")
    if n < 2:
        raise ValidationError("n must be at least 2")
    if n > sol.n_levels:
        raise ValidationError(f"n={n} exceeds the {sol.n_levels} levels of the solution")
    for ch in channels:
        if isinstance(ch, PhenomPowerLaw) and n > 2:
            raise ValidationError(
                "PhenomPowerLaw is a two-level model and cannot enter an "
                f"N={n} rate matrix"
            )

    per_channel = []
    total = np.zeros((n, n))
    temps = set()
    for ch in channels:
        b = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                gamma_ij, gamma_ji = transition_rates(ch, sol, i, j)
                b[j, i] = gamma_ij
                b[i, j] = gamma_ji
        np.fill_diagonal(b, -b.sum(axis=0))
        per_channel.append((channel_label(ch), b))
        total += b
        omega01 = 2.0 * np.pi * abs(sol.frequency(0, 1))
        temps.add(float(ch.effective_temperature(omega01)))
    temperature = temps.pop() if len(temps) == 1 else None
    return RateMatrix(b=total, temperature=temperature, per_channel=tuple(per_channel), sol=sol)


@dataclass(frozen=True)
class KineticModes:
    """Eigenmode decomposition of a rate matrix for a given initial population."""

    gammas: np.ndarray  # decay rates, gammas[0] == 0 for the steady state
    vectors: np.ndarray  # unit-norm right eigenvectors as columns
    overlaps: np.ndarray  # coefficients c_i of p(0) in the eigenbasis
    gamma1_eff: float
    m_metric: float
    stationary: np.ndarray
    p0: np.ndarray = field(repr=False, default=None)
    dominant_index: int = 0


def _stationary_from_nullspace(b: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(b)
    pi = vt[-1, :]
    pi = pi / pi.sum()
    if np.any(pi <= 0):
        raise ConvergenceError("stationary vector of the rate matrix is not strictly positive")
    return pi


def decompose_modes(rm: RateMatrix, p0) -> KineticModes:
    """Eigenmodes, overlaps, effective rate and exponentiality metric.

    The matrix is symmetrized by the square root of its stationary
    distribution (exact under detailed balance) and solved with a symmetric
    eigensolver; if the similarity residual exceeds 1e-8 (mixed bath
    temperatures), a general real eigensolver is used instead.
    """
    p0 = np.asarray(p0, dtype=float)
    b = rm.b
    n = rm.n
    if p0.shape != (n,):
        raise ValidationError(f"p0 must have length {n}")
    if np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValidationError("p0 must be a probability vector")

    pi = _stationary_from_nullspace(b)
    d = np.sqrt(pi)
    sym = b / d[None, :] * d[:, None]
    sym_residual = np.max(np.abs(sym - sym.T)) / max(np.max(np.abs(sym)), 1e-300)
    if sym_residual <= SYMMETRIZATION_RTOL:
        lam, u = np.linalg.eigh((sym + sym.T) / 2.0)
        vectors = u * d[:, None]
    else:
        lam, vectors = np.linalg.eig(b)
        if np.max(np.abs(lam.imag)) > 1e-9 * np.max(np.abs(lam.real)):
            raise ConvergenceError(
                "rate-matrix spectrum has significant imaginary parts "
                f"(max |Im|/|Re| = {np.max(np.abs(lam.imag)) / np.max(np.abs(lam.real)):.2e}); "
                "matrix may be defective"
            )
        lam, vectors = lam.real, vectors.real

    order = np.argsort(-lam)  # steady state (lambda = 0) first, then faster decay
    lam = lam[order]
    vectors = vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0)

    gammas = -lam
    scale = max(gammas.max(), 1e-300)
    # The generator has exactly one zero eigenvalue (the stationary mode,
    # largest after sorting); it must sit at numerical-zero scale and be
    # cleanly separated from the slowest physical decay rate.
    g0, g_next = gammas[0], gammas[1]
    if abs(g0) > ZERO_MODE_RTOL * scale or abs(g0) >= 0.1 * g_next:
        raise ConvergenceError(
            "could not isolate a unique zero eigenvalue: stationary candidate "
            f"{g0:.3e} vs slowest decay {g_next:.3e} (scale {scale:.3e})"
        )
    gammas[0] = 0.0
    if np.any(gammas[1:] <= 0):
        raise ConvergenceError("non-stationary modes must have strictly positive decay rates")

    try:
        overlaps = np.linalg.solve(vectors, p0)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(vectors)
        raise ConvergenceError(
            f"eigenvector matrix is singular (condition number {cond:.2e})"
        ) from exc

    recon = vectors @ overlaps
    if np.max(np.abs(recon - p0)) > 1e-10:
        raise ConvergenceError(
            "eigenbasis does not reconstruct p(0) "
            f"(max error {np.max(np.abs(recon - p0)):.2e})"
        )

    weights = np.abs(overlaps) ** 2
    weights[0] = -np.inf  # exclude the steady state
    best = weights.max()
    candidates = np.flatnonzero(weights >= (1.0 - OVERLAP_TIE_FRACTION) * best)
    k_max = candidates[np.argmin(gammas[candidates])]

    delta = p0 - overlaps[0] * vectors[:, 0] - overlaps[k_max] * vectors[:, k_max]
    return KineticModes(
        gammas=gammas,
        vectors=vectors,
        overlaps=overlaps,
        gamma1_eff=float(gammas[k_max]),
        m_metric=float(np.linalg.norm(delta)),
        stationary=pi,
        p0=p0,
        dominant_index=int(k_max),
    )


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray  # (T,)
    populations: np.ndarray  # (n, T)

    @property
    def n(self) -> int:
        return self.populations.shape[0]

    def leakage(self) -> np.ndarray:
        """Total population outside the computational subspace at each time."""
        return self.populations[2:].sum(axis=0)


def evolve_populations(modes_or_rm, p0, times) -> PopulationTrajectory:
    """Populations p(t) from the eigen-expansion p(t) = sum_i c_i v_i e^(-g_i t)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValidationError("times must be a sorted, nonnegative 1-D array")
    if isinstance(modes_or_rm, RateMatrix):
        modes = decompose_modes(modes_or_rm, p0)
    else:
        modes = modes_or_rm
        if modes.p0 is not None and not np.allclose(modes.p0, p0, atol=1e-12):
            modes = KineticModes(
                gammas=modes.gammas,
                vectors=modes.vectors,
                overlaps=np.linalg.solve(modes.vectors, np.asarray(p0, dtype=float)),
                gamma1_eff=modes.gamma1_eff,
                m_metric=modes.m_metric,
                stationary=modes.stationary,
                p0=np.asarray(p0, dtype=float),
                dominant_index=modes.dominant_index,
            )
    decay = np.exp(-np.outer(modes.gammas, times))  # (n, T)
    populations = modes.vectors @ (modes.overlaps[:, None] * decay)
    return PopulationTrajectory(times=times, populations=populations)


READOUT_POLICIES = ("assign_leakage_to_0", "assign_leakage_to_1", "mean_signal")


@dataclass(frozen=True)
class ReadoutEstimate:
    """T1 estimators under leakage mis-assignment policies.

    ``t1_hat`` is the estimator from the true p1(t); the policy estimators
    treat leakage shots as |0>, as |1>, or as contributing the midpoint signal.
    """

    t1_hat: float
    t1_by_policy: dict
    misassignment_error: float  # |T1^{|1>} - T1^{|0>}| / T1_hat
    eff_error: float | None  # |T1_hat - T1_eff| / T1_eff


def simulate_readout_estimators(
    traj: PopulationTrajectory, gamma1_eff: float | None = None
) -> ReadoutEstimate:
    """Exponential-fit T1 estimators for each leakage mis-assignment policy.

    The trajectory must start from p1 = 1.  Measured-p1 series are fit to
    A*exp(-t/T1) + C; fit failures propagate as FitError.
    """
    from .fitting import fit_exponential  # local import to avoid a module cycle

    p = traj.populations
    if p[1, 0] < 0.5:
        raise ValidationError(
            "readout estimators require a trajectory initialized in p1 = 1 "
            f"(first sample has p1 = {p[1, 0]:.3f})"
        )
    leak = p[2:].sum(axis=0) if traj.n > 2 else np.zeros_like(traj.times)
    series = {
        "assign_leakage_to_0": p[1],
        "assign_leakage_to_1": p[1] + leak,
        "mean_signal": p[1] + 0.5 * leak,
    }
    t1_true = fit_exponential(traj.times, p[1]).t1
    t1_by_policy = {name: fit_exponential(traj.times, s).t1 for name, s in series.items()}
    mis = abs(t1_by_policy["assign_leakage_to_1"] - t1_by_policy["assign_leakage_to_0"]) / t1_true
    eff = None
    if gamma1_eff is not None:
        t1_eff = 1.0 / gamma1_eff
        eff = abs(t1_true - t1_eff) / t1_eff
    return ReadoutEstimate(
        t1_hat=t1_true, t1_by_policy=t1_by_policy, misassignment_error=mis, eff_error=eff
    )


__all__ = [
    "RateMatrix",
    "KineticModes",
    "PopulationTrajectory",
    "ReadoutEstimate",
    "READOUT_POLICIES",
    "build_rate_matrix",
    "decompose_modes",
    "evolve_populations",
    "simulate_readout_estimators",
]
