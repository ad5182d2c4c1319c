"""Susskind-Glogower phase operators, coarse-grained phase states, and phase distributions.

The unified family of phase states is parametrized by an angle ``phase`` in
[0, pi] (the distribution variable) and a mixing angle ``psi`` selecting the
operator: psi = 0 gives the cosine states, psi = pi/2 the sine states.  A
coarse-grained state averages the exact states over a window of width
``epsilon``, which makes its photon-number expansion summable and hence
measurable by direct sampling.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from ._util import sinc
from .errors import DomainMismatch, EpsilonNonpositive
from .fock import DensityMatrix, FockState, _as_density

DEFAULT_PHASE_POINTS = 101
MAX_COARSE_TRUNCATION = 4000

KIND_COSINE = "cosine"
KIND_SINE = "sine"
KIND_GENERAL = "general"


def build_exponential_operator(n: int) -> np.ndarray:
    """Lowering-style phase ladder: ones on the first superdiagonal of an (n+1)x(n+1) matrix."""
    if n < 1:
        raise ValueError("truncation must be >= 1")
    return np.diag(np.ones(n, dtype=complex), k=1)


def build_c_psi_operator(psi: float, n: int) -> np.ndarray:
    """Hermitian combination (E e^{-i psi} + E^dag e^{i psi})/2 on the truncated basis."""
    e = build_exponential_operator(n)
    return 0.5 * (e * np.exp(-1j * psi) + e.conj().T * np.exp(1j * psi))


def reduce_phase(phase: float, psi: float) -> tuple[float, float, float]:
    """Map (phase, psi) onto phase in [0, pi) using the state identities.

    A pi shift of the phase angle trades against a pi shift of the mixing
    angle and a global sign: |p, psi> = (-1)^k |p - k pi, psi + k pi|>.
    Returns (reduced_phase, shifted_psi, sign).
    """
    k = math.floor(phase / math.pi)
    return phase - k * math.pi, psi + k * math.pi, float((-1.0) ** (k % 2))


def phase_state_coefficients(phase: float, psi: float, n_max: int) -> np.ndarray:
    """Photon-number coefficients sqrt(2/pi) e^{i n psi} sin[(n+1) phase] of the exact states."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    return np.sqrt(2.0 / np.pi) * np.exp(1j * n * psi) * np.sin((n + 1) * phase)


def coarse_amplitudes(phase: float, psi: float, epsilon: float, n_max: int) -> np.ndarray:
    """Coefficients sqrt(2 eps/pi) e^{i n psi} sin[(n+1) phase] sinc[(n+1) eps/2]."""
    n = np.arange(n_max + 1)
    return (
        np.sqrt(2.0 * epsilon / np.pi)
        * np.exp(1j * n * psi)
        * np.sin((n + 1) * phase)
        * sinc((n + 1) * epsilon / 2.0)
    )


def default_coarse_truncation(epsilon: float) -> int:
    """Cutoff keeping the smallest retained sinc weight at or below 1/(10 pi)."""
    return min(int(math.ceil(20.0 * math.pi / epsilon)), MAX_COARSE_TRUNCATION)


@dataclass(frozen=True)
class CoarseGrainedState:
    """Window-averaged phase state with its generating parameters."""

    phase: float
    psi: float
    epsilon: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @property
    def truncated_norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def norm_tail_estimate(self) -> float:
        """Estimated norm beyond the cutoff: (2/(pi eps)) * trigamma(n_max + 2)."""
        return float(2.0 / (np.pi * self.epsilon) * special.polygamma(1, self.n_max + 2))

    @property
    def analytic_norm(self) -> float:
        return coarse_state_norm(self.phase, self.epsilon)


def coarse_grained_state(
    phase: float, psi: float, epsilon: float, n_max: int | None = None
) -> CoarseGrainedState:
    """Coarse-grained phase state; near the domain boundary the norm defect is kept visible."""
    if epsilon <= 0.0:
        raise EpsilonNonpositive(f"epsilon must be > 0, got {epsilon}")
    if n_max is None:
        n_max = default_coarse_truncation(epsilon)
    amp = coarse_amplitudes(phase, psi, epsilon, n_max)
    return CoarseGrainedState(phase, psi, epsilon, amp)


def _cosine_series_sum(theta: float) -> float:
    """Closed form of sum_{k>=1} cos(k theta)/k^2 (even, 2-pi periodic Bernoulli polynomial)."""
    t = math.fabs(theta) % (2.0 * math.pi)
    return math.pi ** 2 / 6.0 - math.pi * t / 2.0 + t * t / 4.0


def coarse_state_norm(phase: float, epsilon: float) -> float:
    """Exact (untruncated) squared norm of a coarse-grained state.

    Equals 1 whenever the averaging window lies inside [0, pi]; near the
    boundary it reports the true defect (e.g. 1/2 when the window is centred a
    quarter-window from the edge, 0 at the edge itself).
    """
    if epsilon <= 0.0:
        raise EpsilonNonpositive(f"epsilon must be > 0, got {epsilon}")
    c = _cosine_series_sum
    total = (
        math.pi ** 2 / 6.0
        - c(2.0 * phase)
        - c(epsilon)
        + 0.5 * c(2.0 * phase + epsilon)
        + 0.5 * c(2.0 * phase - epsilon)
    )
    return 2.0 / (math.pi * epsilon) * total


@dataclass(frozen=True)
class PhaseDistribution:
    """Phase distribution on a grid, optionally with per-point standard errors."""

    grid: np.ndarray
    values: np.ndarray
    kind: str
    epsilon: float
    psi: float
    normalization: float
    std_errors: np.ndarray | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape:
            raise ValueError("grid and values must have matching shapes")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if self.std_errors is not None:
            e = np.asarray(self.std_errors, dtype=float)
            e.setflags(write=False)
            object.__setattr__(self, "std_errors", e)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["phase", "p", "std_error"])
            errs = self.std_errors if self.std_errors is not None else np.full_like(self.values, np.nan)
            for g, v, e in zip(self.grid, self.values, errs):
                writer.writerow([repr(float(g)), repr(float(v)), "" if np.isnan(e) else repr(float(e))])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "epsilon": self.epsilon,
            "psi": self.psi,
            "normalization": self.normalization,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "std_errors": None if self.std_errors is None else self.std_errors.tolist(),
            "metadata": self.metadata,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def kind_domain(kind: str) -> tuple[float, float]:
    if kind == KIND_SINE:
        return (-math.pi / 2.0, math.pi / 2.0)
    if kind in (KIND_COSINE, KIND_GENERAL):
        return (0.0, math.pi)
    raise DomainMismatch(f"unknown distribution kind {kind!r}")


def resolve_kind(kind: str, psi: float | None) -> float:
    """Mixing angle for a distribution kind; explicit psi only allowed for 'general'."""
    if kind == KIND_COSINE:
        return 0.0
    if kind == KIND_SINE:
        return math.pi / 2.0
    if kind == KIND_GENERAL:
        return 0.0 if psi is None else float(psi)
    raise DomainMismatch(f"unknown distribution kind {kind!r}")


def default_grid(kind: str, n_points: int = DEFAULT_PHASE_POINTS) -> np.ndarray:
    lo, hi = kind_domain(kind)
    return np.linspace(lo, hi, n_points)


def grid_to_phase_variable(kind: str, grid: np.ndarray) -> np.ndarray:
    """Map the distribution variable onto the internal state angle in [0, pi]."""
    grid = np.asarray(grid, dtype=float)
    lo, hi = kind_domain(kind)
    if grid.min() < lo - 1e-12 or grid.max() > hi + 1e-12:
        raise DomainMismatch(
            f"grid [{grid.min():.6f}, {grid.max():.6f}] outside {kind} domain [{lo:.6f}, {hi:.6f}]"
        )
    if kind == KIND_SINE:
        return math.pi / 2.0 - grid
    return grid


def _quadratic_form(rho: np.ndarray, phase_values: np.ndarray, psi: float, epsilon: float) -> np.ndarray:
    """<phase,psi(,eps)|rho|phase,psi(,eps)> for every phase value (vectorized)."""
    n_state = rho.shape[0] - 1
    n = np.arange(n_state + 1)
    s = np.sin(np.outer(phase_values, n + 1))
    if epsilon > 0.0:
        s = s * sinc((n + 1) * epsilon / 2.0)[None, :]
        prefactor = 2.0 * epsilon / np.pi
    else:
        prefactor = 2.0 / np.pi
    w = s * np.exp(1j * n * psi)[None, :]
    q = np.einsum("pn,nm,pm->p", w.conj(), rho, w).real
    return prefactor * q


def exact_phase_distribution(
    state: FockState | DensityMatrix,
    kind: str = KIND_COSINE,
    grid: np.ndarray | None = None,
    psi: float | None = None,
) -> PhaseDistribution:
    """Phase distribution computed directly from the state with zero coarse-graining.

    Completeness of the phase states makes the result normalized over the
    kind's natural domain without any explicit division.
    """
    psi_val = resolve_kind(kind, psi)
    g = default_grid(kind) if grid is None else np.asarray(grid, dtype=float)
    phase_vals = grid_to_phase_variable(kind, g)
    values = _quadratic_form(_as_density(state).elements, phase_vals, psi_val, 0.0)
    return PhaseDistribution(
        grid=g, values=values, kind=kind, epsilon=0.0, psi=psi_val, normalization=1.0
    )


def coarse_phase_distribution(
    state: FockState | DensityMatrix,
    kind: str,
    epsilon: float,
    grid: np.ndarray | None = None,
    psi: float | None = None,
    n_max: int | None = None,
) -> PhaseDistribution:
    """Coarse-grained phase distribution, normalized over the output grid by trapezoid rule.

    The cutoff n_max applies to the coarse-grained state expansion; components
    beyond the state's own truncation cannot contribute, so the effective
    cutoff is min(n_max, state truncation).
    """
    if epsilon <= 0.0:
        raise EpsilonNonpositive(f"epsilon must be > 0, got {epsilon}")
    psi_val = resolve_kind(kind, psi)
    g = default_grid(kind) if grid is None else np.asarray(grid, dtype=float)
    phase_vals = grid_to_phase_variable(kind, g)
    rho = _as_density(state).elements
    if n_max is not None and n_max < rho.shape[0] - 1:
        rho = rho[: n_max + 1, : n_max + 1]  # drop unreachable expansion orders; rescaled away below
    q = _quadratic_form(rho, phase_vals, psi_val, epsilon)
    # the normalization integral runs over the state angle; the grids differ only
    # by orientation, so the trapezoid over the output grid is the same number
    norm = float(abs(np.trapezoid(q, g)))
    values = q / norm
    return PhaseDistribution(
        grid=g, values=values, kind=kind, epsilon=float(epsilon), psi=psi_val, normalization=norm
    )
