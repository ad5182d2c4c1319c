"""Truncated Fock-space states, oscillator wavefunctions, and quadrature distributions.

Scaling convention: the field-strength prefactor is fixed to 1/sqrt(2), so the
recorded outcome x coincides with the standard dimensionless quadrature whose
vacuum distribution is pi^(-1/2) exp(-x^2) (variance 1/2).  Quadrature
eigenvectors carry the photon-number phase exp(+i n phi) relative to the
local-oscillator phase phi; the end-to-end reconstruction tests lock this
convention against the sampling kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatch, IncompatibleTruncation, TruncationTooSmall

TAU_NORM = 1e-10
F_SCALE = 1.0 / math.sqrt(2.0)
MIN_DEFAULT_TRUNCATION = 30


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform grid of scaled field-strength values."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainMismatch(f"empty grid: [{self.x_min}, {self.x_max}]")
        if self.n_points < 2:
            raise DomainMismatch("grid needs at least 2 points")

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> "QuadratureGrid":
        return cls(-float(half_width), float(half_width), int(n_points))

    @classmethod
    def for_truncation(cls, n: int, n_points: int = 4001, pad: float = 5.0) -> "QuadratureGrid":
        """Grid covering the oscillatory region of all orders <= n plus a decay margin."""
        half = math.sqrt(2.0 * n + 1.0) + pad
        return cls.symmetric(half, n_points)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def as_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


@dataclass(frozen=True)
class FockState:
    """Pure state as a truncated complex amplitude vector in the photon-number basis."""

    amplitudes: np.ndarray
    descriptor: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def truncation(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def mean_photon_number(self) -> float:
        n = np.arange(self.amplitudes.size)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    def density_matrix(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(rho, descriptor=dict(self.descriptor))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian trace-one matrix in the truncated photon-number basis."""

    elements: np.ndarray
    descriptor: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.elements, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(m, m.conj().T, atol=1e-9):
            raise ValueError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)  # exact Hermiticity
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-6:
            raise ValueError(f"trace {tr} differs from 1 beyond tolerance")
        if np.min(m.diagonal().real) < -1e-12:
            raise ValueError("negative diagonal entry")
        m.setflags(write=False)
        object.__setattr__(self, "elements", m)

    @classmethod
    def from_pure(cls, state: FockState) -> "DensityMatrix":
        return state.density_matrix()

    @property
    def truncation(self) -> int:
        return self.elements.shape[0] - 1

    @property
    def mean_photon_number(self) -> float:
        n = np.arange(self.elements.shape[0])
        return float(np.sum(n * self.elements.diagonal().real))


def _finalize(unnormalized: np.ndarray, deficit: float, n: int, explicit: bool, descriptor: dict) -> FockState:
    if deficit > TAU_NORM:
        if explicit:
            raise TruncationTooSmall(
                f"cutoff {n} leaves norm deficit {deficit:.3e} > {TAU_NORM:.0e}"
            )
        return None  # caller will retry with a larger cutoff
    amp = unnormalized / np.linalg.norm(unnormalized)
    return FockState(amp, descriptor=descriptor)


def make_coherent(alpha: complex, n: int | None = None) -> FockState:
    """Coherent state |alpha> truncated at photon number n (chosen adaptively if omitted)."""
    alpha = complex(alpha)
    explicit = n is not None
    nbar = abs(alpha) ** 2
    cutoff = int(n) if explicit else max(math.ceil(4 * nbar + 20), MIN_DEFAULT_TRUNCATION)
    descriptor = {"kind": "coherent", "alpha": [alpha.real, alpha.imag]}
    while True:
        k = np.arange(cutoff + 1)
        # c_n proportional to alpha^n / sqrt(n!), built multiplicatively to avoid overflow
        amp = np.ones(cutoff + 1, dtype=complex)
        if cutoff >= 1:
            amp[1:] = np.cumprod(alpha / np.sqrt(k[1:]))
        captured = float(np.sum(np.abs(amp) ** 2)) * math.exp(-nbar)
        state = _finalize(amp, 1.0 - captured, cutoff, explicit, {**descriptor, "truncation": cutoff})
        if state is not None:
            return state
        cutoff *= 2


def make_squeezed_vacuum(xi: complex, n: int | None = None) -> FockState:
    """Squeezed vacuum with squeeze parameter xi = r e^{i theta}.

    Only even photon numbers are populated.  The amplitude signs are fixed so
    that for real xi > 0 the x quadrature (phi = 0) carries the reduced noise
    e^{-2r}/2.
    """
    xi = complex(xi)
    explicit = n is not None
    r, theta = abs(xi), math.atan2(xi.imag, xi.real)
    if r == 0.0:
        cutoff = int(n) if explicit else MIN_DEFAULT_TRUNCATION
        amp = np.zeros(cutoff + 1, dtype=complex)
        amp[0] = 1.0
        return FockState(amp, descriptor={"kind": "squeezed", "xi": [0.0, 0.0], "truncation": cutoff})
    nbar = math.sinh(r) ** 2
    cutoff = int(n) if explicit else max(math.ceil(4 * nbar + 20), MIN_DEFAULT_TRUNCATION)
    descriptor = {"kind": "squeezed", "xi": [xi.real, xi.imag]}
    w = -np.exp(1j * theta) * math.tanh(r)
    while True:
        amp = np.zeros(cutoff + 1, dtype=complex)
        n_pairs = cutoff // 2
        # c_{2k} = w^k sqrt((2k)!)/(2^k k!) / sqrt(cosh r), built via the term ratio
        ratios = w * np.sqrt((2 * np.arange(1, n_pairs + 1) - 1) / (2.0 * np.arange(1, n_pairs + 1)))
        even = np.concatenate(([1.0 + 0j], np.cumprod(ratios))) / math.sqrt(math.cosh(r))
        amp[0 : 2 * n_pairs + 1 : 2] = even
        deficit = 1.0 - float(np.sum(np.abs(amp) ** 2))
        state = _finalize(amp, deficit, cutoff, explicit, {**descriptor, "truncation": cutoff})
        if state is not None:
            return state
        cutoff *= 2


def make_fock(photons: int, n: int | None = None) -> FockState:
    """Number state |photons> with cutoff n (defaults to photons + 2)."""
    photons = int(photons)
    cutoff = int(n) if n is not None else max(photons + 2, 2)
    if cutoff < photons:
        raise TruncationTooSmall(f"cutoff {cutoff} below photon number {photons}")
    amp = np.zeros(cutoff + 1, dtype=complex)
    amp[photons] = 1.0
    return FockState(amp, descriptor={"kind": "fock", "photons": photons, "truncation": cutoff})


def make_vacuum(n: int = 5) -> FockState:
    amp = np.zeros(int(n) + 1, dtype=complex)
    amp[0] = 1.0
    return FockState(amp, descriptor={"kind": "vacuum", "truncation": int(n)})


def wavefunction_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions psi_0..psi_n_max on x, by the normalized three-term recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def quadrature_wavefunction(n: int, grid: QuadratureGrid | np.ndarray) -> np.ndarray:
    """psi_n evaluated on the grid; unit L2 norm, real."""
    if n < 0:
        raise ValueError("order must be non-negative")
    x = grid.values if isinstance(grid, QuadratureGrid) else np.asarray(grid, dtype=float)
    return wavefunction_table(n, x)[n]


def _as_density(state) -> DensityMatrix:
    if isinstance(state, FockState):
        return state.density_matrix()
    if isinstance(state, DensityMatrix):
        return state
    raise TypeError(f"expected FockState or DensityMatrix, got {type(state)!r}")


def quadrature_distribution(
    state,
    phi: float | np.ndarray,
    grid: QuadratureGrid | np.ndarray,
    wavefunctions: np.ndarray | None = None,
) -> np.ndarray:
    """Distribution of the scaled field strength at local-oscillator phase(s) phi.

    Returns an array of shape ``x.shape`` for scalar phi, else ``(len(phi),) + x.shape``.
    Factorized over density-matrix diagonals so a batch of phases shares the
    wavefunction products.
    """
    rho = _as_density(state).elements
    n_state = rho.shape[0] - 1
    x = grid.values if isinstance(grid, QuadratureGrid) else np.asarray(grid, dtype=float)
    if wavefunctions is None:
        wavefunctions = wavefunction_table(n_state, x)
    elif wavefunctions.shape[0] < n_state + 1:
        raise IncompatibleTruncation(
            f"wavefunction table holds {wavefunctions.shape[0]} orders, state needs {n_state + 1}"
        )
    psi = wavefunctions
    phis = np.atleast_1d(np.asarray(phi, dtype=float))
    p = np.zeros((phis.size, x.size))
    for d in range(0, n_state + 1):
        nn = np.arange(0, n_state + 1 - d)
        diag = np.einsum("n,nx,nx->x", rho[nn, nn + d], psi[nn], psi[nn + d])
        if d == 0:
            p += diag.real[None, :]
        else:
            # pair (n, n+d) with its transpose: 2 Re[rho_{n,n+d} e^{+i d phi}] psi_n psi_{n+d}
            p += 2.0 * (np.exp(1j * d * phis)[:, None] * diag[None, :]).real
    p = p.reshape(phis.shape + x.shape)
    if np.isscalar(phi) or np.asarray(phi).ndim == 0:
        return p[0]
    return p
