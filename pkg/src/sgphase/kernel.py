"""Assembly of the coarse-grained phase sampling kernel from pattern elements.

The kernel is a double photon-number series: pattern elements f_nm(x) weighted
by sin[(n+1) phase] sinc[(n+1) eps/2] factors and an apparatus-phase factor
e^{i (n-m)(lo_phase - psi)}.  Pairing each (n, m) term with its transpose makes
the result manifestly real, and grouping by the diagonal offset d = m - n
turns the evaluation into a stack of small matrix products:

    K(phase, x, lo) = (2 eps / pi) * sum_d w_d cos(d (lo - psi)) *
                      [ S_d(phase) @ F_d(x) ]

with w_0 = 1 and w_d = 2 otherwise.  The series is only conditionally
convergent: at resonant parameter combinations partial sums drift like
n_max^(1/4), so the truncation order is part of the kernel's definition and is
recorded in every table.  Contractions of the kernel against smooth quadrature
distributions (the only way it is used for estimation) converge rapidly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import NeumaierSum, atomic_write_bytes, canonical_json, checksum_of, ordered_map, sinc
from .errors import EpsilonNonpositive, TableMismatch, UnsupportedS
from .fock import QuadratureGrid
from .patterns import PatternTable, WavefunctionTables, build_pattern_table, get_pattern_table

KERNEL_FORMAT_VERSION = 1
DEFAULT_KERNEL_ORDER = 64
_BAND_CHUNK = 16


def phase_weights(phase_values: np.ndarray, epsilon: float, n_max: int) -> np.ndarray:
    """Weights sin[(n+1) phase] sinc[(n+1) eps/2], shape (len(phase_values), n_max + 1)."""
    n = np.arange(n_max + 1)
    s = np.sin(np.outer(np.atleast_1d(phase_values), n + 1))
    return s * sinc((n + 1) * epsilon / 2.0)[None, :]


class KernelEvaluator:
    """Evaluates kernel values for batches of outcomes at a fixed truncation order.

    ``d_max`` optionally limits the apparatus-phase frequency content
    |n - m| <= d_max; estimation from an N-phase grid uses d_max = N - 1 so
    that frequencies the grid cannot resolve do not alias onto the estimate.
    """

    def __init__(
        self,
        pattern: PatternTable,
        epsilon: float,
        psi: float = 0.0,
        n_max: int | None = None,
        d_max: int | None = None,
    ):
        if epsilon <= 0.0:
            raise EpsilonNonpositive(f"epsilon must be > 0, got {epsilon}")
        if pattern.s != 0.0:
            raise UnsupportedS("kernel assembly requires an s = 0 pattern table")
        self.pattern = pattern
        self.epsilon = float(epsilon)
        self.psi = float(psi)
        self.n_max = pattern.n_max if n_max is None else int(n_max)
        if self.n_max > pattern.n_max:
            raise TableMismatch(
                f"evaluator order {self.n_max} exceeds pattern table order {pattern.n_max}"
            )
        self.d_max = self.n_max if d_max is None else min(int(d_max), self.n_max)

    def spec_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "psi": self.psi,
            "n_max": self.n_max,
            "d_max": self.d_max,
            "s": 0.0,
            "pattern_checksum": self.pattern.checksum,
        }

    def _local_tables(self, x: np.ndarray) -> WavefunctionTables:
        backing = self.pattern.tables
        if x.shape == backing.x.shape and np.array_equal(x, backing.x):
            return backing
        return backing.interpolate(x)

    def values_at(self, phase_values: np.ndarray, x: np.ndarray, lo_phase: float) -> np.ndarray:
        """Kernel matrix of shape (len(phase_values), len(x)) at one apparatus phase."""
        phase_values = np.atleast_1d(np.asarray(phase_values, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        local = self._local_tables(x)
        s = phase_weights(phase_values, self.epsilon, self.n_max)
        beta = lo_phase - self.psi
        acc = NeumaierSum((phase_values.size, x.size))
        for d in range(0, self.d_max + 1):
            nn = np.arange(0, self.n_max + 1 - d)
            f_d = local.dpsi[nn] * local.chi[nn + d] + local.psi[nn] * local.dchi[nn + d]
            s_d = s[:, nn] * s[:, nn + d]
            w = 2.0 * math.cos(d * beta) if d > 0 else 1.0
            acc.add(w * (s_d @ f_d))
        return (2.0 * self.epsilon / np.pi) * acc.total

    def values_multi(
        self, phase_values: np.ndarray, x: np.ndarray, lo_phases: np.ndarray
    ) -> np.ndarray:
        """Kernel tensor of shape (len(phase_values), len(lo_phases), len(x))."""
        phase_values = np.atleast_1d(np.asarray(phase_values, dtype=float))
        lo_phases = np.atleast_1d(np.asarray(lo_phases, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        local = self._local_tables(x)
        s = phase_weights(phase_values, self.epsilon, self.n_max)
        acc = NeumaierSum((phase_values.size, lo_phases.size, x.size))
        d_all = np.arange(0, self.d_max + 1)
        # bands in fixed ascending chunks; each chunk is one deterministic matmul
        for start in range(0, self.d_max + 1, _BAND_CHUNK):
            ds = d_all[start : start + _BAND_CHUNK]
            a_block = np.empty((ds.size, phase_values.size, x.size))
            for i, d in enumerate(ds):
                nn = np.arange(0, self.n_max + 1 - d)
                f_d = local.dpsi[nn] * local.chi[nn + d] + local.psi[nn] * local.dchi[nn + d]
                a_block[i] = (s[:, nn] * s[:, nn + d]) @ f_d
            w = np.where(ds == 0, 1.0, 2.0)[None, :] * np.cos(
                np.outer(lo_phases - self.psi, ds)
            )
            acc.add(np.einsum("jd,dpx->pjx", w, a_block, optimize=True))
        return (2.0 * self.epsilon / np.pi) * acc.total

    def tail_estimate(self, x: np.ndarray, lo_phases: np.ndarray) -> float:
        """Bound proxy for the truncated remainder: outermost antidiagonal contribution x 2."""
        phase_probe = np.linspace(0.0, math.pi, 33)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size > 257:
            x = x[:: max(1, x.size // 257)]
        local = self._local_tables(x)
        s = phase_weights(phase_probe, self.epsilon, self.n_max)
        n = self.n_max
        worst = 0.0
        pairs = [(n, n)] + ([(n - 1, n)] if n >= 1 else [])
        for lo in np.atleast_1d(lo_phases)[:8]:
            total = np.zeros((phase_probe.size, x.size))
            for a, b in pairs:
                f_ab = local.dpsi[a] * local.chi[b] + local.psi[a] * local.dchi[b]
                w = 1.0 if a == b else 2.0 * math.cos((b - a) * (lo - self.psi))
                total += w * np.outer(s[:, a] * s[:, b], f_ab)
            worst = max(worst, float(np.max(np.abs(total))))
        return 2.0 * (2.0 * self.epsilon / np.pi) * worst


def kernel_value(
    phase: float,
    psi: float,
    x: float,
    lo_phase: float,
    table: PatternTable,
    epsilon: float,
    n_max: int | None = None,
) -> float:
    """Single kernel value; scalar convenience wrapper over the batched evaluator."""
    ev = KernelEvaluator(table, epsilon, psi=psi, n_max=n_max)
    return float(ev.values_at(np.array([phase]), np.array([float(x)]), float(lo_phase))[0, 0])


def kernel_cosine(
    phase_angle: float, x: float, lo_phase: float, table: PatternTable, epsilon: float, **kw
) -> float:
    """Cosine-distribution kernel: the state angle equals the distribution variable."""
    return kernel_value(phase_angle, 0.0, x, lo_phase, table, epsilon, **kw)


def kernel_sine(
    phase_angle: float, x: float, lo_phase: float, table: PatternTable, epsilon: float, **kw
) -> float:
    """Sine-distribution kernel via the quarter-period substitution.

    The substitution lands at a negative state angle; evenness of the kernel
    in that angle maps it back into [0, pi].
    """
    return kernel_value(
        0.5 * math.pi - phase_angle, 0.0, x, lo_phase - 0.5 * math.pi, table, epsilon, **kw
    )


def kernel_fock_matrix(
    x: float, lo_phase: float, n_max: int, table: PatternTable
) -> np.ndarray:
    """Operator-kernel matrix elements f_nm(x) e^{i (n-m) lo_phase} as a dense complex matrix."""
    local = table.tables.interpolate(np.array([float(x)]))
    n = np.arange(n_max + 1)
    out = np.empty((n_max + 1, n_max + 1), dtype=complex)
    for i in range(n_max + 1):
        for j in range(i, n_max + 1):
            f = float(local.dpsi[i, 0] * local.chi[j, 0] + local.psi[i, 0] * local.dchi[j, 0])
            out[i, j] = f * np.exp(1j * (i - j) * lo_phase)
            out[j, i] = np.conj(out[i, j])
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Parameters fully determining a kernel table."""

    epsilon: float
    n_max: int
    phase_grid: np.ndarray
    lo_phase_grid: np.ndarray
    x_grid: QuadratureGrid
    psi: float = 0.0
    s: float = 0.0
    d_max: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise EpsilonNonpositive(f"epsilon must be > 0, got {self.epsilon}")
        if self.s != 0.0:
            raise UnsupportedS("only s = 0 kernel tables are supported")
        pg = np.asarray(self.phase_grid, dtype=float)
        lg = np.asarray(self.lo_phase_grid, dtype=float)
        if pg.size == 0 or lg.size == 0:
            raise ValueError("grids must be non-empty")
        pg.setflags(write=False)
        lg.setflags(write=False)
        object.__setattr__(self, "phase_grid", pg)
        object.__setattr__(self, "lo_phase_grid", lg)

    def as_dict(self) -> dict:
        return {
            "format_version": KERNEL_FORMAT_VERSION,
            "epsilon": self.epsilon,
            "psi": self.psi,
            "n_max": self.n_max,
            "d_max": self.d_max,
            "s": self.s,
            "phase_grid": self.phase_grid.tolist(),
            "lo_phase_grid": self.lo_phase_grid.tolist(),
            "x_grid": self.x_grid.as_dict(),
        }


@dataclass(frozen=True)
class KernelTable:
    """Materialized kernel values K[phase, lo_phase, x] with provenance."""

    spec: KernelSpec
    values: np.ndarray
    tail_estimate: float
    checksum: str
    pattern_checksum: str

    def __post_init__(self):
        self.values.setflags(write=False)


def build_kernel_table(
    spec: KernelSpec, pattern: PatternTable | None = None, workers: int = 1
) -> KernelTable:
    """Fill the kernel tensor on the spec's grids; identical output for any worker count."""
    if pattern is None:
        pattern = get_pattern_table(spec.n_max)
    ev = KernelEvaluator(pattern, spec.epsilon, psi=spec.psi, n_max=spec.n_max, d_max=spec.d_max)
    xg = spec.x_grid.values
    # fixed chunk boundaries keep the reduction identical for any worker count
    n_chunks = max(1, min(16, xg.size // 256))
    bounds = np.linspace(0, xg.size, n_chunks + 1, dtype=int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def work(bound):
        a, b = bound
        return ev.values_multi(spec.phase_grid, xg[a:b], spec.lo_phase_grid)

    parts = ordered_map(work, chunks, workers=workers)
    values = np.concatenate(parts, axis=2)
    tail = ev.tail_estimate(xg, spec.lo_phase_grid)
    digest = checksum_of({**spec.as_dict(), "pattern": pattern.checksum}, values)
    return KernelTable(
        spec=spec,
        values=values,
        tail_estimate=tail,
        checksum=digest,
        pattern_checksum=pattern.checksum,
    )


def save_kernel_table(table: KernelTable, path: str | Path) -> None:
    import io

    buf = io.BytesIO()
    header = {
        **table.spec.as_dict(),
        "tail_estimate": table.tail_estimate,
        "checksum": table.checksum,
        "pattern_checksum": table.pattern_checksum,
    }
    np.savez_compressed(
        buf,
        header=np.frombuffer(canonical_json(header).encode(), dtype=np.uint8),
        values=table.values,
    )
    atomic_write_bytes(path, buf.getvalue())


def load_kernel_table(path: str | Path) -> KernelTable:
    import json as _json

    with np.load(path) as data:
        header = _json.loads(bytes(data["header"]).decode())
        values = data["values"]
    stored = header.pop("checksum")
    tail = header.pop("tail_estimate")
    pattern_checksum = header.pop("pattern_checksum")
    spec = KernelSpec(
        epsilon=header["epsilon"],
        n_max=header["n_max"],
        phase_grid=np.asarray(header["phase_grid"]),
        lo_phase_grid=np.asarray(header["lo_phase_grid"]),
        x_grid=QuadratureGrid(**header["x_grid"]),
        psi=header["psi"],
        s=header["s"],
        d_max=header["d_max"],
    )
    digest = checksum_of({**spec.as_dict(), "pattern": pattern_checksum}, values)
    if digest != stored:
        raise TableMismatch(f"checksum mismatch for {path}")
    return KernelTable(
        spec=spec, values=values, tail_estimate=tail, checksum=stored, pattern_checksum=pattern_checksum
    )


def export_kernel_slices(table: KernelTable, path: str | Path) -> None:
    """Long-format CSV of the table: one row per (phase, lo_phase, x) triple."""
    import csv

    xg = table.spec.x_grid.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase", "lo_phase", "x", "K"])
        for i, big in enumerate(table.spec.phase_grid):
            for j, lo in enumerate(table.spec.lo_phase_grid):
                for k, xv in enumerate(xg):
                    writer.writerow(
                        [repr(float(big)), repr(float(lo)), repr(float(xv)), repr(float(table.values[i, j, k]))]
                    )
