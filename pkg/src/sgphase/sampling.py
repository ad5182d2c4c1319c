"""Direct sampling of coarse-grained phase distributions from homodyne records.

The unnormalized estimate at a phase point is the kernel averaged over all
records with the pi/N apparatus-phase weight; dividing by its own trapezoid
integral supplies the normalization constant.  Per-point standard errors come
from the empirical variance of the per-record kernel values over the total
event count; the (small) correlation induced by the shared normalization
constant is neglected, which is reported in the result metadata.

Record reduction is phase-bucketed: records are grouped by apparatus phase,
sorted within each bucket, and reduced chunkwise with compensated summation in
a fixed order, so the estimate is bit-identical under any record permutation
and any worker count.

The kernel's apparatus-phase frequencies |n - m| are limited by default to
n_phases - 1: an N-point phase grid cannot resolve faster oscillations, and
leaving them in aliases them onto the estimate (a percent-level distortion for
the reference squeezed-vacuum run).  Set band_limit=None to force the full
series.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._util import NeumaierSum, ordered_map
from .errors import BiasWarning, EmptyDataset, KernelMissing
from .fock import DensityMatrix, QuadratureGrid, _as_density, quadrature_distribution
from .homodyne import HomodyneDataset, midpoint_phases
from .kernel import KernelEvaluator
from .patterns import PatternTable, get_pattern_table
from .phase import (
    PhaseDistribution,
    default_grid,
    grid_to_phase_variable,
    resolve_kind,
)

_CHUNK = 4096


@dataclass(frozen=True)
class EstimateResult:
    """Sampled phase distribution plus estimator provenance."""

    distribution: PhaseDistribution
    raw_values: np.ndarray
    normalization: float
    n_records: int
    dataset_checksum: str
    kernel_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.raw_values.setflags(write=False)


def _resolve_kernel(kernel_source, epsilon, psi, n_max, d_max, dataset):
    """Accept an evaluator, a pattern table, a duck-typed stub, or build from scratch."""
    if kernel_source is None:
        if n_max is None:
            n_max = int(dataset.header.state.get("truncation", 64))
        table = get_pattern_table(n_max)
        return KernelEvaluator(table, epsilon, psi=psi, n_max=n_max, d_max=d_max)
    if isinstance(kernel_source, PatternTable):
        order = kernel_source.n_max if n_max is None else n_max
        return KernelEvaluator(kernel_source, epsilon, psi=psi, n_max=order, d_max=d_max)
    if isinstance(kernel_source, KernelEvaluator):
        if kernel_source.epsilon != epsilon or kernel_source.psi != psi:
            raise KernelMissing(
                "supplied evaluator was built for different (epsilon, psi) parameters"
            )
        return kernel_source
    if hasattr(kernel_source, "values_at"):
        return kernel_source
    raise KernelMissing(f"cannot evaluate kernels from {type(kernel_source)!r}")


def _phase_weights_for(dataset: HomodyneDataset) -> np.ndarray:
    """Quadrature weights over the apparatus-phase grid (midpoint or trapezoid)."""
    phases = dataset.phases
    n = phases.size
    if dataset.header.grid_kind == "midpoint":
        return np.full(n, math.pi / n)
    # endpoint-style grid from external data: composite trapezoid weights
    w = np.empty(n)
    w[1:-1] = 0.5 * (phases[2:] - phases[:-2])
    w[0] = 0.5 * (phases[1] - phases[0])
    w[-1] = 0.5 * (phases[-1] - phases[-2])
    return w


def estimate_distribution(
    dataset: HomodyneDataset,
    kind: str,
    epsilon: float,
    grid: np.ndarray | None = None,
    psi: float | None = None,
    kernel_source=None,
    n_max: int | None = None,
    band_limit: int | str | None = "auto",
    workers: int = 1,
) -> EstimateResult:
    """Estimate a coarse-grained phase distribution directly from homodyne records."""
    if dataset.n_records == 0:
        raise EmptyDataset("dataset has no records")
    if dataset.header.eta < 1.0:
        warnings.warn(
            f"dataset was recorded at eta = {dataset.header.eta} < 1; perfect-detection "
            "kernels give a biased estimate",
            BiasWarning,
            stacklevel=2,
        )
    psi_val = resolve_kind(kind, psi)
    g = default_grid(kind) if grid is None else np.asarray(grid, dtype=float)
    phase_vals = grid_to_phase_variable(kind, g)
    phases = dataset.phases
    if band_limit == "auto":
        d_max = phases.size - 1
    else:
        d_max = band_limit
    evaluator = _resolve_kernel(kernel_source, float(epsilon), psi_val, n_max, d_max, dataset)
    weights = _phase_weights_for(dataset)

    def reduce_phase_bucket(j: int):
        x = np.sort(dataset.records_for_phase(j))
        if x.size == 0:
            return np.zeros(g.size), np.zeros(g.size), 0
        s = NeumaierSum(g.size)
        s2 = NeumaierSum(g.size)
        for start in range(0, x.size, _CHUNK):
            kv = evaluator.values_at(phase_vals, x[start : start + _CHUNK], float(phases[j]))
            s.add(kv.sum(axis=1))
            s2.add((kv * kv).sum(axis=1))
        return s.total, s2.total, x.size

    parts = ordered_map(reduce_phase_bucket, list(range(phases.size)), workers=workers)
    raw = NeumaierSum(g.size)
    second = NeumaierSum(g.size)
    var_sum = NeumaierSum(g.size)
    total_records = 0
    for j, (s, s2, count) in enumerate(parts):
        if count == 0:
            continue
        mean_j = s / count
        raw.add(weights[j] * mean_j)
        var_j = np.maximum(s2 / count - mean_j**2, 0.0)
        var_sum.add(weights[j] ** 2 * var_j / count)
        second.add(s2)
        total_records += count
    if total_records == 0:
        raise EmptyDataset("dataset has no records")
    raw_values = raw.total
    se_raw = np.sqrt(var_sum.total)
    norm = float(abs(np.trapezoid(raw_values, g)))
    values = raw_values / norm
    std_errors = se_raw / norm
    dist = PhaseDistribution(
        grid=g,
        values=values,
        kind=kind,
        epsilon=float(epsilon),
        psi=psi_val,
        normalization=norm,
        std_errors=std_errors,
        metadata={
            "estimator": "direct-sampling",
            "n_records": total_records,
            "normalization_covariance": "neglected",
            "band_limit": None if d_max is None else int(d_max),
        },
    )
    info = evaluator.spec_dict() if hasattr(evaluator, "spec_dict") else {"kind": "custom"}
    return EstimateResult(
        distribution=dist,
        raw_values=raw_values,
        normalization=norm,
        n_records=total_records,
        dataset_checksum=dataset.checksum(),
        kernel_info=info,
    )


# ---------------------------------------------------------------------------
# density-matrix reconstruction (end-to-end convention check)


def _pattern_phase_factors(n: int, m: int, phases: np.ndarray) -> np.ndarray:
    return np.exp(1j * (n - m) * phases)


def reconstruct_density_element(
    dataset: HomodyneDataset, n: int, m: int, pattern: PatternTable | None = None
) -> complex:
    """Monte Carlo estimate of a density-matrix element from homodyne records."""
    if dataset.n_records == 0:
        raise EmptyDataset("dataset has no records")
    if pattern is None:
        pattern = get_pattern_table(max(n, m))
    if max(n, m) > pattern.n_max:
        raise KernelMissing(f"pattern table order {pattern.n_max} below element ({n}, {m})")
    phases = dataset.phases
    weights = _phase_weights_for(dataset)
    local_elem = pattern.tables
    total = 0.0 + 0.0j
    for j, phi in enumerate(phases):
        x = np.sort(dataset.records_for_phase(j))
        if x.size == 0:
            continue
        f_vals = local_elem.interpolate(x).element(n, m)
        total += weights[j] * np.exp(1j * (n - m) * phi) * float(f_vals.sum()) / x.size
    return complex(total)


def reconstruct_density_matrix(
    dataset: HomodyneDataset, n_max: int, pattern: PatternTable | None = None
) -> np.ndarray:
    """All elements with n, m <= n_max; Hermitian by construction of the estimator."""
    if pattern is None:
        pattern = get_pattern_table(n_max)
    out = np.empty((n_max + 1, n_max + 1), dtype=complex)
    for n in range(n_max + 1):
        for m in range(n, n_max + 1):
            val = reconstruct_density_element(dataset, n, m, pattern)
            out[n, m] = val
            out[m, n] = np.conj(val)
    return out


def density_matrix_from_distributions(
    state,
    n_max: int,
    pattern: PatternTable | None = None,
    n_phases: int | None = None,
    x_points: int = 2001,
) -> np.ndarray:
    """Plug-in reconstruction from exact quadrature distributions (no Monte Carlo).

    The apparatus-phase integral is done by a midpoint rule fine enough to
    avoid aliasing between the element's phase factor and the state's
    coherences; the outcome integral by trapezoid on a wide grid.
    """
    rho = _as_density(state)
    if pattern is None:
        pattern = get_pattern_table(max(n_max, 1))
    if n_phases is None:
        n_phases = 2 * (rho.truncation + n_max) + 8
    phases = midpoint_phases(n_phases)
    grid = QuadratureGrid.for_truncation(max(rho.truncation, n_max), x_points)
    x = grid.values
    p = quadrature_distribution(rho, phases, grid)
    local = pattern.tables.interpolate(x)
    out = np.empty((n_max + 1, n_max + 1), dtype=complex)
    w_x = np.gradient(x)
    for n in range(n_max + 1):
        for m in range(n, n_max + 1):
            f_vals = local.element(n, m)
            inner = (p * (f_vals * w_x)[None, :]).sum(axis=1)
            val = (math.pi / n_phases) * np.sum(inner * np.exp(1j * (n - m) * phases))
            out[n, m] = val
            out[m, n] = np.conj(val)
    return out


def plugin_distribution(
    state,
    kind: str,
    epsilon: float,
    grid: np.ndarray | None = None,
    psi: float | None = None,
    n_max: int | None = None,
    n_phases: int | None = None,
    x_points: int = 2001,
) -> PhaseDistribution:
    """Deterministic version of the sampling formula with exact quadrature distributions.

    Closes the loop between the state-side and data-side routes without Monte
    Carlo noise: the result should match the coarse-grained distribution
    computed directly from the state.
    """
    rho = _as_density(state)
    psi_val = resolve_kind(kind, psi)
    g = default_grid(kind) if grid is None else np.asarray(grid, dtype=float)
    phase_vals = grid_to_phase_variable(kind, g)
    order = rho.truncation if n_max is None else n_max
    if n_phases is None:
        n_phases = 2 * (rho.truncation + order) + 8
    phases = midpoint_phases(n_phases)
    xgrid = QuadratureGrid.for_truncation(max(rho.truncation, order), x_points)
    x = xgrid.values
    p = quadrature_distribution(rho, phases, xgrid)
    table = get_pattern_table(order)
    evaluator = KernelEvaluator(table, float(epsilon), psi=psi_val, n_max=order)
    w_x = np.gradient(x)
    raw = NeumaierSum(g.size)
    for j, phi in enumerate(phases):
        kv = evaluator.values_at(phase_vals, x, float(phi))
        raw.add((math.pi / n_phases) * (kv @ (p[j] * w_x)))
    raw_values = raw.total
    norm = float(abs(np.trapezoid(raw_values, g)))
    return PhaseDistribution(
        grid=g,
        values=raw_values / norm,
        kind=kind,
        epsilon=float(epsilon),
        psi=psi_val,
        normalization=norm,
        metadata={"estimator": "plug-in-quadrature", "n_phases": n_phases},
    )
