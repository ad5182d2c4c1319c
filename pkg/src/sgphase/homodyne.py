"""Seeded balanced-homodyne simulator and dataset file formats.

Events are (apparatus phase, scaled field-strength outcome) pairs drawn by
inverse-CDF sampling from the state's quadrature distribution, tabulated on a
fine grid.  Apparatus phases sit at midpoints of a uniform division of
[0, pi), which matches the pi/N weights the estimator applies.

Detection loss (eta < 1) is modeled by adding Gaussian noise of variance
(1 - eta) / (2 eta) in scaled units to each ideal outcome, which is exactly
the characteristic-function smearing associated with s = 1 - 1/eta.  Kernels
for lossy data are out of scope, so such datasets trigger a bias warning when
estimated from.

Reproducibility: each phase owns an independent counter-based generator
(Philox) keyed from the master seed and the phase index, so regeneration is
bit-identical for any worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import checksum_of, ordered_map
from .errors import GridTooNarrow
from .fock import F_SCALE, DensityMatrix, FockState, QuadratureGrid, _as_density, quadrature_distribution

DATASET_FORMAT_VERSION = 1
DEFAULT_CDF_POINTS = 4001
MASS_DEFICIT_LIMIT = 1e-8


@dataclass(frozen=True)
class DatasetHeader:
    state: dict
    n_phases: int
    events_per_phase: int
    eta: float = 1.0
    rng_seed: int = 0
    f_scale: float = F_SCALE
    cdf_grid: dict = field(default_factory=dict)
    phase_grid: tuple = ()
    grid_kind: str = "midpoint"
    format_version: int = DATASET_FORMAT_VERSION

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.n_phases < 1 or self.events_per_phase < 1:
            raise ValueError("n_phases and events_per_phase must be >= 1")

    def as_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "state": self.state,
            "f_scale": self.f_scale,
            "eta": self.eta,
            "n_phases": self.n_phases,
            "events_per_phase": self.events_per_phase,
            "rng_seed": self.rng_seed,
            "cdf_grid": self.cdf_grid,
            "phase_grid": list(self.phase_grid),
            "grid_kind": self.grid_kind,
        }


@dataclass(frozen=True)
class HomodyneDataset:
    header: DatasetHeader
    records: np.ndarray  # shape (N, 2): columns (phi, x)

    def __post_init__(self):
        r = np.asarray(self.records, dtype=float)
        if r.ndim != 2 or r.shape[1] != 2:
            raise ValueError("records must have shape (N, 2)")
        r.setflags(write=False)
        object.__setattr__(self, "records", r)

    @property
    def n_records(self) -> int:
        return self.records.shape[0]

    @property
    def phases(self) -> np.ndarray:
        return np.asarray(self.header.phase_grid, dtype=float)

    def records_for_phase(self, j: int) -> np.ndarray:
        phi = self.phases[j]
        mask = self.records[:, 0] == phi
        return self.records[mask, 1]

    def checksum(self) -> str:
        return checksum_of(self.header.as_dict(), self.records)


def midpoint_phases(n_phases: int) -> np.ndarray:
    """Apparatus phases at interval midpoints, avoiding double weight at 0 and pi."""
    return (np.arange(n_phases) + 0.5) * math.pi / n_phases


def _tabulated_cdf(state, phi: float, grid: QuadratureGrid) -> tuple[np.ndarray, np.ndarray]:
    x = grid.values
    p = quadrature_distribution(state, phi, x)
    mass = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))))
    deficit = 1.0 - mass[-1]
    if deficit > MASS_DEFICIT_LIMIT:
        raise GridTooNarrow(
            f"probability mass {deficit:.2e} outside the CDF grid exceeds {MASS_DEFICIT_LIMIT:.0e}"
        )
    return x, mass / mass[-1]


def sample_quadrature(
    state,
    phi: float,
    count: int,
    rng: np.random.Generator,
    grid: QuadratureGrid | None = None,
) -> np.ndarray:
    """Draw quadrature outcomes at apparatus phase phi by inverse-CDF on a fine grid."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rho = _as_density(state)
    if grid is None:
        grid = QuadratureGrid.for_truncation(rho.truncation, DEFAULT_CDF_POINTS)
    x, cdf = _tabulated_cdf(rho, phi, grid)
    u = rng.random(count)
    return np.interp(u, cdf, x)


def _phase_generator(seed: int, phase_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(phase_index),))
    return np.random.Generator(np.random.Philox(ss))


def generate_dataset(
    state,
    n_phases: int = 30,
    events_per_phase: int = 10000,
    eta: float = 1.0,
    seed: int = 0,
    grid: QuadratureGrid | None = None,
    workers: int = 1,
) -> HomodyneDataset:
    """Simulate a full phase-stepped acquisition for the given state."""
    rho = _as_density(state)
    if grid is None:
        grid = QuadratureGrid.for_truncation(rho.truncation, DEFAULT_CDF_POINTS)
    phases = midpoint_phases(n_phases)
    smear = math.sqrt((1.0 - eta) / (2.0 * eta)) if eta < 1.0 else 0.0

    def draw(j: int) -> np.ndarray:
        rng = _phase_generator(seed, j)
        x = sample_quadrature(rho, phases[j], events_per_phase, rng, grid)
        if smear > 0.0:
            x = x + rng.normal(0.0, smear, size=x.size)
        return x

    samples = ordered_map(draw, list(range(n_phases)), workers=workers)
    records = np.empty((n_phases * events_per_phase, 2))
    for j, x in enumerate(samples):
        rows = slice(j * events_per_phase, (j + 1) * events_per_phase)
        records[rows, 0] = phases[j]
        records[rows, 1] = x
    descriptor = dict(rho.descriptor) or {"kind": "custom", "truncation": rho.truncation}
    descriptor.setdefault("truncation", rho.truncation)
    header = DatasetHeader(
        state=descriptor,
        n_phases=n_phases,
        events_per_phase=events_per_phase,
        eta=float(eta),
        rng_seed=int(seed),
        cdf_grid=grid.as_dict(),
        phase_grid=tuple(float(p) for p in phases),
    )
    return HomodyneDataset(header=header, records=records)


# ---------------------------------------------------------------------------
# file formats


def write_jsonl(dataset: HomodyneDataset, path: str | Path) -> None:
    """Header object on the first line, then one {"phi": ..., "x": ...} record per line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "header", **dataset.header.as_dict()}) + "\n")
        for phi, x in dataset.records:
            fh.write(f'{{"phi": {float(phi)!r}, "x": {float(x)!r}}}\n')


def read_jsonl(path: str | Path) -> HomodyneDataset:
    with open(path) as fh:
        header_line = fh.readline()
        head = json.loads(header_line)
        if head.pop("type", None) != "header":
            raise ValueError("first line must be the dataset header object")
        records = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            records.append((rec["phi"], rec["x"]))
    return _assemble(head, np.asarray(records, dtype=float))


def write_csv(dataset: HomodyneDataset, path: str | Path) -> None:
    """CSV alternative: a commented JSON header line, then phi,x rows."""
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(dataset.header.as_dict()) + "\n")
        fh.write("phi,x\n")
        for phi, x in dataset.records:
            fh.write(f"{float(phi)!r},{float(x)!r}\n")


def read_csv(path: str | Path) -> HomodyneDataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("CSV dataset must start with a '# {json header}' line")
        head = json.loads(first[1:].strip())
        fh.readline()  # column names
        records = np.loadtxt(fh, delimiter=",", ndmin=2)
    return _assemble(head, records)


def _assemble(head: dict, records: np.ndarray) -> HomodyneDataset:
    head = dict(head)
    head.pop("format_version", None)
    f_scale = float(head.pop("f_scale", F_SCALE))
    phase_grid = tuple(float(p) for p in head.pop("phase_grid", ()))
    header = DatasetHeader(f_scale=F_SCALE, phase_grid=phase_grid, **head)
    if records.size and not math.isclose(f_scale, F_SCALE, rel_tol=1e-12):
        # stored outcomes are raw field strengths in another scaling; convert to x
        records = records.copy()
        records[:, 1] /= math.sqrt(2.0) * f_scale
    return HomodyneDataset(header=header, records=records)


def read_dataset(path: str | Path) -> HomodyneDataset:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_jsonl(path)


def write_dataset(dataset: HomodyneDataset, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_csv(dataset, path)
    else:
        write_jsonl(dataset, path)
