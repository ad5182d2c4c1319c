"""HTTP service exposing the phase-distribution pipeline.

The service owns the expensive shared state (pattern-table caches), so a
long-running instance amortizes table construction across clients.  All
endpoints are pure functions of their request bodies; determinism is inherited
from the library.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import SGPhaseError
from ..fock import FockState, QuadratureGrid, make_coherent, make_fock, make_squeezed_vacuum, make_vacuum
from ..homodyne import DatasetHeader, HomodyneDataset, generate_dataset, midpoint_phases
from ..kernel import KernelSpec, build_kernel_table
from ..patterns import get_pattern_table
from ..phase import (
    PhaseDistribution,
    coarse_phase_distribution,
    default_grid,
    exact_phase_distribution,
    kind_domain,
)
from ..sampling import estimate_distribution
from . import schemas

app = FastAPI(
    title="sgphase",
    description="Cosine/sine phase distributions of an optical mode: exact, "
    "coarse-grained, and directly sampled from balanced-homodyne data.",
    version=__version__,
)


@app.exception_handler(SGPhaseError)
async def _domain_error_handler(request: Request, exc: SGPhaseError):
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(ValueError)
async def _value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"error": "ValueError", "detail": str(exc)})


def state_from_spec(spec: schemas.StateSpec) -> FockState:
    if spec.kind == "vacuum":
        return make_vacuum(spec.truncation or 5)
    if spec.kind == "coherent":
        return make_coherent(spec.alpha.value(), spec.truncation)
    if spec.kind == "squeezed":
        return make_squeezed_vacuum(spec.xi.value(), spec.truncation)
    return make_fock(spec.photons, spec.truncation)


def _resolve_grid(mode: str, grid: schemas.GridSpec | None) -> np.ndarray:
    if grid is None:
        return default_grid(mode)
    lo, hi = kind_domain(mode)
    start = lo if grid.start is None else grid.start
    stop = hi if grid.stop is None else grid.stop
    return np.linspace(start, stop, grid.points)


def _distribution_payload(dist: PhaseDistribution, config: dict) -> schemas.DistributionPayload:
    payload = dist.to_dict()
    payload["metadata"] = {**payload["metadata"], "config": config}
    return schemas.DistributionPayload(**payload)


@app.get("/v1/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/v1/exact", response_model=schemas.DistributionPayload)
def exact(req: schemas.ExactRequest) -> schemas.DistributionPayload:
    state = state_from_spec(req.state)
    grid = _resolve_grid(req.mode, req.grid)
    dist = exact_phase_distribution(state, kind=req.mode, grid=grid, psi=req.psi)
    return _distribution_payload(dist, req.model_dump())


@app.post("/v1/coarse", response_model=schemas.DistributionPayload)
def coarse(req: schemas.CoarseRequest) -> schemas.DistributionPayload:
    state = state_from_spec(req.state)
    grid = _resolve_grid(req.mode, req.grid)
    dist = coarse_phase_distribution(
        state, kind=req.mode, epsilon=req.epsilon, grid=grid, psi=req.psi, n_max=req.n_max
    )
    return _distribution_payload(dist, req.model_dump())


@app.post("/v1/kernel", response_model=schemas.KernelResponse)
def kernel(req: schemas.KernelRequest) -> schemas.KernelResponse:
    half = req.x_half_width or (math.sqrt(2.0 * req.n_max + 1.0) + 6.0)
    x_points = req.x_points + 1 - req.x_points % 2  # symmetric tables need an odd count
    spec = KernelSpec(
        epsilon=req.epsilon,
        psi=req.psi,
        n_max=req.n_max,
        phase_grid=np.asarray(req.phase_values, dtype=float),
        lo_phase_grid=midpoint_phases(req.lo_phase_points),
        x_grid=QuadratureGrid.symmetric(half, x_points),
    )
    pattern = get_pattern_table(req.n_max, grid=spec.x_grid, no_cache=req.no_cache)
    table = build_kernel_table(spec, pattern=pattern, workers=req.workers)
    xg = spec.x_grid.values
    slices = [
        schemas.KernelSlice(
            phase=float(pv),
            lo_phase=spec.lo_phase_grid.tolist(),
            x=xg.tolist(),
            values=table.values[i].tolist(),
        )
        for i, pv in enumerate(spec.phase_grid)
    ]
    return schemas.KernelResponse(
        slices=slices,
        tail_estimate=table.tail_estimate,
        checksum=table.checksum,
        pattern_checksum=table.pattern_checksum,
        metadata={"config": req.model_dump(), "spec": spec.as_dict()},
    )


@app.post("/v1/simulate", response_model=schemas.DatasetPayload)
def simulate(req: schemas.SimulateRequest) -> schemas.DatasetPayload:
    state = state_from_spec(req.state)
    grid = QuadratureGrid.for_truncation(state.truncation, req.grid_points)
    dataset = generate_dataset(
        state,
        n_phases=req.n_phases,
        events_per_phase=req.events_per_phase,
        eta=req.eta,
        seed=req.seed,
        grid=grid,
        workers=req.workers,
    )
    return schemas.DatasetPayload(
        header=dataset.header.as_dict(),
        records=[(float(a), float(b)) for a, b in dataset.records],
    )


@app.post("/v1/sample", response_model=schemas.EstimateResponse)
def sample(req: schemas.SampleRequest) -> schemas.EstimateResponse:
    head = dict(req.dataset.header)
    head.pop("format_version", None)
    head["phase_grid"] = tuple(head.get("phase_grid", ()))
    dataset = HomodyneDataset(
        header=DatasetHeader(**head),
        records=np.asarray(req.dataset.records, dtype=float),
    )
    grid = _resolve_grid(req.mode, req.grid)
    band = "auto" if req.band_limit is None else req.band_limit
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        result = estimate_distribution(
            dataset,
            kind=req.mode,
            epsilon=req.epsilon,
            grid=grid,
            psi=req.psi,
            n_max=req.n_max,
            band_limit=band,
            workers=req.workers,
        )
        caught = [str(w.message) for w in wlist]
    config = req.model_dump(exclude={"dataset"})
    config["dataset_header"] = req.dataset.header
    return schemas.EstimateResponse(
        distribution=_distribution_payload(result.distribution, config),
        raw_values=result.raw_values.tolist(),
        normalization=result.normalization,
        n_records=result.n_records,
        dataset_checksum=result.dataset_checksum,
        kernel=result.kernel_info,
        warnings=caught,
    )
