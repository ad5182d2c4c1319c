"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class ComplexParam(BaseModel):
    re: float = 0.0
    im: float = 0.0

    def value(self) -> complex:
        return complex(self.re, self.im)


class StateSpec(BaseModel):
    """Signal-state descriptor accepted by every endpoint."""

    kind: Literal["vacuum", "coherent", "squeezed", "fock"]
    alpha: Optional[ComplexParam] = Field(None, description="Coherent amplitude")
    xi: Optional[ComplexParam] = Field(None, description="Squeeze parameter")
    photons: Optional[int] = Field(None, ge=0, description="Photon number for a Fock state")
    truncation: Optional[int] = Field(None, ge=0, description="Photon-number cutoff")

    @model_validator(mode="after")
    def _check_fields(self):
        if self.kind == "coherent" and self.alpha is None:
            raise ValueError("coherent state needs alpha")
        if self.kind == "squeezed" and self.xi is None:
            raise ValueError("squeezed state needs xi")
        if self.kind == "fock" and self.photons is None:
            raise ValueError("fock state needs photons")
        return self


class GridSpec(BaseModel):
    start: Optional[float] = None
    stop: Optional[float] = None
    points: int = Field(101, ge=2, le=100001)


class ExactRequest(BaseModel):
    state: StateSpec
    mode: Literal["cosine", "sine", "general"] = "cosine"
    psi: Optional[float] = None
    grid: Optional[GridSpec] = None


class CoarseRequest(ExactRequest):
    epsilon: float = Field(..., gt=0.0)
    n_max: Optional[int] = Field(None, ge=1)


class DistributionPayload(BaseModel):
    grid: list[float]
    values: list[float]
    std_errors: Optional[list[float]] = None
    kind: str
    epsilon: float
    psi: float
    normalization: float
    metadata: dict = Field(default_factory=dict)


class KernelRequest(BaseModel):
    phase_values: list[float] = Field(..., min_length=1)
    epsilon: float = Field(..., gt=0.0)
    psi: float = 0.0
    n_max: int = Field(64, ge=1, le=320)
    x_half_width: Optional[float] = Field(None, gt=0.0)
    x_points: int = Field(801, ge=3, le=20001)
    lo_phase_points: int = Field(30, ge=1, le=1024)
    no_cache: bool = False
    workers: int = Field(1, ge=1, le=64)


class KernelSlice(BaseModel):
    phase: float
    lo_phase: list[float]
    x: list[float]
    values: list[list[float]]  # [lo_phase][x]


class KernelResponse(BaseModel):
    slices: list[KernelSlice]
    tail_estimate: float
    checksum: str
    pattern_checksum: str
    metadata: dict = Field(default_factory=dict)


class SimulateRequest(BaseModel):
    state: StateSpec
    n_phases: int = Field(30, ge=1, le=4096)
    events_per_phase: int = Field(10000, ge=1, le=10_000_000)
    eta: float = Field(1.0, gt=0.0, le=1.0)
    seed: int = 0
    grid_points: int = Field(4001, ge=101, le=100001)
    workers: int = Field(1, ge=1, le=64)


class DatasetPayload(BaseModel):
    header: dict
    records: list[tuple[float, float]]


class SampleRequest(BaseModel):
    dataset: DatasetPayload
    mode: Literal["cosine", "sine", "general"] = "cosine"
    epsilon: float = Field(..., gt=0.0)
    psi: Optional[float] = None
    grid: Optional[GridSpec] = None
    n_max: Optional[int] = Field(None, ge=1, le=320)
    band_limit: Optional[int] = Field(None, ge=0, description="override the automatic Nyquist band limit")
    workers: int = Field(1, ge=1, le=64)


class EstimateResponse(BaseModel):
    distribution: DistributionPayload
    raw_values: list[float]
    normalization: float
    n_records: int
    dataset_checksum: str
    kernel: dict
    warnings: list[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
