"""Pydantic request/response models for the analysis service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from boltscope.excitation import ExcitationSpec


class ExcitationSpecIn(BaseModel):
    kind: Literal["tone", "fm", "sweep", "bandnoise"]
    amplitude: float = 1.0
    duration: float = 1.0
    freq: Optional[float] = None
    carrier_freq: Optional[float] = None
    mod_freq: Optional[float] = None
    deviation: Optional[float] = None
    f_start: Optional[float] = None
    f_end: Optional[float] = None
    f_lo: Optional[float] = None
    f_hi: Optional[float] = None
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        # delegate the kind-specific validation to the domain type
        self.to_spec()
        return self

    def to_spec(self) -> ExcitationSpec:
        return ExcitationSpec(**self.model_dump())


class GenerateRequest(BaseModel):
    spec: ExcitationSpecIn
    sample_rate: float = 25600.0
    format: Literal["wav", "csv"] = "wav"


class GenerateResponse(BaseModel):
    format: Literal["wav", "csv"]
    sample_rate: float
    n_samples: int
    duration_s: float
    derived: dict[str, float]
    content_base64: str


class SimParamsIn(BaseModel):
    integrator_step: float = 1.0 / 25600.0
    duration: Optional[float] = None
    output_sample_rate: float = 25600.0
    noise_floor_rms: float = 1.0e-4


class JointModelIn(BaseModel):
    modal_mass: float = 1.0
    modal_stiffness: Optional[float] = None  # default: tuned to 130 Hz for the mass
    modal_damping_ratio: float = 0.02
    slip_force_at_full_preload: float = 120.0
    clearance_at_zero_preload: float = 2.0e-4
    contact_stiffness_ratio: float = 0.55


class SimulateRequest(BaseModel):
    preload_fractions: list[float] = Field(default=[0.0, 0.2, 0.4, 0.8])
    seeds: list[int] = Field(default=[0])
    protocol: Optional[list[ExcitationSpecIn]] = None  # None: default tone + FM grid
    excitation_sample_rate: float = 25600.0
    sim: SimParamsIn = Field(default_factory=SimParamsIn)
    model: JointModelIn = Field(default_factory=JointModelIn)


class RatioIn(BaseModel):
    l: int = Field(ge=2)
    value_db: float
    channel: str = ""


class ClassifyRequest(BaseModel):
    ratios: list[RatioIn]
    threshold_db: float = 6.0
    table: Optional[dict] = None  # RatioTable.to_dict payload; None: bundled table


class ClassificationOut(BaseModel):
    state: str
    torque_nm: float
    margin_db: float
    per_l_distance: dict[str, float]


class ClassifyResponse(BaseModel):
    classification: ClassificationOut
    alarm: bool
    verdict: Literal["tight", "alarm"]
    table_id: str


class HealthResponse(BaseModel):
    status: str
    version: str
