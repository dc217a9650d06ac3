"""Pydantic request/response models for the HTTP service.

Streams travel as canonical CSV text (the same format the CLI reads and
writes); trained models travel as their JSON persistence documents.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..generators import StreamRecipe
from ..harness import Grid


class KernelModel(BaseModel):
    kind: str = "linear"
    sigma: float = 1.0


class HyperModel(BaseModel):
    C: float = 10.0
    kernel: KernelModel = KernelModel()
    gamma: float = 0.0
    lam: float = Field(default=0.0, alias="lambda")

    model_config = {"populate_by_name": True}

    def to_dict(self) -> dict:
        return {"C": self.C, "kernel": self.kernel.model_dump(),
                "gamma": self.gamma, "lambda": self.lam}


class RecipeModel(BaseModel):
    base: str = "ds1"
    n: int = 500
    m: int = 25
    r: float = 0.05
    noise_sd: float = 0.1
    d: int = 2
    offset_deg: float = 2.0
    total_rotation: float = 1.5707963267948966
    margin_exclusion: float = 0.0
    label_noise: float = 0.0
    halve: bool = False
    shared_draws: bool = False

    def to_recipe(self) -> StreamRecipe:
        return StreamRecipe(**self.model_dump())


class GridModel(BaseModel):
    C: list[float] = list(Grid().C_values)
    sigma: list[float] = list(Grid().sigma_values)
    gamma: list[float] = list(Grid().gamma_values)
    lam: list[float] = Field(default=list(Grid().lambda_values), alias="lambda")

    model_config = {"populate_by_name": True}

    def to_grid(self) -> Grid:
        return Grid(C_values=tuple(self.C), sigma_values=tuple(self.sigma),
                    gamma_values=tuple(self.gamma), lambda_values=tuple(self.lam))


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    recipe: RecipeModel
    seed: int = 0


class GenerateResponse(BaseModel):
    csv: str
    rows: int
    k: int
    m: int
    d: int


class FitRequest(BaseModel):
    stream_csv: str
    hyper: HyperModel


class FitResponse(BaseModel):
    model: dict
    n: int
    kkt_gap: float
    iterations: int
    warnings: list[str]


class SamplePoint(BaseModel):
    task: int
    time: int
    features: list[float]


class PredictRequest(BaseModel):
    model: dict
    samples: list[SamplePoint]


class PredictResponse(BaseModel):
    scores: list[float]
    labels: list[int]


class EvalRequest(BaseModel):
    model: dict
    stream_csv: str


class EvalResponse(BaseModel):
    accuracy: dict[str, float]
    mean_accuracy: float
    n: int


class BenchSyntheticRequest(BaseModel):
    recipe: RecipeModel
    grid: GridModel = GridModel()
    kernel: str = "linear"
    methods: list[str] = ["dc", "single_chain"]
    n_runs: int = 10
    master_seed: int = 0
    jobs: int = 1
    sweep_field: Optional[str] = None  # e.g. "r" or "offset_deg"
    sweep_values: Optional[list[float]] = None


class BenchPrequentialRequest(BaseModel):
    stream_csv: str  # k-task batched stream
    N: int = 3
    grid: GridModel = GridModel()
    kernel: str = "linear"
    methods: list[str] = ["dc", "single_chain"]
    jobs: int = 1


class LambdaSweepRequest(BaseModel):
    r_values: list[float]
    C: float = 10.0
    sigma: float = 1.0
    gamma_values: Optional[list[float]] = None
    lambda_values: Optional[list[float]] = None
    n_runs: int = 10
    master_seed: int = 0
    n: int = 500
    m: int = 25
    jobs: int = 1


class ReportResponse(BaseModel):
    report: dict
    plot_rows: Optional[list[dict]] = None
