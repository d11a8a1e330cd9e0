"""FastAPI service exposing the selection pipeline to multiple clients."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

import numpy as np

from . import __version__
from .kernels import KernelSpec, mmd_between_embeddings
from .model import DEFAULT_LABEL_SCALE, LabeledPoint, RunConfig
from .pipeline import run_pipeline
from .wasserstein import euclidean_costs, transport_min_cost

app = FastAPI(title="preftransfer", version=__version__)


class SourcePoint(BaseModel):
    item_id: str
    features: list[float]
    label: int = Field(ge=0, le=1)


class CandidateItem(BaseModel):
    item_id: str
    features: list[float]


class SelectRequest(BaseModel):
    source: list[SourcePoint]
    candidates: list[CandidateItem]
    k: int = Field(ge=1)
    metric: str = "mmd"
    sigma: float = 1.0
    label_scale: float = DEFAULT_LABEL_SCALE
    fw_iters: int = 1000
    rounding_trials: int = 100
    seed: int = 0
    exclusive_labels: bool = False


class SelectedItem(BaseModel):
    item_id: str
    label: int


class SelectResponse(BaseModel):
    selected: list[SelectedItem]
    continuous_value: float
    achieved_distance: float
    metric: str


class DistanceRequest(BaseModel):
    first: list[SourcePoint]
    second: list[SourcePoint]
    metric: str = "mmd"
    sigma: float = 1.0
    label_scale: float = DEFAULT_LABEL_SCALE


class DistanceResponse(BaseModel):
    distance: float
    metric: str


def _embed(points: list[SourcePoint], label_scale: float) -> np.ndarray:
    return np.stack(
        [LabeledPoint(p.item_id, np.array(p.features), p.label, label_scale).embedding
         for p in points]
    )


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/select", response_model=SelectResponse)
def select_endpoint(req: SelectRequest) -> SelectResponse:
    if not req.source or not req.candidates:
        raise HTTPException(400, "source and candidates must be nonempty")
    if req.metric not in ("mmd", "w1"):
        raise HTTPException(400, f"unknown metric {req.metric!r}")
    if req.k > 2 * len(req.candidates):
        raise HTTPException(400, "k exceeds the doubled candidate count")
    dims = {len(p.features) for p in req.source} | {len(c.features) for c in req.candidates}
    if len(dims) != 1:
        raise HTTPException(400, "inconsistent feature dimensions")

    descriptors = []
    cand_rows = []
    for item in req.candidates:
        for label in (1, 0):
            p = LabeledPoint(item.item_id, np.array(item.features), label, req.label_scale)
            cand_rows.append(p.embedding)
            descriptors.append((item.item_id, label))
    cand = np.stack(cand_rows)
    src = _embed(req.source, req.label_scale)

    config = RunConfig(
        k=req.k, fw_iters=req.fw_iters, rounding_trials=req.rounding_trials,
        seed=req.seed, metric=req.metric, sigma=req.sigma,
        label_scale=req.label_scale, exclusive_labels=req.exclusive_labels,
    )
    result = run_pipeline(cand, src, config)
    return SelectResponse(
        selected=[
            SelectedItem(item_id=descriptors[j][0], label=descriptors[j][1])
            for j in result.selection.sorted_indices()
        ],
        continuous_value=result.continuous_value,
        achieved_distance=result.achieved_distance,
        metric=req.metric,
    )


@app.post("/distance", response_model=DistanceResponse)
def distance_endpoint(req: DistanceRequest) -> DistanceResponse:
    if not req.first or not req.second:
        raise HTTPException(400, "both point sets must be nonempty")
    xs = _embed(req.first, req.label_scale)
    ys = _embed(req.second, req.label_scale)
    if xs.shape[1] != ys.shape[1]:
        raise HTTPException(400, "inconsistent feature dimensions")
    if req.metric == "mmd":
        dist = mmd_between_embeddings(xs, ys, KernelSpec(sigma=req.sigma))
    elif req.metric == "w1":
        costs = euclidean_costs(xs, ys)
        w_x = np.full(xs.shape[0], 1.0 / xs.shape[0])
        w_y = np.full(ys.shape[0], 1.0 / ys.shape[0])
        dist, _ = transport_min_cost(w_x, w_y, costs.costs)
    else:
        raise HTTPException(400, f"unknown metric {req.metric!r}")
    return DistanceResponse(distance=float(dist), metric=req.metric)
