"""HTTP/JSON facade over the engine.

Stateless compute endpoints under /v1 plus a read-only preset store; every
response is an envelope with exactly one of ``result``/``error`` set and the
request echoed back. Grid responses are generated row by row and streamed.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .design import (
    Covariates,
    CorrStructure,
    DesignKind,
    DesignSpec,
    ErrorModel,
    Estimand,
    EstimatorSpec,
    Family,
    validate_design,
)
from .errors import PanelPowerError
from .power import PowerQuery, design_effect, mde, required_clusters
from .presets import PRESETS
from .variance import compute_variance

__all__ = ["create_app", "app"]

GRID_LIMIT = 10_000
_UNPROCESSABLE = {"NONPOSITIVE_DF", "NO_CONVERGENCE"}


class DesignModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    P: int
    S: list[int]
    M_T_k: list[float]
    M_C_k: list[float] | None = None
    N: float
    times: list[float] | None = None
    K: int | None = None

    def to_spec(self) -> DesignSpec:
        return DesignSpec(
            P=self.P,
            S=tuple(self.S),
            M_T_k=tuple(self.M_T_k),
            M_C_k=tuple(self.M_C_k) if self.M_C_k is not None else tuple(0.0 for _ in self.S),
            N=self.N,
            times=tuple(self.times) if self.times else None,
            K=self.K,
        )


class ErrorModelModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ICC_theta: float
    rho: float
    corr_structure: str = "AR1"
    design_kind: str = "CROSS_SECTIONAL"
    psi: float = 0.0

    def to_error_model(self) -> ErrorModel:
        try:
            structure = CorrStructure(self.corr_structure)
            kind = DesignKind(self.design_kind)
        except ValueError as exc:
            raise PanelPowerError("PERIOD_RANGE", str(exc), "error_model")
        return ErrorModel(
            ICC_theta=self.ICC_theta, rho=self.rho,
            corr_structure=structure, design_kind=kind, psi=self.psi,
        )


class EstimandModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: str = "POOLED"
    l: int | None = None
    q: int | None = None


class CovariatesModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    R2_YX: float = 0.0
    R2_TX: float = 0.0
    v: int = 0


class EstimatorModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    family: str
    estimand: EstimandModel = EstimandModel()
    covariates: CovariatesModel | None = None

    def to_estimator(self) -> EstimatorSpec:
        try:
            fam = Family(self.family)
        except ValueError as exc:
            raise PanelPowerError("PERIOD_RANGE", f"unknown family {self.family!r}", "estimator")
        e = self.estimand
        if e.kind == "POOLED":
            estimand = Estimand.pooled()
        elif e.kind == "EXPOSURE":
            if e.l is None:
                raise PanelPowerError("PERIOD_RANGE", "EXPOSURE estimand needs l", "estimator")
            estimand = Estimand.exposure(e.l)
        elif e.kind == "CALENDAR":
            if e.q is None:
                raise PanelPowerError("PERIOD_RANGE", "CALENDAR estimand needs q", "estimator")
            estimand = Estimand.calendar(e.q)
        else:
            raise PanelPowerError("PERIOD_RANGE", f"unknown estimand kind {e.kind!r}", "estimator")
        cov = None
        if self.covariates is not None:
            cov = Covariates(self.covariates.R2_YX, self.covariates.R2_TX, self.covariates.v)
        return EstimatorSpec(fam, estimand, cov)


class QueryModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    alpha: float = 0.05
    power: float = Field(0.8, alias="lambda")
    mde: float | None = None

    def to_query(self, need_target: bool = False) -> PowerQuery:
        target = self.mde if self.mde is not None else (0.20 if need_target else None)
        return PowerQuery(alpha=self.alpha, power=self.power, mde_target=target)


class ComputeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    design: DesignModel
    error_model: ErrorModelModel
    estimator: EstimatorModel
    query: QueryModel = QueryModel()


class DesignEffectRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    design_a: DesignModel
    error_model_a: ErrorModelModel
    design_b: DesignModel
    error_model_b: ErrorModelModel
    estimator: EstimatorModel
    query: QueryModel = QueryModel()


class SweepModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    parameter: str
    values: list[float]


class GridRequest(ComputeRequest):
    sweep: SweepModel
    target: str = "clusters"  # or "mde"


def _check_finite(obj: Any, path: str = "result") -> None:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise PanelPowerError("NUMERIC_GUARD", f"non-finite value at {path}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _envelope(request_body: dict, result: Any = None, error: dict | None = None,
              warnings: list[str] | None = None) -> dict:
    return {
        "request": request_body,
        "result": result,
        "error": error,
        "warnings": warnings or [],
    }


def _error_response(request_body: dict, exc: PanelPowerError, status: int | None = None) -> JSONResponse:
    code = exc.code
    if status is None:
        status = 422 if code in _UNPROCESSABLE else 400
    body = _envelope(request_body, error={"code": code, "message": exc.message, "field": exc.field})
    return JSONResponse(status_code=status, content=body)


def _grid_value(base: ComputeRequest, parameter: str, value: float, target: str) -> dict:
    req = base.model_copy(deep=True)
    if parameter == "rho":
        req.error_model.rho = value
    elif parameter == "psi":
        req.error_model.psi = value
    elif parameter == "ICC_theta":
        req.error_model.ICC_theta = value
    elif parameter == "N":
        req.design.N = value
    elif parameter == "mde":
        req.query.mde = value
    elif parameter == "l":
        req.estimator.estimand = EstimandModel(kind="EXPOSURE", l=int(value))
    elif parameter == "q":
        req.estimator.estimand = EstimandModel(kind="CALENDAR", q=int(value))
    elif parameter == "M":
        scale = value / sum(req.design.M_T_k + (req.design.M_C_k or []))
        req.design.M_T_k = [m * scale for m in req.design.M_T_k]
        if req.design.M_C_k:
            req.design.M_C_k = [m * scale for m in req.design.M_C_k]
    else:
        raise PanelPowerError("PERIOD_RANGE", f"unknown sweep parameter {parameter!r}", "sweep")
    est = req.estimator.to_estimator()
    design = validate_design(req.design.to_spec(), est)
    err = req.error_model.to_error_model()
    row: dict[str, Any] = {parameter: value}
    if target == "mde" or parameter == "M":
        res = mde(design, err, est, req.query.to_query())
        row.update({"mde": res.mde, "df": res.df, "factor": res.factor, "variance": res.variance.total})
    else:
        res = required_clusters(design, err, est, req.query.to_query(need_target=True))
        row.update({"M": res.M, "m_continuous": res.m_continuous, "df": res.df,
                    "factor": res.factor, "achieved_mde": res.achieved_mde})
    _check_finite(row)
    return row


def create_app(cors_origins: str = "*", ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="panelpower", version=__version__)
    origins = [o.strip() for o in cors_origins.split(",")] if cors_origins else ["*"]
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(PanelPowerError)
    async def _panelpower_error(request: Request, exc: PanelPowerError):
        body = None
        try:
            body = json.loads(await request.body())
        except Exception:
            body = None
        return _error_response(body, exc)

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/v1/presets")
    def presets() -> dict:
        return {"presets": PRESETS}

    @app.post("/v1/mde")
    def post_mde(req: ComputeRequest) -> dict:
        est = req.estimator.to_estimator()
        design = validate_design(req.design.to_spec(), est)
        res = mde(design, req.error_model.to_error_model(), est, req.query.to_query())
        payload = res.to_dict()
        _check_finite(payload)
        return _envelope(req.model_dump(by_alias=True), payload, warnings=list(res.warnings))

    @app.post("/v1/clusters")
    def post_clusters(req: ComputeRequest) -> dict:
        est = req.estimator.to_estimator()
        design = validate_design(req.design.to_spec(), est)
        res = required_clusters(design, req.error_model.to_error_model(), est, req.query.to_query(need_target=True))
        payload = res.to_dict()
        _check_finite(payload)
        return _envelope(req.model_dump(by_alias=True), payload, warnings=list(res.warnings))

    @app.post("/v1/variance")
    def post_variance(req: ComputeRequest) -> dict:
        est = req.estimator.to_estimator()
        design = validate_design(req.design.to_spec(), est)
        vb = compute_variance(design, req.error_model.to_error_model(), est)
        payload = vb.to_dict()
        _check_finite(payload)
        return _envelope(req.model_dump(by_alias=True), payload)

    @app.post("/v1/design-effect")
    def post_design_effect(req: DesignEffectRequest) -> dict:
        est = req.estimator.to_estimator()
        design_a = validate_design(req.design_a.to_spec(), est)
        design_b = validate_design(req.design_b.to_spec(), est)
        de = design_effect(
            design_a, req.error_model_a.to_error_model(),
            design_b, req.error_model_b.to_error_model(),
            est, req.query.to_query(need_target=True),
        )
        _check_finite(de)
        return _envelope(req.model_dump(by_alias=True), {"design_effect": de})

    @app.post("/v1/grid")
    def post_grid(req: GridRequest) -> StreamingResponse:
        if len(req.sweep.values) > GRID_LIMIT:
            return JSONResponse(
                status_code=413,
                content=_envelope(req.model_dump(by_alias=True), error={
                    "code": "GRID_TOO_LARGE",
                    "message": f"sweep of {len(req.sweep.values)} points exceeds the {GRID_LIMIT}-point cap",
                    "field": "sweep",
                }),
            )
        if req.target not in ("clusters", "mde"):
            raise PanelPowerError("PERIOD_RANGE", f"grid target must be 'clusters' or 'mde', got {req.target!r}", "target")
        base = ComputeRequest(design=req.design, error_model=req.error_model,
                              estimator=req.estimator, query=req.query)
        echo = json.dumps(req.model_dump(by_alias=True))

        def rows() -> Iterator[str]:
            yield '{"request": ' + echo + ', "error": null, "warnings": [], "result": {"rows": ['
            for i, value in enumerate(req.sweep.values):
                try:
                    row = _grid_value(base, req.sweep.parameter, value, req.target)
                except PanelPowerError as exc:
                    row = {req.sweep.parameter: value, "error": exc.code}
                yield (", " if i else "") + json.dumps(row)
            yield "]}}"

        return StreamingResponse(rows(), media_type="application/json")

    ui = ui_dir or os.environ.get("PANELPOWER_UI_DIR")
    if ui is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui = str(candidate) if candidate.is_dir() else None
    if ui and Path(ui).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    return app


app = create_app()
