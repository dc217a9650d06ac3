"""HTTP service wrapping the library: generation, fitting, prediction,
evaluation, and the benchmark protocols.

Error contract: invalid inputs surface as 400 with
``{"detail": {"kind": "input", ...}}``; numeric/convergence failures as
500 with ``kind: "numeric"`` (plus the residual gap when available).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..datatypes import HyperParams, stream_from_csv_text, stream_to_csv_text
from ..errors import ConvergenceError, InputError, NumericError
from ..harness import (accuracy_by_task, run_prequential, run_synthetic_protocol,
                       sweep_optimal_lambda, sweep_synthetic)
from ..svm import decision_batch, fit, model_from_doc, model_to_doc
from ..coupling import window_of
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="couplestream", version=__version__)

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError):
        return JSONResponse(status_code=400, content={"detail": {"kind": "input", "message": str(exc)}})

    @app.exception_handler(NumericError)
    async def _numeric_error(request: Request, exc: NumericError):
        detail = {"kind": "numeric", "message": str(exc)}
        if isinstance(exc, ConvergenceError):
            detail["gap"] = exc.gap
            detail["iterations"] = exc.iterations
        return JSONResponse(status_code=500, content={"detail": detail})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        stream = req.recipe.to_recipe().make(req.seed)
        return schemas.GenerateResponse(csv=stream_to_csv_text(stream), rows=stream.n,
                                        k=stream.k, m=stream.m, d=stream.d)

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit_endpoint(req: schemas.FitRequest):
        stream = stream_from_csv_text(req.stream_csv)
        hyper = HyperParams.from_dict(req.hyper.to_dict())
        model = fit(stream, hyper)
        return schemas.FitResponse(model=model_to_doc(model), n=stream.n,
                                   kkt_gap=model.kkt_gap, iterations=model.iterations,
                                   warnings=list(model.warnings))

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict_endpoint(req: schemas.PredictRequest):
        model = model_from_doc(req.model)
        if not req.samples:
            return schemas.PredictResponse(scores=[], labels=[])
        for s in req.samples:
            if not 1 <= s.task <= model.k:
                raise InputError(f"task {s.task} out of range 1..{model.k}")
            if s.time < 1:
                raise InputError(f"time must be >= 1, got {s.time}")
            if len(s.features) != model.d:
                raise InputError(f"expected {model.d} features, got {len(s.features)}")
        X = np.array([s.features for s in req.samples])
        windows = np.array([window_of(s.task, min(s.time, model.m), model.k) for s in req.samples])
        scores = decision_batch(model, windows, X)
        labels = np.where(scores >= 0, 1, -1)
        return schemas.PredictResponse(scores=scores.tolist(), labels=labels.tolist())

    @app.post("/evaluate", response_model=schemas.EvalResponse)
    def evaluate_endpoint(req: schemas.EvalRequest):
        model = model_from_doc(req.model)
        stream = stream_from_csv_text(req.stream_csv)
        if stream.k != model.k:
            raise InputError(f"task-count mismatch: stream has {stream.k}, model has {model.k}")
        if stream.d != model.d:
            raise InputError(f"dimension mismatch: stream has {stream.d}, model has {model.d}")
        windows = model.k * (np.minimum(stream.time, model.m) - 1) + stream.task
        scores = decision_batch(model, windows, stream.X)
        acc = accuracy_by_task(scores, stream.y, stream.task)
        mean_acc = float(np.mean(list(acc.values())))
        return schemas.EvalResponse(accuracy={str(t): a for t, a in acc.items()},
                                    mean_accuracy=mean_acc, n=stream.n)

    @app.post("/bench/synthetic", response_model=schemas.ReportResponse)
    def bench_synthetic(req: schemas.BenchSyntheticRequest):
        recipe = req.recipe.to_recipe()
        grid = req.grid.to_grid()
        if req.sweep_field:
            if not req.sweep_values:
                raise InputError("sweep_field given without sweep_values")
            reports, plot_rows = sweep_synthetic(recipe, req.sweep_field, req.sweep_values,
                                                 grid, req.kernel, methods=tuple(req.methods),
                                                 n_runs=req.n_runs, master_seed=req.master_seed,
                                                 jobs=req.jobs)
            return schemas.ReportResponse(report={"kind": "synthetic_sweep",
                                                  "reports": [r.to_dict() for r in reports]},
                                          plot_rows=plot_rows)
        rep = run_synthetic_protocol(recipe, grid, req.kernel, methods=tuple(req.methods),
                                     n_runs=req.n_runs, master_seed=req.master_seed, jobs=req.jobs)
        return schemas.ReportResponse(report=rep.to_dict())

    @app.post("/bench/prequential", response_model=schemas.ReportResponse)
    def bench_prequential(req: schemas.BenchPrequentialRequest):
        stream = stream_from_csv_text(req.stream_csv)
        rep = run_prequential(stream, req.N, req.grid.to_grid(), req.kernel,
                              methods=tuple(req.methods), jobs=req.jobs)
        return schemas.ReportResponse(report=rep.to_dict())

    @app.post("/bench/lambda-sweep", response_model=schemas.ReportResponse)
    def bench_lambda_sweep(req: schemas.LambdaSweepRequest):
        rep = sweep_optimal_lambda(req.r_values, C=req.C, sigma=req.sigma,
                                   gamma_values=req.gamma_values, lambda_values=req.lambda_values,
                                   n_runs=req.n_runs, master_seed=req.master_seed,
                                   n=req.n, m=req.m, jobs=req.jobs)
        plot_rows = [{"x": row["r"], "method": "lambda", "mean": row["lambda_mean"],
                      "yerr": row["lambda_std"]} for row in rep.rows]
        plot_rows += [{"x": row["r"], "method": "gamma", "mean": row["gamma_mean"],
                       "yerr": row["gamma_std"]} for row in rep.rows]
        return schemas.ReportResponse(report=rep.to_dict(), plot_rows=plot_rows)

    return app


app = create_app()
