"""HTTP face of the estimator.

Every endpoint is a thin wrapper over the library: validate the body with
the shared pydantic models, call the one matching library function, convert
the result. Data problems (unknown region, missing trace, malformed store)
surface as 422 responses; an unreached accuracy target is still a valid
estimate and returns 200 with reached=false.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from fedcarbon import __version__
from fedcarbon.service.schemas import (
    CompareOut,
    CompareRequest,
    EstimateRequest,
    FactorOut,
    HardwareOut,
    RunOut,
    SimulateOut,
    SimulateRequest,
    SeedStudyOut,
    SweepOut,
    SweepRequest,
    TraceOut,
)
from fedcarbon.simulator import compare_runs, live_seed_study, run_scenario
from fedcarbon.stores import DataStoreError, Stores
from fedcarbon.sweep import sweep


def create_app(stores: Stores | None = None) -> FastAPI:
    """Build the service around a data store (bundled data by default)."""
    loaded = stores if stores is not None else Stores.load()
    app = FastAPI(title="fedcarbon", version=__version__)

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.get("/factors")
    def list_factors() -> list[FactorOut]:
        return [
            FactorOut(region_code=factor.region_code, kg_co2_per_kwh=factor.kg_co2_per_kwh)
            for _, factor in sorted(loaded.factors.items())
        ]

    @app.get("/hardware")
    def list_hardware() -> list[HardwareOut]:
        return [HardwareOut.from_profile(profile) for _, profile in sorted(loaded.hardware.items())]

    @app.get("/traces")
    def list_traces() -> list[TraceOut]:
        return [TraceOut.from_trace(trace) for _, trace in sorted(loaded.traces.items())]

    @app.post("/estimate")
    def estimate(request: EstimateRequest) -> RunOut:
        try:
            result = run_scenario(request.scenario, loaded)
        except DataStoreError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return RunOut.from_result(result, include_logs=request.include_logs)

    @app.post("/compare")
    def compare(request: CompareRequest) -> CompareOut:
        try:
            fl_result = run_scenario(request.fl, loaded)
            centralized_result = run_scenario(request.centralized, loaded)
        except DataStoreError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return CompareOut.from_comparison(compare_runs(fl_result, centralized_result))

    @app.post("/sweep")
    def run_sweep(request: SweepRequest) -> SweepOut:
        try:
            result = sweep(request.grid, request.base, loaded)
        except DataStoreError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SweepOut.from_result(result)

    @app.post("/simulate")
    def simulate(request: SimulateRequest) -> SimulateOut:
        try:
            iid_study, non_iid_study = live_seed_study(request.scenario, loaded, request.seeds)
        except DataStoreError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SimulateOut(
            iid=SeedStudyOut.from_study(iid_study),
            non_iid=SeedStudyOut.from_study(non_iid_study),
        )

    return app


app = create_app()
