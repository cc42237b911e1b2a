"""
routers/analysis.py

HTTP surface over services/experiments.py.
Everything numeric runs in the threadpool; library errors become 422
through the handler registered in main.py.
"""

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.models.request import MeasureRequest, ReduceRequest
from app.models.response import CarCheckReport, DemoReport, EntanglementReport, ReducedStateReport
from app.services.experiments import DEMOS, run_car_check, run_demo, run_measure, run_reduce
from app.core.logger import get_logger

logger = get_logger(__name__)
router = APIRouter(prefix="/api/v1", tags=["analysis"])


@router.get("/car-check/{n_modes}", response_model=CarCheckReport)
async def car_check(n_modes: int):
    return await run_in_threadpool(run_car_check, n_modes)


@router.post("/reduce", response_model=ReducedStateReport)
async def reduce(req: ReduceRequest):
    """Fermionic reduced state of the kept modes, with the oracle residual."""
    return await run_in_threadpool(run_reduce, req.document, req.modes_keep, req.tol)


@router.post("/measure", response_model=EntanglementReport)
async def measure(req: MeasureRequest):
    logger.info(f"Measure | keep={req.modes_keep} ssr_eof={req.ssr_eof}")
    return await run_in_threadpool(
        run_measure,
        req.document,
        req.modes_keep,
        req.ssr_eof,
        req.restarts,
        req.iterations,
        req.seed,
    )


@router.get("/demos/{name}", response_model=DemoReport)
async def demo(name: str):
    if name not in DEMOS:
        raise HTTPException(status_code=404, detail=f"Unknown demo '{name}'")
    return await run_in_threadpool(run_demo, name)
