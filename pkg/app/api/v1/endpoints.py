import numpy as np
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app import schemas
from app.core.exceptions import HarmonicError
from app.core.phasor_array import PhasorArray
from app.services.lmi import build_lqr_lmi, check_feasibility
from app.services.simulation import PeriodicStateSpace, feedback, simulate_initial
from app.services.solvers import HarmonicSolverService
from app.services.spectral import floquet_exponents

router = APIRouter()


def _array(document: schemas.PhasorArrayDocument) -> PhasorArray:
    return PhasorArray.from_document(document)


async def _run(func, *args, **kwargs):
    try:
        return await run_in_threadpool(func, *args, **kwargs)
    except HarmonicError as exc:
        raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}")


@router.post("/floquet", response_model=schemas.FloquetResponse)
async def floquet(request: schemas.FloquetRequest):
    result = await _run(floquet_exponents, _array(request.matrix), request.h, request.period, request.mode)
    exponents = result.exponents
    return schemas.FloquetResponse(
        exponents=[(float(e.real), float(e.imag)) for e in exponents],
        concentration=result.concentration.tolist(),
        h=result.h,
        stable=bool(result.worst.real < -request.margin),
    )


@router.post("/lyapunov", response_model=schemas.LyapunovResponse)
async def lyapunov(request: schemas.LyapunovRequest):
    options = request.options
    solver = HarmonicSolverService()
    p, report = await _run(
        solver.solve_lyapunov,
        _array(request.a),
        _array(request.q),
        request.period,
        h_solve=options.h_solve,
        h_out=options.h_out,
        tol=options.tol,
        h_max=options.h_max,
    )
    return schemas.LyapunovResponse(solution=p.to_document(), report=schemas.SolveReportResponse.model_validate(report))


@router.post("/riccati", response_model=schemas.RiccatiResponse)
async def riccati(request: schemas.RiccatiRequest):
    options = request.options
    solver = HarmonicSolverService()
    gain, solution, report = await _run(
        solver.riccati_kleinman,
        _array(request.a),
        _array(request.b),
        _array(request.q),
        _array(request.r),
        _array(request.k0),
        request.period,
        h_trunc=options.h_trunc,
        h_max=options.h_max,
        auto_update_h=options.auto_update_h,
        max_iter=options.max_iter,
        residual_threshold=options.residual_threshold,
    )
    return schemas.RiccatiResponse(
        gain=gain.to_document(),
        solution=solution.to_document(),
        report=schemas.SolveReportResponse.model_validate(report),
    )


def _simulate(request: schemas.SimulationRequest):
    optional = {name: _array(doc) for name, doc in (("c", request.c), ("d", request.d)) if doc is not None}
    system = PeriodicStateSpace.create(_array(request.a), _array(request.b), period=request.period, **optional)
    if request.k is not None:
        system = feedback(system, _array(request.k))
    return simulate_initial(system, request.x0, request.times, step=request.step)


@router.post("/simulate/initial", response_model=schemas.SimulationResponse)
async def simulate(request: schemas.SimulationRequest):
    response = await _run(_simulate, request)
    return schemas.SimulationResponse(
        time=response.time.tolist(),
        states=np.real(response.states).tolist(),
        outputs=np.real(response.outputs).tolist(),
    )


def _feasibility(request: schemas.FeasibilityRequest):
    problem = build_lqr_lmi(
        _array(request.a),
        _array(request.b),
        _array(request.q),
        _array(request.r),
        request.period,
        request.h_p,
        request.h_t,
        request.h_lmi,
    )
    return check_feasibility(problem, _array(request.candidate))


@router.post("/lmi/feasibility", response_model=schemas.FeasibilityResponse)
async def feasibility(request: schemas.FeasibilityRequest):
    margins = await _run(_feasibility, request)
    return schemas.FeasibilityResponse(margins=margins, feasible=min(margins) >= -1e-9)
