"""
Command-line front end.

    harmonic [--out DIR] [--tol TOL] [--seed N] [--log-level LEVEL] <command> ...

Exit codes: 0 success, 2 invalid input, 3 a solver did not converge.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from app.core.config import get_settings
from app.core.exceptions import HarmonicError
from app.core.phasor_array import PhasorArray
from app.models import FloquetMode, ReduceMethod
from app.schemas import RiccatiOptions, RunConfig, SimulationConfig, SolveReportResponse, SolverOptions
from app.services import export, fixtures
from app.services.lmi import build_lqr_lmi, check_feasibility, export_sdpa
from app.services.operators import magnitude_grid, toeplitz_block
from app.services.solvers import HarmonicSolverService
from app.services.simulation import PeriodicStateSpace, feedback, simulate_forced, simulate_initial, step_response
from app.services.spectral import floquet_exponents

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _options(model: type, path: Optional[Path]) -> BaseModel:
    if path is None:
        return model()
    try:
        return model.model_validate_json(path.read_text())
    except (OSError, ValidationError) as exc:
        raise CommandError(f"invalid options file {path}: {exc}", EXIT_INVALID) from exc


def _load(config: RunConfig, name: str) -> PhasorArray:
    return export.load_phasor_array(config.inputs[name])


def _prepare_out(config: RunConfig) -> Path:
    config.out.mkdir(parents=True, exist_ok=True)
    return config.out


def cmd_fixtures(config: RunConfig, args: argparse.Namespace) -> int:
    period = config.period
    documents = {
        "plant": fixtures.plant_matrix(period),
        "plant_slices": fixtures.plant_slices(),
        "input": fixtures.input_matrix(),
        "q": fixtures.state_weight(),
        "r": fixtures.input_weight(),
        "k0": fixtures.initial_gain(),
        "zeros": PhasorArray.zeros(2),
        "sin": PhasorArray.sin(),
        "random": PhasorArray.random(2, 2, h=2, rng=config.seed),
    }
    out = _prepare_out(config)
    for name, array in documents.items():
        export.write_json(out / f"{name}.json", array.to_document())
    return EXIT_OK


def cmd_spectrum(config: RunConfig, args: argparse.Namespace) -> int:
    a = _load(config, "matrix")
    if args.element is not None:
        a = a[args.element[0], args.element[1]]
    variants = {"spectrum": a}
    if args.neglect is not None:
        variants["spectrum_neglect"] = a.neglect(args.neglect, ReduceMethod(args.method))
    if args.trunc is not None:
        variants["spectrum_trunc"] = a.trunc(args.trunc)

    out = _prepare_out(config)
    for name, variant in variants.items():
        export.write_csv(out / f"{name}.csv", *export.spectrum_table(variant))
        suffix = name.replace("spectrum", "")
        export.write_csv(out / f"time{suffix}.csv", *export.time_table(variant, config.period, args.points))
    export.write_csv(out / "magnitude_grid.csv", magnitude_grid(toeplitz_block(a, args.grid_order)))
    sys.stdout.write(a.describe() + "\n")
    return EXIT_OK


def cmd_floquet(config: RunConfig, args: argparse.Namespace) -> int:
    a = _load(config, "matrix")
    result = floquet_exponents(a, config.h, config.period, FloquetMode(args.mode))
    if result.mode == FloquetMode.ALL:
        table = np.column_stack([result.exponents.real, result.exponents.imag])
        columns = ["re", "im"]
    else:
        table = np.column_stack([result.fundamental.real, result.fundamental.imag, result.concentration])
        columns = ["re", "im", "concentration"]
    out = _prepare_out(config)
    export.write_csv(out / "floquet.csv", table, columns)
    np.savetxt(sys.stdout, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
    return EXIT_OK


def _report_exit(report) -> int:
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_lyap(config: RunConfig, args: argparse.Namespace) -> int:
    a, q = _load(config, "a"), _load(config, "q")
    options: SolverOptions = _options(SolverOptions, args.options)
    tol = options.tol if options.tol is not None else config.tol
    solver = HarmonicSolverService()
    p, report = solver.solve_lyapunov(
        a,
        q,
        config.period,
        h_solve=options.h_solve,
        h_out=options.h_out,
        tol=tol,
        h_max=options.h_max,
        check_stability=not args.no_stability_check,
    )
    out = _prepare_out(config)
    export.write_json(out / "lyap_solution.json", p.to_document())
    export.write_json(out / "lyap_report.json", SolveReportResponse.model_validate(report))
    return _report_exit(report)


def cmd_riccati(config: RunConfig, args: argparse.Namespace) -> int:
    a, b, q, r, k0 = (_load(config, name) for name in ("a", "b", "q", "r", "k0"))
    options: RiccatiOptions = _options(RiccatiOptions, args.options)
    threshold = options.residual_threshold if options.residual_threshold is not None else config.tol
    solver = HarmonicSolverService()
    gain, solution, report = solver.riccati_kleinman(
        a,
        b,
        q,
        r,
        k0,
        config.period,
        h_trunc=options.h_trunc,
        h_max=options.h_max,
        auto_update_h=options.auto_update_h,
        max_iter=options.max_iter,
        residual_threshold=threshold,
    )
    out = _prepare_out(config)
    export.write_json(out / "riccati_gain.json", gain.to_document())
    export.write_json(out / "riccati_solution.json", solution.to_document())
    export.write_json(out / "riccati_report.json", SolveReportResponse.model_validate(report))
    return _report_exit(report)


def cmd_sim(config: RunConfig, args: argparse.Namespace) -> int:
    a, b = _load(config, "a"), _load(config, "b")
    c = _load(config, "c") if "c" in config.inputs else None
    d = _load(config, "d") if "d" in config.inputs else None
    u = _load(config, "input") if "input" in config.inputs else None
    system = PeriodicStateSpace.create(a, b, c, d, config.period)
    if "gain" in config.inputs:
        system = feedback(system, _load(config, "gain"))
    sim: SimulationConfig = _options(SimulationConfig, args.config)

    x0 = np.asarray(args.x0 if args.x0 is not None else np.ones(system.states), dtype=float)
    if x0.size != system.states:
        raise CommandError(f"--x0 needs {system.states} values, got {x0.size}", EXIT_INVALID)
    count = int(round(sim.horizon_periods * sim.samples_per_period)) + 1
    times = np.linspace(0.0, sim.horizon_periods * config.period, count)

    responses = {
        "initial": simulate_initial(system, x0, times, step=sim.step),
        "step": step_response(system, times, step=sim.step),
    }
    if u is not None:
        responses["forced"] = simulate_forced(system, times, u, x0=x0, step=sim.step)

    out = _prepare_out(config)
    for name, response in responses.items():
        export.write_csv(out / f"{name}.csv", *export.trajectory_table(response))
    final = float(np.linalg.norm(responses["initial"].states[-1]))
    sys.stdout.write(f"final state norm {final:.6g}\n")
    return EXIT_OK


def cmd_lmi_export(config: RunConfig, args: argparse.Namespace) -> int:
    a, b, q, r = (_load(config, name) for name in ("a", "b", "q", "r"))
    candidate = _load(config, "candidate") if "candidate" in config.inputs else None
    problem = build_lqr_lmi(a, b, q, r, config.period, args.h_p, args.h_t, args.h_lmi)
    margins = check_feasibility(problem, candidate) if candidate is not None else None

    out = _prepare_out(config)
    export_sdpa(problem, out / f"{args.name}.dat-s")
    if margins is not None:
        export.write_csv(out / f"{args.name}_margins.csv", np.array([margins]), ["positivity", "lqr"])
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "fixtures": cmd_fixtures,
    "spectrum": cmd_spectrum,
    "floquet": cmd_floquet,
    "lyap": cmd_lyap,
    "riccati": cmd_riccati,
    "sim": cmd_sim,
    "lmi-export": cmd_lmi_export,
}

# positional and optional file arguments per command
INPUTS: Dict[str, List[str]] = {
    "fixtures": [],
    "spectrum": ["matrix"],
    "floquet": ["matrix"],
    "lyap": ["a", "q"],
    "riccati": ["a", "b", "q", "r", "k0"],
    "sim": ["a", "b", "c", "d", "gain", "input"],
    "lmi-export": ["a", "b", "q", "r", "candidate"],
}


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="harmonic", description="Harmonic-domain toolkit for periodic systems")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--tol", type=float, default=None, help="solver tolerance")
    parser.add_argument("--seed", type=int, default=0, help="seed for random fixtures")
    parser.add_argument("--log-level", default=settings.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--period", type=float, default=fixtures.PERIOD)
        return p

    command("fixtures", "write the reference plant and LQR data as JSON")

    p = command("spectrum", "harmonic magnitudes and one period of A(t)")
    p.add_argument("matrix", type=Path)
    p.add_argument("--element", type=int, nargs=2, metavar=("I", "J"))
    p.add_argument("--neglect", type=float)
    p.add_argument("--method", choices=[m.value for m in ReduceMethod], default=ReduceMethod.ABSOLUTE.value)
    p.add_argument("--trunc", type=int)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--grid-order", type=int, default=8)

    p = command("floquet", "Floquet exponents of dx/dt = A(t) x")
    p.add_argument("matrix", type=Path)
    p.add_argument("--h", type=int, default=10)
    p.add_argument("--mode", choices=[m.value for m in FloquetMode], default=FloquetMode.FUNDAMENTAL.value)

    p = command("lyap", "periodic Lyapunov equation")
    p.add_argument("a", type=Path)
    p.add_argument("q", type=Path)
    p.add_argument("--options", type=Path)
    p.add_argument("--no-stability-check", action="store_true")

    p = command("riccati", "periodic LQR Riccati equation by Kleinman iteration")
    for name in INPUTS["riccati"]:
        p.add_argument(name, type=Path)
    p.add_argument("--options", type=Path)

    p = command("sim", "initial, step and forced responses")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--c", type=Path)
    p.add_argument("--d", type=Path)
    p.add_argument("--gain", type=Path)
    p.add_argument("--input", type=Path)
    p.add_argument("--x0", type=float, nargs="+")
    p.add_argument("--config", type=Path)

    p = command("lmi-export", "Toeplitz-block LQR LMI in SDPA format")
    for name in ("a", "b", "q", "r"):
        p.add_argument(name, type=Path)
    p.add_argument("--candidate", type=Path)
    p.add_argument("--h-p", type=int, default=settings.lmi_h_p)
    p.add_argument("--h-t", type=int, default=settings.lmi_h_t)
    p.add_argument("--h-lmi", type=int, default=settings.lmi_h_lmi)
    p.add_argument("--name", default="lmi")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    inputs = {name: getattr(args, name) for name in INPUTS[args.command] if getattr(args, name, None) is not None}
    option_files = {name: getattr(args, name) for name in ("options", "config") if getattr(args, name, None)}
    return RunConfig(
        command=args.command,
        inputs={**inputs, **option_files},
        out=args.out,
        period=args.period,
        h=getattr(args, "h", 10),
        tol=args.tol,
        seed=args.seed,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _run_config(args)
        return COMMANDS[args.command](config, args)
    except ValidationError as exc:
        logger.error("invalid arguments: %s", exc)
        return EXIT_INVALID
    except CommandError as exc:
        logger.error("%s", exc)
        return exc.code
    except HarmonicError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
