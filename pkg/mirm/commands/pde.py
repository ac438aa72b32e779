from argparse import Namespace
from dataclasses import replace

from mirm import consts, diffusion_pde
from mirm.cli import CONVENTIONS, Command, RunReport, arg

command = Command(name="pde", description="Finite-difference solves of the stochastic-volatility example")


def _model(options: Namespace) -> tuple[diffusion_pde.SVModelSpec, diffusion_pde.Grid1D]:
    if options.config is None:
        spec, grid = diffusion_pde.SVModelSpec(), diffusion_pde.Grid1D()
    else:
        spec, grid = diffusion_pde.load_sv_spec(options.config)
    if options.fk_sign is not None:
        spec = replace(spec, fk_sign=options.fk_sign)
    return spec, grid


@command.action(
    "solve",
    "dump one solution on the grid as t,y,value rows",
    arg("--which", choices=["f", "f_bar", "g", "g_bar", "p", "p_bar"], default="f"),
    arg("--t-stride", type=int, default=10),
    arg("--y-stride", type=int, default=10),
)
def solve(options: Namespace) -> RunReport:
    spec, grid = _model(options)
    horizon = spec.T_bar if options.which.endswith("_bar") else spec.T
    f = diffusion_pde.solve_linear_f(spec, horizon, grid)
    if options.which in ("f", "f_bar"):
        solution = f
    elif options.which in ("g", "g_bar"):
        solution = diffusion_pde.compute_g(spec, f, grid)
    else:
        solution = diffusion_pde.solve_quasilinear_p(spec, f, grid)
    rows = diffusion_pde.solution_rows(solution, t_stride=options.t_stride, y_stride=options.y_stride)
    return RunReport(
        subcommand="pde solve",
        header=consts.CSV_HEADERS["grid"],
        rows=rows,
        conventions={**CONVENTIONS, "fk_sign": spec.fk_sign},
    )


@command.action("gap", "max |p - p_bar| with grid-refinement deltas")
def gap(options: Namespace) -> RunReport:
    spec, grid = _model(options)
    report = diffusion_pde.noncompliance_gap(spec, grid)
    return RunReport(
        subcommand="pde gap",
        header=consts.CSV_HEADERS["quantity"],
        rows=report.rows(),
        passed=report.passed,
        conventions={**CONVENTIONS, "fk_sign": spec.fk_sign},
    )
