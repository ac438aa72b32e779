from argparse import Namespace

import numpy as np

from mirm import consts, forward_field, utils
from mirm.cli import Command, RunReport, arg
from mirm.core_risk import Estimate

command = Command(name="forward", description="Monte Carlo forward entropic risk in the Itô factor model")


def _spec(options: Namespace) -> forward_field.CoefficientSpec:
    if options.config is None:
        return forward_field.CoefficientSpec(gamma=options.gamma)
    return forward_field.load_coefficient_spec(options.config)


def _family(options: Namespace) -> forward_field.StrategyFamily:
    return forward_field.StrategyFamily(cells=options.cells)


def _claim(options: Namespace, family: forward_field.StrategyFamily):
    if options.claim is None:
        return forward_field.capped_call(1.0, 0.5, options.t)
    return forward_field.load_path_claim(options.claim, family)


T = arg("--t", type=float, default=0.5, help="evaluation time, on the simulation grid")
CELLS = arg("--cells", type=int, default=consts.DEFAULT_CELLS, help="strategy cells over the horizon")


@command.action("simulate", "sanity statistics of the simulated paths")
def simulate(options: Namespace) -> RunReport:
    spec = _spec(options)
    bundle = forward_field.simulate(spec, options.paths, options.seed)
    u_T = forward_field.U_eval(bundle, spec.horizon, 0.0)
    test = forward_field.z_martingale_test(bundle)
    n, seed = bundle.n_paths, options.seed
    rows = [
        Estimate("E[U_T(0)]", float(u_T.mean()), utils.batch_means_se(u_T, consts.SE_BATCHES), n, seed).row(),
        Estimate("U_0(0)", -1.0, 0.0, n, seed).row(),
        Estimate("z_test_max_abs", test.max_abs, 0.0, n, seed).row(),
        Estimate("A_T", float(bundle.A[0, -1]), 0.0, n, seed).row(),
        Estimate("E[Y_T]", float(bundle.Y[:, -1].mean()), utils.batch_means_se(bundle.Y[:, -1], consts.SE_BATCHES), n, seed).row(),
    ]
    return RunReport(
        subcommand="forward simulate",
        header=consts.CSV_HEADERS["estimate"],
        rows=rows,
        seeds=(seed,),
        passed=test.passed(),
    )


@command.action(
    "ferm",
    "forward entropic risk of a path claim by strategy optimization",
    T,
    CELLS,
    arg("--indifference", action="store_true", help="also solve the indifference equation"),
)
def ferm(options: Namespace) -> RunReport:
    spec = _spec(options)
    family = _family(options)
    claim = _claim(options, family)
    bundle = forward_field.simulate(spec, options.paths, options.seed)
    estimates = [forward_field.ferm_mc(spec, claim, options.t, family, bundle=bundle)]
    passed = None
    if options.indifference:
        indifference = forward_field.ferm_indifference_mc(spec, claim, options.t, family, bundle=bundle)
        estimates.append(indifference)
        passed = indifference.agrees_with(estimates[0])
    return RunReport(
        subcommand="forward ferm",
        header=consts.CSV_HEADERS["estimate"],
        rows=[e.row() for e in estimates],
        seeds=(options.seed,),
        passed=passed,
    )


@command.action(
    "consistency",
    "compare the forward entropic risk with its classical representations",
    T,
    CELLS,
    arg("--case", choices=["a", "b"], default="a"),
)
def consistency(options: Namespace) -> RunReport:
    spec = _spec(options)
    family = _family(options)
    claim = _claim(options, family)
    check = {
        "a": forward_field.entropic_consistency_case_a,
        "b": forward_field.entropic_consistency_case_b,
    }[options.case]
    report = check(spec, claim, options.t, family, options.paths, options.seed)
    seeds = (options.seed,) if options.case == "a" else (options.seed, options.seed + 1)
    return RunReport(
        subcommand=f"forward consistency {options.case}",
        header=consts.CSV_HEADERS["estimate"],
        rows=report.rows(),
        seeds=seeds,
        passed=report.passed,
    )


@command.action(
    "probe",
    "sampled strategies against the forward property E[U_t(x + G)] <= U_0(x)",
    T,
    CELLS,
    arg("--x", type=float, default=0.0),
    arg("--strategies", type=int, default=100),
)
def probe(options: Namespace) -> RunReport:
    spec = _spec(options)
    report = forward_field.supermartingale_probe(
        spec, _family(options), options.t, options.paths, options.seed, x=options.x, n_strategies=options.strategies
    )
    rows = [e.row() for e in report.estimates] + [report.best.row()]
    rows.append(Estimate("U_0(x)", report.u0, 0.0, report.best.n_paths, options.seed).row())
    return RunReport(
        subcommand="forward probe",
        header=consts.CSV_HEADERS["estimate"],
        rows=rows,
        seeds=(options.seed,),
        passed=report.passed,
    )
