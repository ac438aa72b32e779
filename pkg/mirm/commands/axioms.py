from argparse import Namespace

from mirm import binomial_forward, consts, finite_market
from mirm.cli import Command, RunReport, arg
from mirm.core_risk import RiskEvaluator, axiom_check

# optimizer-backed evaluators are only accurate to their solver tolerances
LOOSE_TOLERANCE = 1e-6


def _evaluator(options: Namespace) -> RiskEvaluator:
    if options.measure == "ferm":
        if options.config is None:
            spec = binomial_forward.FactorModelSpec.uniform(options.horizon)
        else:
            spec = binomial_forward.load_model_spec(options.config)
        return binomial_forward.FermEvaluator(binomial_forward.build_lattice(spec))
    market = finite_market.build_example_market() if options.config is None else finite_market.load_market(options.config)
    if options.measure == "entropic":
        return finite_market.EntropicEvaluator(market, options.gamma)
    if options.measure == "entropic_primal":
        return finite_market.EntropicEvaluator(market, options.gamma, method="primal")
    if options.measure == "superhedge":
        return finite_market.SuperhedgeEvaluator(market)
    return finite_market.closed_market_evaluator(market, options.gamma)


def _tolerance(options: Namespace) -> float:
    if options.tolerance is not None:
        return options.tolerance
    return consts.EXACT_TOLERANCE if options.measure in ("ferm", "entropic_primal") else LOOSE_TOLERANCE


def run_axioms(options: Namespace) -> RunReport:
    evaluator = _evaluator(options)
    tolerance = _tolerance(options)
    axioms = consts.AXIOMS if options.axiom == "all" else [options.axiom]
    reports = [axiom_check(evaluator, axiom, options.trials, options.seed, tolerance=tolerance) for axiom in axioms]
    rows = [[r.axiom, r.trials, r.max_violation, r.tolerance, r.passed] for r in reports]
    return RunReport(
        subcommand="axioms",
        header=consts.CSV_HEADERS["axioms"],
        rows=rows,
        seeds=(options.seed,),
        passed=all(r.passed for r in reports),
    )


command = Command(
    name="axioms",
    description="Randomized checks of the risk-measure axioms",
    handler=run_axioms,
    arguments=(
        arg("--measure", choices=["ferm", "entropic", "entropic_primal", "superhedge", "closed_market"], default="ferm"),
        arg("--axiom", choices=["all", *consts.AXIOMS], default="all"),
        arg("--trials", type=int, default=1000),
        arg("--horizon", type=int, default=3, help="periods of the default lattice for --measure ferm"),
        arg("--tolerance", type=float, help="violation tolerance (default by evaluator)"),
    ),
)
