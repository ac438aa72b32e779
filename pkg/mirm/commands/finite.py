from argparse import Namespace

from mirm import consts, finite_market
from mirm.cli import CONVENTIONS, Command, RunReport, arg
from mirm.errors import ConfigError

command = Command(name="finite", description="Entropic and penalty risk measures on finite trees")

MEASURES = ["entropic", "entropic_primal", "superhedge", "closed_market"]


def _market(options: Namespace) -> finite_market.FiniteTreeMarket:
    if options.config is None:
        return finite_market.build_example_market()
    return finite_market.load_market(options.config)


def _floats(text: str) -> list[float]:
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError as e:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from e


@command.action(
    "eval",
    "risk of one claim at one depth",
    arg("--measure", choices=MEASURES, default="entropic"),
    arg("--t", type=int, help="evaluation depth (default: the claim's depth)"),
    arg("--a", type=float, default=1.0, help="size of the example claim when --claim is absent"),
    arg("--form", choices=consts.ENTROPY_FORMS, default="standard"),
    arg("--penalty", choices=consts.ENTROPIC_PENALTIES, default=consts.ENTROPIC_NORMALIZATION),
)
def evaluate(options: Namespace) -> RunReport:
    market = _market(options)
    if options.claim is None:
        claim = finite_market.example_claim(market, options.a)
    else:
        claim = finite_market.load_tree_claim(options.claim, market)
    t = claim.depth if options.t is None else options.t

    if options.measure == "entropic":
        rho = finite_market.entropic_rho_dual(
            market, claim, t, options.gamma, form=options.form, penalty=options.penalty
        )
    elif options.measure == "entropic_primal":
        rho = finite_market.entropic_rho_primal(market, claim, t, options.gamma)
    elif options.measure == "superhedge":
        rho = finite_market.superhedge_rho(market, claim, t)
    else:
        rho = finite_market.closed_market_evaluator(market, options.gamma).evaluate(claim, t)

    rows = [["measure", options.measure], ["t", t], ["gamma", options.gamma], ["rho", rho]]
    conventions = {**CONVENTIONS, "entropic_normalization": options.penalty, "entropy_form": options.form}
    return RunReport(subcommand="finite eval", header=consts.CSV_HEADERS["quantity"], rows=rows, conventions=conventions)


@command.action(
    "noncompliance",
    "scan rho(f_a; 1) against rho(f_a; 2)",
    arg("--a", type=_floats, default=consts.DEFAULT_A_VALUES, help="comma-separated claim sizes"),
)
def noncompliance(options: Namespace) -> RunReport:
    market = _market(options)
    result = finite_market.noncompliance_scan(market, options.gamma, options.a)
    return RunReport(
        subcommand="finite noncompliance",
        header=consts.CSV_HEADERS["scan"],
        rows=result.csv_rows(),
        passed=result.max_gap > 1e-3,
    )
