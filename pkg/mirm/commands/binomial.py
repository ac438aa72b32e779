from argparse import Namespace

import numpy as np

from mirm import binomial_forward, consts
from mirm.cli import Command, RunReport, arg
from mirm.core_risk import reduce_claim
from mirm.errors import ConfigError

command = Command(name="binomial", description="Forward entropic risk on the binomial factor lattice")


def _lattice(options: Namespace) -> binomial_forward.FactorLattice:
    if options.config is None:
        spec = binomial_forward.FactorModelSpec.uniform(options.horizon)
    else:
        spec = binomial_forward.load_model_spec(options.config)
    return binomial_forward.build_lattice(spec)


def _claim(options: Namespace, lattice: binomial_forward.FactorLattice):
    if options.claim is None:
        raise ConfigError("--claim is required")
    return binomial_forward.load_lattice_claim(options.claim, lattice)


HORIZON = arg("--horizon", type=int, default=5, help="periods of the default 1.2/0.9 model")


@command.action(
    "eval",
    "forward entropic risk of a claim, checked against the indifference oracle",
    HORIZON,
    arg("--x0", type=float, default=0.0, help="initial wealth for the oracle"),
)
def evaluate(options: Namespace) -> RunReport:
    lattice = _lattice(options)
    claim = reduce_claim(_claim(options, lattice), lattice)
    t_c = int(claim.depth)
    rho = binomial_forward.ferm_binomial(lattice, claim)
    oracle = binomial_forward.indifference_oracle(lattice, claim, t_c, options.x0)
    rows = [
        ["earliest_maturity", t_c],
        ["rho", rho],
        ["oracle_rho", oracle],
        ["oracle_gap", abs(rho - oracle)],
    ]
    return RunReport(
        subcommand="binomial eval",
        header=consts.CSV_HEADERS["quantity"],
        rows=rows,
        passed=abs(rho - oracle) <= 1e-8,
    )


@command.action("invariance", "E(0,t)(-C) for every t from the earliest maturity to the horizon", HORIZON)
def invariance(options: Namespace) -> RunReport:
    lattice = _lattice(options)
    table = binomial_forward.invariance_table(lattice, _claim(options, lattice))
    values = np.array([rho for _, rho in table])
    return RunReport(
        subcommand="binomial invariance",
        header=consts.CSV_HEADERS["invariance"],
        rows=[list(row) for row in table],
        passed=bool(np.ptp(values) <= consts.EXACT_TOLERANCE),
    )
