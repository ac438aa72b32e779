# Sign and normalization conventions. Every report carries these.
FK_SIGNS = ["paper_pde", "paper_fk"]
DEFAULT_FK_SIGN = "paper_pde"
ENTROPY_FORMS = ["standard", "printed"]
ENTROPIC_PENALTIES = ["normalized", "raw"]
ENTROPIC_NORMALIZATION = "normalized"
FERM_SIGN_READING = "rho(C)=E(0,t_C)(-C)"
H_T_SIGN = "H_t=-ln(-sup E[-exp(-gamma G)])"

AXIOMS = [
    "anti_positivity",
    "convexity",
    "cash_translativity",
    "replication_maturity_independence",
]

EXACT_TOLERANCE = 1e-9
ROUNDOFF_TOLERANCE = 1e-12
MC_SIGMAS = 3.0

# finite trees
DUAL_GRID_POINTS = 2048
DUAL_XTOL = 1e-10
MAX_OPTIMIZER_EVALUATIONS = 10**6
MAX_TREE_DEPTH = 12
DEFAULT_A_VALUES = [0.5, 1.0, 2.0, 4.0, 8.0]

# binomial lattice
MAX_LATTICE_HORIZON = 12
HOLDING_XTOL = 1e-12
LATTICE_MOVES = ["uu", "ud", "du", "dd"]

# forward field
DEFAULT_STRATEGY_BOUND = 5.0
DEFAULT_GAINS_BOUND = 50.0
DEFAULT_CELLS = 4
DEFAULT_BATCH_SIZE = 4096
SE_BATCHES = 20

# diffusion pde
DEFAULT_L = 6.0
DEFAULT_N_Y = 401
DEFAULT_STEPS_PER_UNIT = 400
DEFAULT_RANNACHER_STEPS = 2
FK_STEPS_PER_UNIT = 1000

CSV_HEADERS = {
    "scan": ["a", "rho_t1", "rho_t2", "gap"],
    "invariance": ["t", "rho_t"],
    "grid": ["t", "y", "value"],
    "quantity": ["quantity", "value"],
    "estimate": ["quantity", "estimate", "std_error", "n_paths", "seed"],
    "axioms": ["axiom", "trials", "max_violation", "tolerance", "passed"],
}
