"""Soundness, race and data-flow analysis for negotiations."""
from .data import (
    DataNegotiation,
    DataSpec,
    DataVerdict,
    RaceVerdict,
    SharedPath,
    builtin_spec,
    check_spec,
    co_occur,
    make_spec,
    parse_dataspec,
    race,
    spec_compliance,
)
from .dot import emit_dot
from .games import OmitPlan, build_arena, eve_winning, solve_omitting
from .generators import Cnf3, RandomParams, gen_from_cnf, gen_from_digraph, gen_random, gen_structured
from .graph import graph_of, local_reach, topo_order
from .model import (
    BudgetExceeded,
    ClassFlags,
    Negotiation,
    NegotiationError,
    PreconditionError,
    Run,
    ValidationError,
    Verdict,
    classify,
    enabled,
    restrict,
    step,
    validate,
)
from .ngt import emit_ngt, parse_ngt, read_ngt
from .oracle import oracle_concurrent, oracle_omit, oracle_sound, oracle_spec
from .patterns import det_soundness, find_fork, find_pattern_B, find_pattern_C, find_pattern_F
from .weak import check_single_nd, weak_soundness

__version__ = "0.1.0"
