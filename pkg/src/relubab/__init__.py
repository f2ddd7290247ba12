"""Complete verification of ReLU networks by branch and bound with ordered search."""
from .model import Layer, Network, NeuronId, infer, load_network, read_network, write_network
from .numerics import KERNEL, LinearForm, LpProblem, lp_solve
from .oracle import OracleResult, exact_verify
from .relax import Assessment, Backend, ReluSpec, Sign, assess, propagate_bounds
from .search import Outcome, SearchConfig, Verdict, run, run_bab, run_greedy, run_sa
from .spec import (
    InputBox,
    OutputObjectives,
    VerificationProblem,
    compile_robustness,
    parse_spec,
    read_problem,
    validate_counterexample,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL",
    "Assessment",
    "Backend",
    "InputBox",
    "Layer",
    "LinearForm",
    "LpProblem",
    "Network",
    "NeuronId",
    "OracleResult",
    "Outcome",
    "OutputObjectives",
    "ReluSpec",
    "SearchConfig",
    "Sign",
    "Verdict",
    "VerificationProblem",
    "assess",
    "compile_robustness",
    "exact_verify",
    "infer",
    "load_network",
    "lp_solve",
    "parse_spec",
    "propagate_bounds",
    "read_network",
    "read_problem",
    "run",
    "run_bab",
    "run_greedy",
    "run_sa",
    "validate_counterexample",
    "write_network",
]
