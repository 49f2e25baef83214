"""Causal analysis of mutation-testing data with Bayesian multi-level logistic models."""
from .conjugate import BetaPosterior, beta_binomial_posterior
from .dag import CausalDag, adjustment_sets, backdoor_paths, build_dag, enumerate_paths, minimal_adjustment_sets, parse_edge_list
from .data import Dataset, TransformedDataset, load_csv, preprocess, read_csv, summarize
from .model import ModelSpec, make_model
from .sampler import ChainConfig
from .samples import PosteriorSamples, ess, r_hat, run_chains
from .scm import ProjectTruth, ScmConfig, generate_raw, generate_transformed

__version__ = "0.1.0"

__all__ = [
    "BetaPosterior",
    "CausalDag",
    "ChainConfig",
    "Dataset",
    "ModelSpec",
    "PosteriorSamples",
    "ProjectTruth",
    "ScmConfig",
    "TransformedDataset",
    "adjustment_sets",
    "backdoor_paths",
    "beta_binomial_posterior",
    "build_dag",
    "enumerate_paths",
    "ess",
    "generate_raw",
    "generate_transformed",
    "load_csv",
    "make_model",
    "minimal_adjustment_sets",
    "parse_edge_list",
    "preprocess",
    "r_hat",
    "read_csv",
    "run_chains",
    "summarize",
]
