"""Numerical generalized randomized HMC for targets on constrained domains."""

from .boundary import Kernel, apply_kernel
from .catalog import ExampleModel, build_example, example_names
from .constraints import L1Norm, L2Norm, Linear, NonlinearAffine, inward_normal, locate_collision
from .diagnostics import ChainStats, ess_geyer, mcsd, split_rhat, summarize
from .errors import NGRHMCError
from .integrator import StepControl
from .oracles import rejection_sample, truncated_normal_moments
from .sampler import SamplerConfig, TrajectoryOutput, run_chains, run_trajectory
from .target import Standardization, TargetModel

__all__ = [
    "ChainStats",
    "ExampleModel",
    "Kernel",
    "L1Norm",
    "L2Norm",
    "Linear",
    "NGRHMCError",
    "NonlinearAffine",
    "SamplerConfig",
    "Standardization",
    "StepControl",
    "TargetModel",
    "TrajectoryOutput",
    "apply_kernel",
    "build_example",
    "ess_geyer",
    "example_names",
    "inward_normal",
    "locate_collision",
    "mcsd",
    "rejection_sample",
    "run_chains",
    "run_trajectory",
    "split_rhat",
    "summarize",
    "truncated_normal_moments",
]
