"""Langevin simulation of a Brownian rod with classical and quantum Ohmic noise."""

__version__ = "0.1.0"

from .core import (BathParams, MissingCutoff, NonPositiveParameter, ParameterError, RngStream, RodParams,
                   RodState, StreamBank, WrongRegime, equilibrium_initial_state, rest_initial_state,
                   validate_params)
from .friction import FrictionTensor, decompose, green_function, tensor_apply, tensor_power
from .noise import (NoiseSeries, SpectralDensity, quantum_kernel, synthesize_colored_noise,
                    white_force_increment, white_torque_increment)
from .dynamics import (IntegratorConfig, Trajectory, orientation_from_euler, propagate, step_momentum_colored,
                       step_momentum_inertial, step_overdamped, step_position, step_rotation_inertial)
from .observables import (EnsembleAccumulator, OracleReport, accumulate, equipartition_oracle, fit_exponential,
                          mean_energy_estimate, merge, msd_oracle, orientation_oracle, quantum_variance_oracle)

from .experiment import ExperimentConfig, load_config, run_experiment, simulate

__all__ = [
    "BathParams", "MissingCutoff", "NonPositiveParameter", "ParameterError", "RngStream", "RodParams", "RodState",
    "StreamBank", "WrongRegime", "equilibrium_initial_state", "rest_initial_state", "validate_params",
    "FrictionTensor", "decompose", "green_function", "tensor_apply", "tensor_power",
    "NoiseSeries", "SpectralDensity", "quantum_kernel", "synthesize_colored_noise", "white_force_increment",
    "white_torque_increment",
    "IntegratorConfig", "Trajectory", "orientation_from_euler", "propagate", "step_momentum_colored",
    "step_momentum_inertial", "step_overdamped", "step_position", "step_rotation_inertial",
    "EnsembleAccumulator", "OracleReport", "accumulate", "equipartition_oracle", "fit_exponential",
    "mean_energy_estimate", "merge", "msd_oracle", "orientation_oracle", "quantum_variance_oracle",
    "ExperimentConfig", "load_config", "run_experiment", "simulate",
]
