"""Constrained batch Bayesian optimization for multi-input coating
process configuration: GP surrogates with physics-informed means,
feasibility-prioritizing acquisition, drift compensation through an
auxiliary voltage model, a simulated process for closed-loop validation,
and persistent human-in-the-loop campaigns."""

from .acquisition import (ConstraintSpec, Incumbent, ScoredCandidate,
                          alpha_fip, alpha_hfi, default_constraints,
                          feasibility_probability, improvement,
                          select_candidate)
from .errors import (FitFailureError, InvalidArgumentError,
                     NumericalFailureError, PhaseError, SprayOptError,
                     VersionMismatchError)
from .gp import (Dataset, GPModel, KernelParams, LinearMeanParams,
                 PosteriorPrediction, fit, kernel_eval,
                 log_marginal_likelihood, mean_eval,
                 microhardness_mean_config, posterior, posterior_batch)
from .optimizer import (BatchProposal, EvaluatedExperiment, ModelConfig,
                        OptimizerConfig, best_feasible, check_termination,
                        make_experiment, propose_batch,
                        run_simulated_campaign)
from .process import (ControllableInputs, CostConfig, DomainBounds,
                      InputVector, VoltageModel, default_bounds,
                      estimate_offset, expand_candidates,
                      fit_voltage_model, generate_candidates, stress_index)

__version__ = "0.1.0"
