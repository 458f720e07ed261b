"""Exact-inference Gaussian process regression with an SE-ARD kernel.

Supports an optional linear mean function whose coefficients can carry
per-dimension sign constraints (used for the microhardness model, where
the secondary-gas-flow coefficient must stay non-positive and the voltage
coefficient non-negative). Hyperparameters are fitted by multi-start
maximization of the log marginal likelihood with analytic gradients.

Inputs may be affinely scaled to [0, 1] per dimension using domain bounds
and targets standardized to zero mean / unit variance; all kernel and mean
parameters are expressed in those model coordinates, and predictions are
mapped back to raw units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import (FitFailureError, InvalidArgumentError,
                     NumericalFailureError, VersionMismatchError)

SIGN_NEGATIVE = "negative"
SIGN_POSITIVE = "positive"
SIGN_ZERO = "zero"
SIGN_FREE = "free"
_SIGNS = (SIGN_NEGATIVE, SIGN_POSITIVE, SIGN_ZERO, SIGN_FREE)

# Relative jitter ladder for Cholesky stabilization.
JITTER_START = 1e-10
JITTER_MAX = 1e-4

# Hyperparameter box bounds (model coordinates).
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-4, 1e4)
NOISE_FLOOR = 1e-8
NOISE_CEIL = 1e4
MEAN_MAGNITUDE_BOUNDS = (1e-8, 1e3)

MODEL_FORMAT = "gp-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class KernelParams:
    """SE-ARD kernel hyperparameters.

    Parameters
    ----------
    lengthscales : ndarray, shape (d,)
        Per-dimension lengthscales, all > 0.
    signal_variance : float
        Prior variance of the latent function, > 0.
    noise_variance : float
        Observation noise variance, >= 0.
    """

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float)
        object.__setattr__(self, "lengthscales", ls)
        if ls.ndim != 1 or ls.size == 0:
            raise InvalidArgumentError("lengthscales must be a non-empty 1-D array")
        if not np.all(ls > 0):
            raise InvalidArgumentError("all lengthscales must be > 0")
        if not self.signal_variance > 0:
            raise InvalidArgumentError("signal_variance must be > 0")
        if self.noise_variance < 0:
            raise InvalidArgumentError("noise_variance must be >= 0")

    @property
    def dim(self) -> int:
        return self.lengthscales.size


@dataclass(frozen=True)
class LinearMeanParams:
    """Linear mean function with per-dimension sign constraints.

    ``sign_mask`` entries are one of ``"negative"``, ``"positive"``,
    ``"zero"`` or ``"free"``; coefficients must respect the mask.
    """

    coefficients: np.ndarray
    sign_mask: tuple

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "sign_mask", tuple(self.sign_mask))
        if coef.ndim != 1:
            raise InvalidArgumentError("mean coefficients must be 1-D")
        if len(self.sign_mask) != coef.size:
            raise InvalidArgumentError("sign_mask length must match coefficients")
        for s in self.sign_mask:
            if s not in _SIGNS:
                raise InvalidArgumentError(f"unknown sign constraint {s!r}")
        _check_sign_mask(coef, self.sign_mask)

    @property
    def dim(self) -> int:
        return self.coefficients.size


def _check_sign_mask(coef: np.ndarray, mask) -> None:
    for j, s in enumerate(mask):
        c = coef[j]
        if s == SIGN_NEGATIVE and c > 0:
            raise InvalidArgumentError(f"coefficient {j} must be <= 0, got {c}")
        if s == SIGN_POSITIVE and c < 0:
            raise InvalidArgumentError(f"coefficient {j} must be >= 0, got {c}")
        if s == SIGN_ZERO and c != 0:
            raise InvalidArgumentError(f"coefficient {j} is fixed at 0, got {c}")


def microhardness_mean_config(dim: int = 8, secondary_index: int = 1,
                              voltage_index: int = 7) -> LinearMeanParams:
    """Hybrid-mean configuration: negative secondary-gas-flow trend,
    positive voltage trend, every other coefficient fixed at zero."""
    mask = [SIGN_ZERO] * dim
    mask[secondary_index] = SIGN_NEGATIVE
    mask[voltage_index] = SIGN_POSITIVE
    return LinearMeanParams(np.zeros(dim), tuple(mask))


@dataclass(frozen=True)
class HyperPrior:
    """Weak independent Gaussian priors on log hyperparameters, used to
    regularize fits on very small data sets (MAP instead of plain maximum
    marginal likelihood). Means and standard deviations are in log space
    and model coordinates."""

    lengthscale_mu: float = math.log(1.0)
    lengthscale_sd: float = 1.5
    signal_variance_mu: float = math.log(2.0)
    signal_variance_sd: float = 1.5
    noise_variance_mu: float = math.log(0.05)
    noise_variance_sd: float = 2.0

    def penalty_and_grad(self, theta: np.ndarray, dim: int) -> tuple:
        mus = np.concatenate([np.full(dim, self.lengthscale_mu),
                              [self.signal_variance_mu, self.noise_variance_mu]])
        sds = np.concatenate([np.full(dim, self.lengthscale_sd),
                              [self.signal_variance_sd, self.noise_variance_sd]])
        z = (theta[: dim + 2] - mus) / sds
        grad = np.zeros_like(theta)
        grad[: dim + 2] = z / sds
        return float(0.5 * z @ z), grad


def default_prior() -> HyperPrior:
    return HyperPrior()


@dataclass(frozen=True)
class Dataset:
    """Paired training inputs (p, d) and targets (p,)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.shape[0] == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 and X.shape[1] else 0)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)
        if X.shape[0] != y.size:
            raise InvalidArgumentError(
                f"inputs ({X.shape[0]}) and targets ({y.size}) must have equal length")

    @property
    def size(self) -> int:
        return self.targets.size

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: float
    variance: float


def kernel_eval(a, b, params: KernelParams) -> float:
    """SE-ARD kernel between two points:
    signal_variance * exp(-1/2 sum_d ((a_d - b_d) / l_d)^2)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != params.dim or b.size != params.dim:
        raise InvalidArgumentError(
            f"kernel_eval dimension mismatch: {a.size}, {b.size} vs {params.dim}")
    z = (a - b) / params.lengthscales
    return float(params.signal_variance * math.exp(-0.5 * float(z @ z)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    """Cross-covariance matrix k(A, B) of shape (len(A), len(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != params.dim or B.shape[1] != params.dim:
        raise InvalidArgumentError("kernel_matrix dimension mismatch")
    As = A / params.lengthscales
    Bs = B / params.lengthscales
    sq = (
        np.sum(As * As, axis=1)[:, None]
        + np.sum(Bs * Bs, axis=1)[None, :]
        - 2.0 * As @ Bs.T
    )
    np.maximum(sq, 0.0, out=sq)
    return params.signal_variance * np.exp(-0.5 * sq)


def mean_eval(x, mean: Optional[LinearMeanParams]) -> float:
    """Linear mean: dot product of the coefficients with x (0 for zero mean)."""
    if mean is None:
        return 0.0
    x = np.asarray(x, dtype=float).ravel()
    if x.size != mean.dim:
        raise InvalidArgumentError(
            f"mean_eval dimension mismatch: {x.size} vs {mean.dim}")
    return float(mean.coefficients @ x)


def _mean_vector(X: np.ndarray, mean: Optional[LinearMeanParams]) -> np.ndarray:
    if mean is None:
        return np.zeros(X.shape[0])
    return X @ mean.coefficients


@dataclass(frozen=True)
class GPModel:
    """Trained GP with cached Cholesky factorization.

    ``kernel`` and ``mean`` are expressed in model coordinates: inputs
    scaled by ``input_bounds`` (identity when None) and targets
    standardized by ``(y_mean, y_std)``. The factorization caches
    ``chol`` (lower-triangular factor of K + noise*I + jitter*I on the
    scaled inputs) and ``alpha = (K + noise*I)^-1 (z - mean(U))``.
    """

    kernel: KernelParams
    mean: Optional[LinearMeanParams]
    data: Dataset
    input_bounds: Optional[tuple] = None  # (lo (d,), hi (d,)) raw-unit arrays
    y_mean: float = 0.0
    y_std: float = 1.0
    scaled_inputs: np.ndarray = field(default=None, repr=False)
    chol: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)
    residual: np.ndarray = field(default=None, repr=False)
    jitter: float = 0.0

    @classmethod
    def build(cls, kernel: KernelParams, mean: Optional[LinearMeanParams],
              data: Dataset, input_bounds=None, y_mean: float = 0.0,
              y_std: float = 1.0) -> "GPModel":
        """Assemble a model and compute its factorization."""
        if data.size and data.dim != kernel.dim:
            raise InvalidArgumentError(
                f"data dim {data.dim} does not match kernel dim {kernel.dim}")
        if mean is not None and mean.dim != kernel.dim:
            raise InvalidArgumentError("mean dim does not match kernel dim")
        if not y_std > 0:
            raise InvalidArgumentError("y_std must be > 0")
        U = _scale_inputs(data.inputs, input_bounds)
        z = (data.targets - y_mean) / y_std
        if data.size == 0:
            return cls(kernel, mean, data, input_bounds, y_mean, y_std,
                       U, np.zeros((0, 0)), np.zeros(0), np.zeros(0), 0.0)
        r = z - _mean_vector(U, mean)
        L, jitter = _stable_cholesky(
            kernel_matrix(U, U, kernel)
            + kernel.noise_variance * np.eye(data.size),
            kernel.signal_variance, "K(X,X) + noise")
        a = cho_solve((L, True), r)
        return cls(kernel, mean, data, input_bounds, y_mean, y_std,
                   U, L, a, r, jitter)

    def scale(self, X: np.ndarray) -> np.ndarray:
        """Map raw-unit inputs into model coordinates."""
        return _scale_inputs(X, self.input_bounds)

    @property
    def signal_variance_raw(self) -> float:
        """Prior variance in raw target units."""
        return self.kernel.signal_variance * self.y_std ** 2


def _scale_inputs(X: np.ndarray, input_bounds) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if input_bounds is None:
        return X
    lo, hi = (np.asarray(b, dtype=float) for b in input_bounds)
    span = hi - lo
    if np.any(span <= 0):
        raise InvalidArgumentError("input bounds must satisfy hi > lo")
    return (X - lo) / span


def _stable_cholesky(A: np.ndarray, signal_variance: float,
                     matrix_name: str) -> tuple:
    """Lower Cholesky factor with escalating relative jitter."""
    jitter = 0.0
    scale = JITTER_START * signal_variance
    eye = np.eye(A.shape[0])
    while True:
        try:
            L = cholesky(A + jitter * eye, lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        jitter = scale if jitter == 0.0 else jitter * 10.0
        if jitter > JITTER_MAX * signal_variance:
            raise NumericalFailureError(
                f"Cholesky factorization of {matrix_name} failed: matrix is "
                f"not positive definite after jitter escalation to "
                f"{jitter:.3e}", matrix=matrix_name)


def posterior(model: GPModel, query) -> PosteriorPrediction:
    """Posterior mean and variance at a single query point (raw units)."""
    m, v = posterior_batch(model, np.atleast_2d(np.asarray(query, dtype=float)))
    return PosteriorPrediction(float(m[0]), float(v[0]))


def posterior_batch(model: GPModel, X) -> tuple:
    """Posterior means and variances at query points X (raw units).

    Implements
        mu(q)  = m(q) + k(q, X) [K + noise I]^-1 (z - m(X))
        var(q) = k(q, q) - k(q, X) [K + noise I]^-1 k(X, q)
    through the cached triangular factor, then de-standardizes. Variances
    are clamped to zero from below after an internal -1e-10 sanity bound.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.kernel.dim:
        raise InvalidArgumentError(
            f"query dim {X.shape[1]} does not match model dim {model.kernel.dim}")
    U_q = model.scale(X)
    prior_mean = _mean_vector(U_q, model.mean)
    prior_var = np.full(X.shape[0], model.kernel.signal_variance)
    if model.data.size == 0:
        return (model.y_mean + model.y_std * prior_mean,
                model.y_std ** 2 * prior_var)
    K_star = kernel_matrix(model.scaled_inputs, U_q, model.kernel)
    mean_z = prior_mean + K_star.T @ model.alpha
    V = solve_triangular(model.chol, K_star, lower=True)
    var_z = prior_var - np.sum(V * V, axis=0)
    if np.any(var_z < -1e-10 * max(model.kernel.signal_variance, 1.0)):
        raise NumericalFailureError(
            "posterior variance fell below the numerical tolerance",
            matrix="K(X,X) + noise")
    np.maximum(var_z, 0.0, out=var_z)
    return (model.y_mean + model.y_std * mean_z,
            model.y_std ** 2 * var_z)


def log_marginal_likelihood(model: GPModel) -> float:
    """Gaussian log marginal likelihood of the (standardized) targets.

    Computed in model coordinates, so the value is the quantity maximized
    by :func:`fit`. Deterministic for fixed inputs and invariant under
    permutation of the (input, target) pairs.
    """
    p = model.data.size
    if p < 1:
        raise InvalidArgumentError("log marginal likelihood requires p >= 1")
    r = model.residual
    return float(
        -0.5 * r @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * p * math.log(2.0 * math.pi))


# ---------------------------------------------------------------------------
# Hyperparameter fitting
# ---------------------------------------------------------------------------


class _ThetaCodec:
    """Pack/unpack (kernel, mean) parameters into an unconstrained-ish
    optimization vector. Positive kernel parameters are log-transformed;
    sign-constrained mean coefficients are parameterized as +/- exp(theta)
    so constraints hold by construction."""

    def __init__(self, dim: int, mean_config: Optional[LinearMeanParams]):
        self.dim = dim
        self.mean_config = mean_config
        self.mean_slots = []  # (coef index, sign)
        if mean_config is not None:
            for j, s in enumerate(mean_config.sign_mask):
                if s != SIGN_ZERO:
                    self.mean_slots.append((j, s))

    @property
    def n_params(self) -> int:
        return self.dim + 2 + len(self.mean_slots)

    def pack(self, kernel: KernelParams, mean: Optional[LinearMeanParams]) -> np.ndarray:
        theta = np.empty(self.n_params)
        theta[: self.dim] = np.log(kernel.lengthscales)
        theta[self.dim] = math.log(kernel.signal_variance)
        theta[self.dim + 1] = math.log(max(kernel.noise_variance, NOISE_FLOOR))
        for k, (j, s) in enumerate(self.mean_slots):
            c = mean.coefficients[j] if mean is not None else 0.0
            if s == SIGN_FREE:
                theta[self.dim + 2 + k] = c
            else:
                theta[self.dim + 2 + k] = math.log(
                    max(abs(c), MEAN_MAGNITUDE_BOUNDS[0]))
        return theta

    def unpack(self, theta: np.ndarray) -> tuple:
        kernel = KernelParams(
            lengthscales=np.exp(theta[: self.dim]),
            signal_variance=math.exp(theta[self.dim]),
            # exp(log(floor)) can undershoot the floor by one ulp
            noise_variance=max(math.exp(theta[self.dim + 1]), NOISE_FLOOR),
        )
        mean = None
        if self.mean_config is not None:
            coef = np.zeros(self.dim)
            for k, (j, s) in enumerate(self.mean_slots):
                t = theta[self.dim + 2 + k]
                if s == SIGN_FREE:
                    coef[j] = t
                elif s == SIGN_POSITIVE:
                    coef[j] = math.exp(t)
                else:
                    coef[j] = -math.exp(t)
            mean = LinearMeanParams(coef, self.mean_config.sign_mask)
        return kernel, mean

    def bounds(self):
        b = [(math.log(LENGTHSCALE_BOUNDS[0]), math.log(LENGTHSCALE_BOUNDS[1]))] * self.dim
        b.append((math.log(SIGNAL_VARIANCE_BOUNDS[0]), math.log(SIGNAL_VARIANCE_BOUNDS[1])))
        b.append((math.log(NOISE_FLOOR), math.log(NOISE_CEIL)))
        for _, s in self.mean_slots:
            if s == SIGN_FREE:
                b.append((-MEAN_MAGNITUDE_BOUNDS[1], MEAN_MAGNITUDE_BOUNDS[1]))
            else:
                b.append((math.log(MEAN_MAGNITUDE_BOUNDS[0]),
                          math.log(MEAN_MAGNITUDE_BOUNDS[1])))
        return b


def _nll_and_grad(theta: np.ndarray, codec: _ThetaCodec, U: np.ndarray,
                  z: np.ndarray, prior: Optional[HyperPrior] = None) -> tuple:
    """Negative log marginal likelihood (plus an optional prior penalty)
    and its gradient in theta space."""
    kernel, mean = codec.unpack(theta)
    p = U.shape[0]
    r = z - _mean_vector(U, mean)
    K_se = kernel_matrix(U, U, kernel)
    A = K_se + kernel.noise_variance * np.eye(p)
    L, _ = _stable_cholesky(A, kernel.signal_variance, "K(X,X) + noise")
    alpha = cho_solve((L, True), r)
    nll = (0.5 * r @ alpha + np.sum(np.log(np.diag(L)))
           + 0.5 * p * math.log(2.0 * math.pi))

    A_inv = cho_solve((L, True), np.eye(p))
    W = np.outer(alpha, alpha) - A_inv
    grad = np.empty(codec.n_params)
    # d/d(log lengthscale_d): K_se o (squared scaled diffs per dimension)
    for d in range(codec.dim):
        diff = U[:, d][:, None] - U[:, d][None, :]
        dA = K_se * (diff * diff) / kernel.lengthscales[d] ** 2
        grad[d] = -0.5 * np.sum(W * dA)
    grad[codec.dim] = -0.5 * np.sum(W * K_se)
    grad[codec.dim + 1] = -0.5 * kernel.noise_variance * np.trace(W)
    for k, (j, s) in enumerate(codec.mean_slots):
        g_coef = -(U[:, j] @ alpha)
        if s == SIGN_FREE:
            grad[codec.dim + 2 + k] = g_coef
        else:
            grad[codec.dim + 2 + k] = g_coef * mean.coefficients[j]
    if prior is not None:
        pen, pen_grad = prior.penalty_and_grad(theta, codec.dim)
        nll += pen
        grad = grad + pen_grad
    return float(nll), grad


def default_init(dim: int) -> KernelParams:
    """Shared starting point: equal lengthscales on the scaled inputs."""
    return KernelParams(np.full(dim, 0.5), 1.0, 0.05)


def fit(data: Dataset, mean_config: Optional[LinearMeanParams],
        init: Optional[KernelParams] = None, restarts: int = 3, *,
        input_bounds=None, standardize_targets: bool = True,
        seed: Optional[int] = None, maxiter: int = 100,
        prior: Optional[HyperPrior] = None) -> GPModel:
    """Fit kernel (and mean) hyperparameters by maximum marginal likelihood.

    Runs ``restarts`` L-BFGS-B ascents (the first from ``init``, the rest
    from seeded perturbations of it) and keeps the best model. The result
    is never worse than the initialization point, sign constraints in
    ``mean_config`` hold on the fitted coefficients, and hyperparameters
    stay inside the configured box bounds.

    Parameters
    ----------
    data : Dataset
        Training pairs, p >= 2.
    mean_config : LinearMeanParams or None
        None selects a zero mean. Otherwise the sign mask defines the
        constrained coefficients; initial values are taken from it.
    init : KernelParams, optional
        Starting hyperparameters in model coordinates. Defaults to
        :func:`default_init`.
    restarts : int
        Number of optimization starts, >= 1.
    input_bounds : (lo, hi) pair of arrays, optional
        Raw-unit domain bounds used to scale inputs to [0, 1].
    standardize_targets : bool
        Standardize targets to zero mean / unit variance before fitting.
    seed : int, optional
        Seed for the restart perturbations.
    maxiter : int
        L-BFGS-B iteration cap per restart.
    prior : HyperPrior, optional
        Weak log-space Gaussian priors on the kernel hyperparameters; when
        given, the objective becomes the MAP criterion. Small campaigns use
        this to avoid degenerate overconfident fits; the default (None)
        keeps the plain marginal-likelihood objective.
    """
    if data.size < 2:
        raise InvalidArgumentError("fit requires at least 2 training points")
    if restarts < 1:
        raise InvalidArgumentError("restarts must be >= 1")
    if init is None:
        init = default_init(data.dim)
    if init.dim != data.dim:
        raise InvalidArgumentError("init dim does not match data dim")

    U = _scale_inputs(data.inputs, input_bounds)
    if standardize_targets:
        y_mean = float(np.mean(data.targets))
        y_std = float(np.std(data.targets))
        if y_std <= 0:
            y_std = 1.0
    else:
        y_mean, y_std = 0.0, 1.0
    z = (data.targets - y_mean) / y_std

    codec = _ThetaCodec(data.dim, mean_config)
    init_kernel = KernelParams(init.lengthscales, init.signal_variance,
                               max(init.noise_variance, NOISE_FLOOR))
    theta0 = codec.pack(init_kernel, mean_config)
    bounds = codec.bounds()
    lo_b = np.array([b[0] for b in bounds])
    hi_b = np.array([b[1] for b in bounds])

    rng = np.random.default_rng(seed)
    best_theta = None
    best_nll = np.inf
    diagnostics = []
    for r_i in range(restarts):
        if r_i == 0:
            start = theta0.copy()
        else:
            start = theta0 + rng.normal(0.0, 1.0, size=theta0.size)
            # Restart mean magnitudes from a broad positive range so the
            # trend terms do not stay pinned near zero.
            for k, (_, s) in enumerate(codec.mean_slots):
                if s != SIGN_FREE:
                    start[codec.dim + 2 + k] = math.log(
                        rng.uniform(1e-3, 1.0))
        start = np.clip(start, lo_b, hi_b)
        try:
            res = minimize(_nll_and_grad, start, args=(codec, U, z, prior),
                           jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": maxiter})
            diagnostics.append(f"restart {r_i}: nll={res.fun:.6g} {res.message}")
            if np.isfinite(res.fun) and res.fun < best_nll:
                best_nll = res.fun
                best_theta = res.x
        except (NumericalFailureError, FloatingPointError) as exc:
            diagnostics.append(f"restart {r_i}: failed ({exc})")
    if best_theta is None:
        raise FitFailureError("all fitting restarts failed", diagnostics)

    # Never return a model worse than the initialization point.
    try:
        init_nll, _ = _nll_and_grad(theta0, codec, U, z, prior)
    except NumericalFailureError:
        init_nll = np.inf
    if init_nll < best_nll:
        best_theta = theta0

    kernel, mean = codec.unpack(best_theta)
    return GPModel.build(kernel, mean, data, input_bounds, y_mean, y_std)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_dict(model: GPModel) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": {
            "lengthscales": model.kernel.lengthscales.tolist(),
            "signal_variance": model.kernel.signal_variance,
            "noise_variance": model.kernel.noise_variance,
        },
        "mean": None,
        "standardization": {
            "input_bounds": None if model.input_bounds is None else
            [np.asarray(model.input_bounds[0], dtype=float).tolist(),
             np.asarray(model.input_bounds[1], dtype=float).tolist()],
            "y_mean": model.y_mean,
            "y_std": model.y_std,
        },
        "data": {
            "inputs": model.data.inputs.tolist(),
            "targets": model.data.targets.tolist(),
        },
    }
    if model.mean is not None:
        d["mean"] = {
            "coefficients": model.mean.coefficients.tolist(),
            "sign_mask": list(model.mean.sign_mask),
        }
    return d


def model_from_dict(d: dict) -> GPModel:
    if d.get("format") != MODEL_FORMAT:
        raise VersionMismatchError(f"unexpected document format {d.get('format')!r}")
    if d.get("version", 0) > MODEL_VERSION:
        raise VersionMismatchError(
            f"gp model version {d['version']} requires migration "
            f"(supported: {MODEL_VERSION})")
    kernel = KernelParams(
        np.asarray(d["kernel"]["lengthscales"], dtype=float),
        float(d["kernel"]["signal_variance"]),
        float(d["kernel"]["noise_variance"]),
    )
    mean = None
    if d.get("mean") is not None:
        mean = LinearMeanParams(
            np.asarray(d["mean"]["coefficients"], dtype=float),
            tuple(d["mean"]["sign_mask"]),
        )
    std = d["standardization"]
    bounds = None
    if std.get("input_bounds") is not None:
        bounds = (np.asarray(std["input_bounds"][0], dtype=float),
                  np.asarray(std["input_bounds"][1], dtype=float))
    data = Dataset(np.asarray(d["data"]["inputs"], dtype=float),
                   np.asarray(d["data"]["targets"], dtype=float))
    return GPModel.build(kernel, mean, data, bounds,
                         float(std["y_mean"]), float(std["y_std"]))


def model_to_json(model: GPModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def model_from_json(s: str) -> GPModel:
    return model_from_dict(json.loads(s))
