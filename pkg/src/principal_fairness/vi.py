"""Bayesian logistic regression with a mean-field Gaussian posterior.

The variational family is q(theta) = prod_j N(mu_j, sigma_j^2), parameterised by
``(mu, log_sigma)``. The ELBO is estimated by Monte Carlo with reparameterised
draws ``theta = mu + sigma * eps`` and maximised with Adam on full-batch
gradients, so the only stochasticity comes from ``eps``.

For monitoring, :func:`elbo_quadrature` evaluates the same objective without
sampling noise: under q each linear predictor x.theta is Gaussian, so the
expected log-likelihood is a sum of 1-d Gauss-Hermite integrals and the prior
term is a closed-form KL.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)
# open-interval bounds for reported probabilities
_P_MIN = np.finfo(float).tiny
_P_MAX = 1.0 - np.finfo(float).epsneg


LR_SCHEDULES = ("inverse", "constant")


class NumericalError(RuntimeError):
    """Raised when the ELBO or its gradient becomes non-finite during fitting."""


@dataclass
class VariationalPosterior:
    mu: np.ndarray
    log_sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.log_sigma = np.asarray(self.log_sigma, dtype=float)
        if self.mu.shape != self.log_sigma.shape or self.mu.ndim != 1:
            raise ValueError(f"mu {self.mu.shape} and log_sigma {self.log_sigma.shape} must be equal 1-d")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.log_sigma))):
            raise ValueError("variational parameters must be finite")

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def init(cls, dim: int, sigma: float = 0.1) -> "VariationalPosterior":
        return cls(np.zeros(dim), np.full(dim, np.log(sigma)))

    @classmethod
    def from_flat(cls, params: np.ndarray) -> "VariationalPosterior":
        p = params.shape[0] // 2
        return cls(params[:p].copy(), params[p:].copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.mu, self.log_sigma])


@dataclass(frozen=True)
class FitConfig:
    prior_std: float = 1.0
    learning_rate: float = 0.01
    steps: int = 3000
    mc_samples: int = 8
    seed: int = 0
    init_sigma: float = 0.1
    lr_schedule: str = "inverse"
    decay_steps: float = 300.0

    def step_size(self, step: int) -> float:
        """Learning rate at 0-based ``step``; "inverse" is lr / (1 + step / decay_steps)."""
        if self.lr_schedule == "constant":
            return self.learning_rate
        return self.learning_rate / (1.0 + step / self.decay_steps)

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def __post_init__(self):
        if self.lr_schedule not in LR_SCHEDULES:
            raise ValueError(f"lr_schedule must be one of {LR_SCHEDULES}, got {self.lr_schedule!r}")
        if not self.decay_steps > 0:
            raise ValueError(f"decay_steps must be positive, got {self.decay_steps}")
        if not self.prior_std > 0:
            raise ValueError(f"prior_std must be positive, got {self.prior_std}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if not self.init_sigma > 0:
            raise ValueError(f"init_sigma must be positive, got {self.init_sigma}")


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **kw) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), **kw)


@dataclass
class FitResult:
    posterior: VariationalPosterior
    trace: np.ndarray  # (steps,) quadrature ELBO at each step, before the update
    mc_trace: np.ndarray  # (steps,) the Monte Carlo ELBO estimate the step was taken on
    config: FitConfig
    n_rows: int
    feature_names: list[str] = field(default_factory=list)

    @property
    def final_elbo(self) -> float:
        return float(self.trace[-1])


def log_sigmoid(x):
    """log(1 / (1 + exp(-x))), finite for any finite x."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=float))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    # exp of a non-positive argument only, so no overflow
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _check_dims(features: np.ndarray, labels: np.ndarray, p: int):
    if features.ndim != 2:
        raise ValueError(f"features must be 2-d, got shape {features.shape}")
    if features.shape[1] != p:
        raise ValueError(f"features have {features.shape[1]} columns but parameters have length {p}")
    if labels.shape != (features.shape[0],):
        raise ValueError(f"labels shape {labels.shape} does not match {features.shape[0]} rows")


def _log_joint_batch(thetas, features, labels, prior_std):
    """Log joint for each row of ``thetas`` (k, p); returns (values (k,), grads (k, p))."""
    p = thetas.shape[1]
    log_prior = -0.5 * p * (LOG_2PI + 2.0 * np.log(prior_std)) - 0.5 * np.sum(thetas**2, axis=1) / prior_std**2
    grad = -thetas / prior_std**2
    if features.shape[0] == 0:
        return log_prior, grad
    eta = thetas @ features.T  # (k, n)
    ll = labels * log_sigmoid(eta) + (1.0 - labels) * log_sigmoid(-eta)
    resid = labels - sigmoid(eta)
    return log_prior + ll.sum(axis=1), grad + resid @ features


def log_joint(theta, features, labels, prior_std: float = 1.0) -> float:
    """log N(theta; 0, prior_std^2 I) + Bernoulli-logit log likelihood."""
    theta = np.asarray(theta, dtype=float)
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    _check_dims(features, labels, theta.shape[0])
    value, _ = _log_joint_batch(theta[None, :], features, labels, prior_std)
    return float(value[0])


def _draw_noise(seed, n_draws: int, p: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((n_draws, p))


def _elbo_and_grad(mu, log_sigma, eps, features, labels, prior_std):
    sigma = np.exp(log_sigma)
    thetas = mu + sigma * eps
    lj, g_theta = _log_joint_batch(thetas, features, labels, prior_std)
    # log q at a reparameterised draw depends on (mu, log_sigma) only via -sum(log_sigma)
    log_q = -0.5 * mu.shape[0] * LOG_2PI - np.sum(log_sigma) - 0.5 * np.sum(eps**2, axis=1)
    value = float(np.mean(lj - log_q))
    g_mu = g_theta.mean(axis=0)
    g_log_sigma = (g_theta * eps).mean(axis=0) * sigma + 1.0
    return value, np.concatenate([g_mu, g_log_sigma])


def elbo_estimate(post: VariationalPosterior, features, labels, prior_std: float = 1.0,
                  n_draws: int = 1, seed=None) -> float:
    """Monte Carlo ELBO using ``n_draws`` reparameterised samples drawn from ``seed``."""
    value, _ = elbo_value_and_gradient(post, features, labels, prior_std, n_draws, seed)
    return value


def elbo_gradient(post: VariationalPosterior, features, labels, prior_std: float = 1.0,
                  n_draws: int = 1, seed=None) -> np.ndarray:
    """Reparameterised ELBO gradient w.r.t. ``(mu, log_sigma)``, flattened to length 2p.

    Uses exactly the draws :func:`elbo_estimate` uses for the same seed.
    """
    _, grad = elbo_value_and_gradient(post, features, labels, prior_std, n_draws, seed)
    return grad


def elbo_value_and_gradient(post, features, labels, prior_std=1.0, n_draws=1, seed=None):
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim == 2 and features.shape[0] == 0 and features.shape[1] == 0:
        features = np.zeros((0, post.dim))
    _check_dims(features, labels, post.dim)
    eps = _draw_noise(seed, n_draws, post.dim)
    return _elbo_and_grad(post.mu, post.log_sigma, eps, features, labels, prior_std)


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(40)
_GH_WEIGHTS = _GH_WEIGHTS / _GH_WEIGHTS.sum()


def _elbo_quad(mu, sigma2, features, features_sq, labels, prior_std):
    kl = 0.5 * np.sum(
        (sigma2 + mu**2) / prior_std**2 - 1.0 - np.log(sigma2) + 2.0 * np.log(prior_std)
    )
    if features.shape[0] == 0:
        return -kl
    mean = features @ mu
    sd = np.sqrt(features_sq @ sigma2)
    eta = mean[:, None] + sd[:, None] * _GH_NODES[None, :]
    ll = labels[:, None] * log_sigmoid(eta) + (1.0 - labels[:, None]) * log_sigmoid(-eta)
    return float(np.sum(ll @ _GH_WEIGHTS) - kl)


def elbo_quadrature(post: VariationalPosterior, features, labels, prior_std: float = 1.0) -> float:
    """ELBO by 40-node Gauss-Hermite quadrature per row plus the analytic KL to the prior."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim == 2 and features.shape == (0, 0):
        features = np.zeros((0, post.dim))
    _check_dims(features, labels, post.dim)
    return _elbo_quad(post.mu, post.sigma**2, features, features**2, labels, prior_std)


def adam_step(state: AdamState, params, grad, learning_rate: float) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam step in the ascent direction of ``grad``."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if not (params.shape == grad.shape == state.first_moment.shape == state.second_moment.shape):
        raise ValueError(
            f"length mismatch: params {params.shape}, grad {grad.shape}, "
            f"moments {state.first_moment.shape}"
        )
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params + learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(m, v, t, state.beta1, state.beta2, state.epsilon)
    return new_state, new_params


def fit_bayes_logistic(features, labels, cfg: FitConfig = FitConfig(),
                       feature_names=None) -> FitResult:
    """Fit q(theta) to a logistic regression posterior by ELBO ascent.

    ``features`` is the full design matrix, intercept column included (see
    :func:`principal_fairness.core.model_design`). Starts from mu=0,
    sigma=cfg.init_sigma and runs a fixed budget of ``cfg.steps`` Adam steps,
    each on a fresh ``cfg.mc_samples``-draw gradient estimate.
    """
    features = np.ascontiguousarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("need at least one training row")
    p = features.shape[1]
    _check_dims(features, labels, p)

    rng = np.random.default_rng(cfg.seed)
    features_sq = features**2
    post = VariationalPosterior.init(p, cfg.init_sigma)
    params = post.flat()
    state = AdamState.zeros(2 * p)
    trace = np.empty(cfg.steps)
    mc_trace = np.empty(cfg.steps)
    for step in range(cfg.steps):
        eps = rng.standard_normal((cfg.mc_samples, p))
        mu, log_sigma = params[:p], params[p:]
        with np.errstate(over="ignore", invalid="ignore"):  # checked explicitly below
            value, grad = _elbo_and_grad(mu, log_sigma, eps, features, labels, cfg.prior_std)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite ELBO or gradient at step {step}")
        mc_trace[step] = value
        trace[step] = _elbo_quad(mu, np.exp(2.0 * log_sigma), features, features_sq, labels, cfg.prior_std)
        state, params = adam_step(state, params, grad, cfg.step_size(step))
        if not np.all(np.isfinite(params)):
            raise NumericalError(f"non-finite variational parameters after step {step}")
    return FitResult(
        VariationalPosterior.from_flat(params), trace, mc_trace, cfg, features.shape[0],
        list(feature_names) if feature_names is not None else [],
    )


def sample_parameters(post: VariationalPosterior, seed=None) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return post.mu + post.sigma * rng.standard_normal(post.dim)


def predict_prob(theta, features_row) -> float:
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(features_row, dtype=float)
    if theta.shape != x.shape:
        raise ValueError(f"theta has length {theta.shape} but features row has {x.shape}")
    return float(np.clip(sigmoid(theta @ x), _P_MIN, _P_MAX))


def predict_probs(theta, features) -> np.ndarray:
    """Row-wise :func:`predict_prob` for a design matrix."""
    theta = np.asarray(theta, dtype=float)
    features = np.asarray(features, dtype=float)
    if features.shape[1] != theta.shape[0]:
        raise ValueError(f"theta has length {theta.shape[0]} but features have {features.shape[1]} columns")
    return np.clip(sigmoid(features @ theta), _P_MIN, _P_MAX)


def smoothed_trace(trace, window: int = 100) -> np.ndarray:
    """Trailing moving average; output length is ``len(trace) - window + 1``."""
    trace = np.asarray(trace, dtype=float)
    c = np.cumsum(np.insert(trace, 0, 0.0))
    return (c[window:] - c[:-window]) / window
