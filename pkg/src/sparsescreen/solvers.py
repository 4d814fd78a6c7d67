"""Update operators (Prox-SGD, subgradient SGD), step schedules and the two
finite-sum reference solvers (proximal gradient and SAGA)."""
from dataclasses import dataclass

import numpy as np

from .screening import certified_gap


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap; ``beta`` and ``gap`` hold the last state."""

    def __init__(self, msg, beta, gap):
        super().__init__(msg)
        self.beta = beta
        self.gap = gap


@dataclass(frozen=True)
class StepSchedule:
    """gamma_t = scale / t**exponent."""

    scale: float
    exponent: float = 0.51
    kind: str = "power"

    def __post_init__(self):
        if self.kind != "power":
            raise ValueError("only power schedules are supported")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")
        if not 0.5 <= self.exponent <= 1.0:
            raise ValueError("exponent must lie in [0.5, 1]")

    @classmethod
    def per_sample(cls, m, L, exponent=0.51):
        """The ``1 / (m L t^p)`` form, ``L`` being the gradient Lipschitz constant."""
        return cls(1.0 / (m * L), exponent)


def step_size(t, sched):
    if t < 1:
        raise ValueError("iterations are counted from 1")
    return sched.scale / t ** sched.exponent


@dataclass
class ActiveModel:
    """Coefficients on the surviving coordinates.

    ``beta[k]`` is the coefficient of original feature ``active_map[k]``;
    ``active_groups`` are the original ids of the surviving groups.
    Everything outside ``active_map`` is zero for good.
    """

    beta: np.ndarray
    active_map: np.ndarray
    active_groups: np.ndarray
    n: int

    @classmethod
    def zeros(cls, reg):
        return cls(np.zeros(reg.n), np.arange(reg.n), np.arange(reg.n_groups), reg.n)

    @property
    def dim(self):
        return self.beta.size

    def to_dense(self):
        out = np.zeros(self.n)
        out[self.active_map] = self.beta
        return out

    def prune(self, keep_groups, keep_features):
        """Keep local groups/coordinates ``keep_*`` (local positions)."""
        self.beta = self.beta[keep_features]
        self.active_map = self.active_map[keep_features]
        self.active_groups = self.active_groups[keep_groups]
        return self


def _check_row(model, x):
    if x.dim != model.dim:
        raise ValueError("sample restricted to %d coordinates, model has %d"
                         % (x.dim, model.dim))


def _prox_sgd_update(beta, idx, val, theta, gamma, lam, reg):
    beta[idx] -= (gamma * theta) * val
    return reg.prox(beta, lam * gamma)


def proxsgd_step(model, theta, x, gamma, lam, reg):
    """beta <- prox_{lam*gamma*Omega}(beta - gamma * theta * x); updates ``model``."""
    _check_row(model, x)
    if not gamma > 0:
        raise ValueError("step size must be > 0")
    model.beta = _prox_sgd_update(model.beta.copy(), x.indices, x.values, theta, gamma, lam, reg)
    return model


def sgd_step(model, theta, x, gamma, lam, Z):
    """beta <- beta - gamma * (theta * x + lam * Z), Z a subgradient of Omega at beta."""
    _check_row(model, x)
    beta = model.beta.copy()
    beta[x.indices] -= (gamma * theta) * x.values
    beta -= (gamma * lam) * np.asarray(Z, dtype=float)
    model.beta = beta
    return model


def spectral_norm_sq(X, tol=1e-12, max_iter=10000, seed=0):
    """Largest eigenvalue of X^T X by power iteration."""
    n = X.shape[1]
    if n == 0 or X.shape[0] == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = X.T @ (X @ v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est


def lipschitz_full(data, loss):
    """Lipschitz constant of the gradient of (1/m) sum_i f(x_i . beta; y_i)."""
    return loss.L * spectral_norm_sq(data.X) / data.m


def pgd_solve(data, loss, reg, lam, tol=1e-9, max_iter=1_000_000, beta0=None, callback=None):
    """Proximal gradient with fixed step 1/L_full until the certified gap <= tol.

    ``callback(beta, objective)`` is invoked after every iteration.
    Raises ``ConvergenceError`` after ``max_iter`` iterations.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    X, y, m = data.X, data.labels, data.m
    if loss.classification:
        data.check_binary_labels()
    # small margin over the power-iteration estimate keeps the step safe
    L_full = lipschitz_full(data, loss) * (1.0 + 1e-6)
    beta = np.zeros(data.n) if beta0 is None else np.array(beta0, dtype=float)
    if L_full == 0.0:
        # all-zero design: the loss is constant, zero is optimal
        return np.zeros(data.n)
    step = 1.0 / L_full
    gap = certified_gap(beta, X, y, loss, reg, lam)
    for _ in range(max_iter):
        if gap <= tol:
            return beta
        theta = loss.deriv(X @ beta, y)
        beta = reg.prox(beta - step * (X.T @ theta) / m, step * lam)
        gap = certified_gap(beta, X, y, loss, reg, lam)
        if callback is not None:
            callback(beta, float(np.mean(loss.value(X @ beta, y))) + lam * reg.omega(beta))
    if gap <= tol:
        return beta
    raise ConvergenceError("pgd did not reach gap %g (last %g)" % (tol, gap), beta, gap)


def saga_solve(data, loss, reg, lam, tol=1e-9, max_epochs=1_000_000, seed=0, callback=None):
    """Proximal SAGA with step 1/(3 L max_i ||x_i||^2); stops when the
    certified gap (checked once per epoch) is <= tol.

    The table holds one scalar per sample, f'(x_i . beta; y_i) at that
    sample's last visit. ``callback(i, beta_used, table)`` runs after each
    inner update (``beta_used`` is the iterate the gradient was taken at).
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    X, y, m, n = data.X, data.labels, data.m, data.n
    if loss.classification:
        data.check_binary_labels()
    row_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    L_row = loss.L * float(row_sq.max()) if m else 0.0
    beta = np.zeros(n)
    if L_row == 0.0:
        return beta
    step = 1.0 / (3.0 * L_row)
    _, df, _ = loss.scalar_funcs()
    table = loss.deriv(X @ beta, y)
    avg = X.T @ table / m
    indptr, indices, vals = X.indptr, X.indices, X.data
    rng = np.random.Generator(np.random.PCG64(seed))
    gap = certified_gap(beta, X, y, loss, reg, lam)
    for _ in range(max_epochs):
        if gap <= tol:
            return beta
        for i in rng.integers(0, m, size=m):
            sl = slice(indptr[i], indptr[i + 1])
            idx, val = indices[sl], vals[sl]
            theta = df(float(val @ beta[idx]), y[i])
            delta = theta - table[i]
            w = beta - step * avg
            w[idx] -= (step * delta) * val
            beta_used = beta
            beta = reg.prox(w, step * lam)
            avg[idx] += (delta / m) * val
            table[i] = theta
            if callback is not None:
                callback(int(i), beta_used, table)
        gap = certified_gap(beta, X, y, loss, reg, lam)
    if gap <= tol:
        return beta
    raise ConvergenceError("saga did not reach gap %g (last %g)" % (tol, gap), beta, gap)
