"""Safe-region screening: finite-sum duality gap, online (streaming) running
estimates of the certificate and gap, and the per-group elimination test.

Conventions
-----------
Every certificate vector (``X``, ``Z``, ``Y`` below and the finite-sum
center) carries the ``-1/lam`` factor, i.e. it estimates
``-(1/lam) sum_s eta_s theta_s x_s``, which lies in ``dOmega(beta*)`` at
the optimum. A group ``g`` is eliminated when
``Omega_g^D(center_g) < 1 - r_g``, with radius
``r_g = sqrt(2 L N_g R) / lam``.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WeightRule:
    """mu_t = 1 / t**w with a global counter t = 1, 2, ...

    ``mu_1 = 1`` makes the first sample overwrite the (zero) initial state.
    """

    w: float = 0.51

    def __post_init__(self):
        if not 0.5 < self.w <= 1.0:
            raise ValueError("exponent w must lie in (0.5, 1], got %r" % self.w)

    def mu(self, t):
        return 1.0 / t ** self.w


def eta_weights(mu):
    """eta_s = mu_s * prod_{i=s+1}^{t} (1 - mu_i) for s = 1..t.

    These are the weights with which the recursion
    ``a_t = mu_t f_t + (1 - mu_t) a_{t-1}`` (started from ``a_0 = 0``)
    averages ``f_1..f_t``. They sum to one whenever ``mu_1 = 1``.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.size == 0:
        return mu.copy()
    keep = 1.0 - mu
    # tail[s] = prod_{i>s} (1 - mu_i)
    tail = np.ones_like(mu)
    tail[:-1] = np.cumprod(keep[::-1])[::-1][1:]
    return mu * tail


@dataclass
class SafeRegion:
    """Per-group balls ``Omega_g^D(Z - center) <= radii[g]``."""

    center: np.ndarray
    radii: np.ndarray
    residual: float = 0.0
    raw_residual: float = 0.0

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        if np.any(self.radii < 0) or np.any(np.isnan(self.radii)):
            raise ValueError("radii must be nonnegative")


def screen_groups(region, reg):
    """Group ids g with ``1 - Omega_g^D(center_g) > r_g`` (strict)."""
    dual = reg.dual_group_norms(region.center)
    # infinite radii compare False: nothing screened
    hit = (1.0 - dual) > region.radii
    return np.flatnonzero(hit)


def radius(gap_plus, N_g, L, lam):
    """sqrt(2 L N_g gap_plus) / lam, with ``gap_plus`` clamped at zero."""
    gap_plus = np.maximum(gap_plus, 0.0)
    return np.sqrt(2.0 * L * np.asarray(N_g, dtype=float) * gap_plus) / lam


finite_radius = radius


def dual_scaling(thetas, X, reg, lam, eta):
    """Largest a <= 1 with ``Omega^D(sum_i eta_i a theta_i x_i) <= lam``."""
    dn = reg.omega_dual(X.T @ (eta * thetas))
    return 1.0 if dn <= lam else lam / dn


def primal_value(beta, X, y, loss, reg, lam, eta):
    return float(eta @ loss.value(X @ beta, y)) + lam * reg.omega(beta)


def dual_value(thetas, y, loss, eta):
    conj = loss.conjugate(thetas, y)
    if not np.all(np.isfinite(conj)):
        return -np.inf
    return -float(eta @ conj)


def finite_gap(beta, thetas, data, loss, reg, lam, eta=None):
    """P(beta) - D(thetas) for the eta-weighted empirical problem.

    ``thetas`` are used as given: scale them into the feasible set first
    (see ``dual_scaling``) if a certified nonnegative gap is wanted.
    Uniform weights when ``eta`` is None. Returns ``inf`` when some
    conjugate is infinite.
    """
    X, y = data.X, data.labels
    if eta is None:
        eta = np.full(data.m, 1.0 / data.m)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (data.m,):
        raise ValueError("need one dual value per sample")
    return primal_value(beta, X, y, loss, reg, lam, eta) - dual_value(thetas, y, loss, eta)


def certified_gap(beta, X, y, loss, reg, lam):
    """Duality gap at ``beta`` with the rescaled feasible dual point (uniform weights)."""
    m = X.shape[0]
    eta = np.full(m, 1.0 / m)
    thetas = loss.deriv(X @ beta, y)
    a = dual_scaling(thetas, X, reg, lam, eta)
    return primal_value(beta, X, y, loss, reg, lam, eta) - dual_value(a * thetas, y, loss, eta)


def finite_region(anchor_beta, X, y, loss, reg, lam):
    """Safe region from a full pass over the data at ``anchor_beta``.

    ``X`` (CSR, m x d) and ``reg`` must describe the same d coordinates.
    """
    m = X.shape[0]
    eta = np.full(m, 1.0 / m)
    z = X @ anchor_beta
    thetas = loss.deriv(z, y)
    center = -(X.T @ thetas) / (lam * m)
    gap = primal_value(anchor_beta, X, y, loss, reg, lam, eta) - dual_value(thetas, y, loss, eta)
    f0 = float(np.mean(loss.value(np.zeros(m), y)))
    raw = gap + f0 * max(reg.omega_dual(center) - 1.0, 0.0)
    col = np.asarray(X.multiply(X).sum(axis=0)).ravel()
    if reg.structure.identity:
        N = col / m
    else:
        N = np.bincount(reg.structure.labels, weights=col, minlength=reg.n_groups) / m
    if not np.isfinite(raw):
        radii = np.full(reg.n_groups, np.inf)
    else:
        radii = radius(raw, N, loss.L, lam)
    return SafeRegion(center, radii, residual=max(raw, 0.0), raw_residual=raw)


def build_finite_screen(anchor_beta, data, loss, reg, lam):
    """Safe region for the uniform-weight finite-sum problem at ``anchor_beta``."""
    return finite_region(np.asarray(anchor_beta, dtype=float), data.X, data.labels,
                         loss, reg, lam)


@dataclass
class ScreenState:
    """Running quantities of the online screening rule.

    Per segment (reset at each close): ``X`` certificate accumulator, ``v``
    weighted f(0) accumulator, ``u`` product of (1 - mu). Across segments:
    ``Z`` certificate, ``p``/``d`` online primal/dual values, ``S``
    infeasibility penalty, ``N`` per-group weighted squared dual norms of
    the samples, ``k`` global sample counter.
    """

    X: np.ndarray
    Z: np.ndarray
    N: np.ndarray
    p: float = 0.0
    d: float = 0.0
    v: float = 0.0
    u: float = 1.0
    S: float = 0.0
    k: int = 0
    segment: int = 0
    inner: int = 0
    invalid: bool = False
    history: list = field(default_factory=list)

    @classmethod
    def zeros(cls, dim, n_groups):
        return cls(X=np.zeros(dim), Z=np.zeros(dim), N=np.zeros(n_groups))

    def restrict(self, keep_groups, keep_features):
        """Drop eliminated coordinates/groups (positions are local indices)."""
        self.X = self.X[keep_features]
        self.Z = self.Z[keep_features]
        self.N = self.N[keep_groups]
        return self


def _inner_update(state, idx, val, y, theta, anchor_dot, anchor_omega,
                  sq_dual, f, fc, lam, mu):
    # sq_dual: (group ids, Omega_g^D(x_g)^2) for the groups x touches
    keep = 1.0 - mu
    X = state.X
    X *= keep
    X[idx] -= (mu * theta / lam) * val
    state.p = mu * (f(anchor_dot, y) + lam * anchor_omega) + keep * state.p
    conj = fc(theta, y)
    if conj == np.inf:
        state.invalid = True
    state.d = -mu * conj + keep * state.d
    N = state.N
    N *= keep
    N[sq_dual[0]] += mu * sq_dual[1]
    state.v = mu * f(0.0, y) + keep * state.v
    state.u *= keep
    state.inner += 1


def _sq_dual_norms(idx, val, reg):
    if reg.structure.identity:
        return idx, val * val
    g = reg.structure.labels[idx]
    groups, inv = np.unique(g, return_inverse=True)
    return groups, np.bincount(inv, weights=val * val)


def online_inner_update(state, x, y, theta, anchor_beta, loss, reg, lam, wr,
                        anchor_omega=None):
    """Advance all running recursions by one sample (in place; returns state).

    ``x`` is a SparseRow in the same (active) coordinates as ``state`` and
    ``reg``; ``theta`` = f'(x . beta_current; y) as used by the gradient step.
    """
    if x.dim != state.X.size:
        raise ValueError("sample dim %d != state dim %d" % (x.dim, state.X.size))
    state.k += 1
    mu = wr.mu(state.k)
    if anchor_omega is None:
        anchor_omega = reg.omega(anchor_beta)
    f, _, fc = loss.scalar_funcs()
    _inner_update(state, x.indices, x.values, float(y), float(theta),
                  x.dot(anchor_beta), anchor_omega,
                  _sq_dual_norms(x.indices, x.values, reg), f, fc, lam, mu)
    return state


def online_segment_close(state, reg, L, lam):
    """Fold the finished segment into the global estimates and build the region.

    Z <- u Z + X;  Y = X / (1 - u);  S <- u S + v (Omega^D(Y) - 1)_+;
    R = p - d + S (clamped at 0); radii sqrt(2 L N_g R) / lam.
    Segment accumulators are then reset. Returns ``(SafeRegion, state)``.
    """
    if state.inner == 0:
        raise ValueError("segment close without any inner update")
    u = state.u
    state.Z = u * state.Z + state.X
    Y = state.X / (1.0 - u) if u < 1.0 else state.X
    state.S = u * state.S + state.v * max(reg.omega_dual(Y) - 1.0, 0.0)
    raw = state.p - state.d + state.S
    if state.invalid or not np.isfinite(raw):
        radii = np.full(state.N.size, np.inf)
        R = np.inf
    else:
        R = max(raw, 0.0)
        radii = radius(R, state.N, L, lam)
    region = SafeRegion(state.Z.copy(), radii, residual=R, raw_residual=raw)
    state.history.append(dict(segment=state.segment, k=state.k, p=state.p, d=state.d,
                              S=state.S, R_raw=raw))
    state.X = np.zeros_like(state.X)
    state.v = 0.0
    state.u = 1.0
    state.inner = 0
    state.segment += 1
    return region, state
