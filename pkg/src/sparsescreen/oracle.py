"""Brute-force reference computations for tests.

Nothing here is fast. Each function reaches its answer by a route that
does not share code with the closed forms it is used to check.
"""
import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from .screening import eta_weights

BRACKET = 50.0
_MAX_BRACKET = 1e6
_SLOPE_TOL = 1e-9


def _slope(obj, z, h=1e-6):
    return (obj(z + h) - obj(z - h)) / (2 * h)


def numerical_conjugate(loss, theta, y):
    """sup_z theta*z - f(z; y) by bounded 1-d search.

    The bracket starts at [-50, 50]. It is widened tenfold while the optimum
    sits within 1% of an end. If the objective is still rising at an end of the
    widest bracket, the sup is taken to be infinite.
    """
    theta, y = float(theta), float(y)

    def obj(z):
        return theta * z - float(loss.value(z, y))

    lo, hi = -BRACKET, BRACKET
    while True:
        res = minimize_scalar(lambda z: -obj(z), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, hi)})
        z = res.x
        margin = 0.01 * (hi - lo)
        near_hi, near_lo = z > hi - margin, z < lo + margin
        if not (near_hi or near_lo):
            return obj(z)
        if hi >= _MAX_BRACKET:
            break
        lo, hi = 10 * lo, 10 * hi
    # optimum pinned to an end of the widest bracket
    end = hi if near_hi else lo
    s = _slope(obj, end)
    rising = s > _SLOPE_TOL if near_hi else s < -_SLOPE_TOL
    if rising:
        return np.inf
    # flat tail: the sup is the limit, reached to within rounding
    return obj(end)


def numerical_prox(reg, z, tau):
    """argmin_b tau*Omega(b) + 0.5*||b - z||^2, one group at a time.

    Groups decouple. Within a group the objective is invariant under
    rotations fixing z_g, so the minimizer lies on the ray through z_g and
    a bounded 1-d search over the signed length suffices. The origin is
    always tried as well since the minimizer often sits on the kink there.
    """
    z = np.asarray(z, dtype=float)
    if tau == 0:
        return z.copy()
    out = np.zeros_like(z)
    labels = reg.structure.labels
    for g in range(reg.n_groups):
        idx = np.flatnonzero(labels == g)
        zg = z[idx]
        r = float(np.sqrt(zg @ zg))
        if r == 0.0:
            continue
        u = zg / r

        def obj(t):
            b = t * u
            return tau * float(np.sqrt(b @ b)) + 0.5 * float(np.sum((b - zg) ** 2))

        res = minimize_scalar(obj, bounds=(-r - 1.0, r + 1.0), method="bounded",
                              options={"xatol": 1e-13})
        t = res.x if obj(res.x) < obj(0.0) else 0.0
        out[idx] = t * u
    return out


def numerical_dual_norm(reg, v):
    """sup { <v, b> : Omega(b) <= 1 } by constrained optimization."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if n == 0:
        return 0.0
    if reg.kind == "l1":
        # b = p - q, p, q >= 0, sum(p + q) <= 1
        res = linprog(np.concatenate([-v, v]), A_ub=np.ones((1, 2 * n)), b_ub=[1.0],
                      bounds=[(0, None)] * (2 * n), method="highs")
        return float(-res.fun)
    labels = reg.structure.labels
    best = 0.0
    for g in range(reg.n_groups):
        vg = v[labels == g]
        cons = {"type": "ineq", "fun": lambda b: 1.0 - np.sqrt(b @ b + 1e-300)}
        x0 = np.full(vg.size, 1.0 / np.sqrt(vg.size))
        res = minimize(lambda b, vg=vg: -(vg @ b), x0, constraints=[cons],
                       method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000})
        best = max(best, float(vg @ res.x))
    return best


def weighted_sum(values, mu):
    """sum_s eta_s * values_s for scalar or vector samples."""
    eta = eta_weights(mu)
    return np.tensordot(eta, np.asarray(values, dtype=float), axes=1)


def reconstruct_certificate(history, mu, lam):
    """-(1/lam) sum_s eta_s theta_s x_s from a list of (theta_s, x_s) pairs.

    ``x_s`` may be dense arrays or objects with ``to_dense()``.
    """
    if len(history) != len(mu):
        raise ValueError("history and mu must have the same length")
    rows = [np.asarray(x.to_dense() if hasattr(x, "to_dense") else x, dtype=float)
            for _, x in history]
    thetas = np.array([t for t, _ in history], dtype=float)
    return -weighted_sum(thetas[:, None] * np.array(rows), mu) / lam


def dense_l1_solve(X, y, loss, lam, tol=1e-14):
    """Solve the l1 problem on a small dense instance by splitting b = p - q.

    The split problem is smooth with box constraints, so L-BFGS-B applies.
    """
    X = np.asarray(X.toarray() if hasattr(X, "toarray") else X, dtype=float)
    m, n = X.shape

    def fun(w):
        b = w[:n] - w[n:]
        z = X @ b
        g = X.T @ loss.deriv(z, y) / m
        val = float(np.mean(loss.value(z, y))) + lam * float(np.sum(w))
        return val, np.concatenate([g + lam, -g + lam])

    res = minimize(fun, np.zeros(2 * n), jac=True, method="L-BFGS-B",
                   bounds=[(0, None)] * (2 * n),
                   options={"ftol": tol, "gtol": 1e-12, "maxiter": 100000})
    return res.x[:n] - res.x[n:]
