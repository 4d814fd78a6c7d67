"""Smooth convex losses f(z; y) with derivative, convex conjugate and
Lipschitz constant of the derivative.

All methods broadcast over numpy arrays. Conjugates return ``+inf``
outside their domain instead of raising.
"""
import math

import numpy as np
from scipy.special import expit, xlogy

KINDS = ("squared", "logistic", "squared_hinge")


class LossModel:
    """One of the three supported losses.

    Parameters
    ----------
    kind : {"squared", "logistic", "squared_hinge"}
        ``"squared-hinge"`` is accepted as an alias (CLI spelling).
    """

    def __init__(self, kind):
        kind = kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError("unknown loss %r, expected one of %s" % (kind, KINDS))
        self.kind = kind

    def __repr__(self):
        return "LossModel(%r)" % self.kind

    def __eq__(self, other):
        return isinstance(other, LossModel) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    @property
    def classification(self):
        return self.kind != "squared"

    @property
    def L(self):
        return self.lipschitz()

    def lipschitz(self):
        return {"squared": 1.0, "logistic": 0.25, "squared_hinge": 2.0}[self.kind]

    def _check(self, y):
        if self.classification and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("%s loss needs labels in {-1, +1}" % self.kind)

    def value(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(y)
        if self.kind == "squared":
            out = 0.5 * (z - y) ** 2
        elif self.kind == "logistic":
            out = np.logaddexp(0.0, -y * z)
        else:
            out = np.maximum(0.0, 1.0 - y * z) ** 2
        return out[()] if out.ndim == 0 else out

    def deriv(self, z, y):
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(y)
        if self.kind == "squared":
            out = z - y
        elif self.kind == "logistic":
            out = -y * expit(-y * z)
        else:
            out = -2.0 * y * np.maximum(0.0, 1.0 - y * z)
        return out[()] if out.ndim == 0 else out

    def conjugate(self, theta, y):
        """f*(theta; y) = sup_z theta z - f(z; y).

        squared:        theta^2/2 + theta y
        logistic:       with s = theta y in [-1, 0]:  (-s) log(-s) + (1+s) log(1+s)
        squared hinge:  with s = theta y <= 0:        s + s^2/4
        """
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(y)
        if self.kind == "squared":
            out = 0.5 * theta ** 2 + theta * y
        elif self.kind == "logistic":
            s = theta * y
            inside = (s >= -1.0) & (s <= 0.0)
            sc = np.clip(s, -1.0, 0.0)
            out = np.where(inside, xlogy(-sc, -sc) + xlogy(1.0 + sc, 1.0 + sc), np.inf)
        else:
            s = theta * y
            out = np.where(s <= 0.0, s + 0.25 * s ** 2, np.inf)
        out = np.asarray(out, dtype=float)
        return out[()] if out.ndim == 0 else out

    def scalar_funcs(self):
        """Unchecked pure-python ``(value, deriv, conjugate)`` for scalar use.

        Labels are assumed already validated (see ``Dataset.check_binary_labels``).
        """
        return _SCALAR[self.kind]


def _sq(z, y):
    return 0.5 * (z - y) ** 2


def _sq_d(z, y):
    return z - y


def _sq_c(t, y):
    return 0.5 * t * t + t * y


def _log(z, y):
    u = -y * z
    if u > 0:
        return u + math.log1p(math.exp(-u))
    return math.log1p(math.exp(u))


def _log_d(z, y):
    u = y * z
    if u >= 0:
        e = math.exp(-u)
        return -y * e / (1.0 + e)
    return -y / (1.0 + math.exp(u))


def _xlogx(a):
    return a * math.log(a) if a > 0 else 0.0


def _log_c(t, y):
    s = t * y
    if s < -1.0 or s > 0.0:
        return math.inf
    return _xlogx(-s) + _xlogx(1.0 + s)


def _sh(z, y):
    r = 1.0 - y * z
    return r * r if r > 0 else 0.0


def _sh_d(z, y):
    r = 1.0 - y * z
    return -2.0 * y * r if r > 0 else 0.0


def _sh_c(t, y):
    s = t * y
    return s + 0.25 * s * s if s <= 0.0 else math.inf


_SCALAR = {
    "squared": (_sq, _sq_d, _sq_c),
    "logistic": (_log, _log_d, _log_c),
    "squared_hinge": (_sh, _sh_d, _sh_c),
}
