"""Group-decomposable norms: l1 and the l1,2 group norm.

A ``GroupStructure`` is a partition of ``{0, ..., n-1}`` stored as a label
per coordinate. Per-group quantities are computed with ``np.bincount`` so
groups need not be contiguous.
"""
import numpy as np

KINDS = ("l1", "group_l12")


class GroupStructure:
    """Partition of feature indices into nonempty disjoint groups."""

    def __init__(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-d")
        n_groups = int(labels.max()) + 1 if labels.size else 0
        if labels.size and labels.min() < 0:
            raise ValueError("group labels must be nonnegative")
        sizes = np.bincount(labels, minlength=n_groups)
        if np.any(sizes == 0):
            raise ValueError("empty group %d" % int(np.flatnonzero(sizes == 0)[0]))
        self.labels = labels
        self.sizes = sizes
        self.n_groups = n_groups
        self.identity = bool(np.array_equal(labels, np.arange(labels.size)))

    @classmethod
    def singletons(cls, n):
        return cls(np.arange(n))

    @classmethod
    def from_sizes(cls, sizes):
        sizes = [int(s) for s in sizes]
        if any(s < 1 for s in sizes):
            raise ValueError("group sizes must be >= 1")
        return cls(np.repeat(np.arange(len(sizes)), sizes))

    @classmethod
    def from_file(cls, path, n=None):
        """Read whitespace-separated group sizes (contiguous groups)."""
        with open(path) as fh:
            sizes = [int(tok) for tok in fh.read().split()]
        gs = cls.from_sizes(sizes)
        if n is not None and gs.n != n:
            raise ValueError("group sizes sum to %d, expected n=%d" % (gs.n, n))
        return gs

    @property
    def n(self):
        return self.labels.size

    @property
    def is_singletons(self):
        return self.n_groups == self.n

    def members(self, g):
        return np.flatnonzero(self.labels == g)

    def features_of(self, groups):
        """Sorted feature ids belonging to any of ``groups``."""
        mask = np.zeros(self.n_groups, dtype=bool)
        mask[np.asarray(groups, dtype=np.int64)] = True
        return np.flatnonzero(mask[self.labels])


class GroupRegularizer:
    """Omega(beta) = sum_g Omega_g(beta_g) with Omega_g = |.| (l1) or ||.||_2.

    For ``kind="l1"`` the structure must be all singletons; it defaults to
    that when ``structure`` is omitted and ``n`` is given.
    """

    def __init__(self, kind, structure=None, n=None):
        kind = kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError("unknown regularizer %r, expected one of %s" % (kind, KINDS))
        if structure is None:
            if n is None:
                raise ValueError("need a GroupStructure or n")
            structure = GroupStructure.singletons(n)
        if kind == "l1" and not structure.is_singletons:
            raise ValueError("l1 requires singleton groups")
        self.kind = kind
        self.structure = structure

    def __repr__(self):
        return "GroupRegularizer(%r, n=%d, groups=%d)" % (
            self.kind, self.structure.n, self.structure.n_groups)

    @property
    def n(self):
        return self.structure.n

    @property
    def n_groups(self):
        return self.structure.n_groups

    def _per_group_l2(self, v):
        s = self.structure
        if s.identity:
            return np.abs(v)
        big = float(np.max(np.abs(v))) if v.size else 0.0
        if big and not 1e-150 < big < 1e150:
            # rescale so the squares neither underflow nor overflow
            w = v / big
            return big * np.sqrt(np.bincount(s.labels, weights=w * w, minlength=s.n_groups))
        return np.sqrt(np.bincount(s.labels, weights=v * v, minlength=s.n_groups))

    def group_norms(self, beta):
        """Omega_g(beta_g) for every group."""
        beta = np.asarray(beta, dtype=float)
        if self.kind == "l1":
            return np.abs(beta)
        return self._per_group_l2(beta)

    def dual_group_norms(self, v):
        """Omega_g^D(v_g) for every group (|.| and ||.||_2 are self-dual per group)."""
        return self.group_norms(v)

    def omega(self, beta):
        return float(np.sum(self.group_norms(beta)))

    def omega_dual_group(self, v_g):
        """Dual norm of one group's block ``v_g``."""
        v_g = np.atleast_1d(np.asarray(v_g, dtype=float))
        if self.kind == "l1":
            if v_g.size != 1:
                raise ValueError("l1 groups are singletons")
            return float(abs(v_g[0]))
        return float(np.linalg.norm(v_g))

    def omega_dual(self, v):
        """max_g Omega_g^D(v_g); 0 for the empty vector."""
        d = self.dual_group_norms(v)
        return float(d.max()) if d.size else 0.0

    def prox(self, z, tau):
        """argmin_b tau*Omega(b) + 0.5*||b - z||^2 (soft / block soft thresholding)."""
        if tau < 0:
            raise ValueError("prox threshold must be >= 0, got %r" % tau)
        z = np.asarray(z, dtype=float)
        if tau == 0:
            return z.copy()
        if self.kind == "l1":
            return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)
        norms = self._per_group_l2(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
        return z * scale[self.structure.labels]

    def subgradient(self, beta):
        """Minimal-norm element of dOmega(beta): zero on zero groups."""
        beta = np.asarray(beta, dtype=float)
        if self.kind == "l1":
            return np.sign(beta)
        norms = self._per_group_l2(beta)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(norms > 0, 1.0 / norms, 0.0)
        return beta * inv[self.structure.labels]

    def restrict(self, groups):
        """Regularizer on the subspace spanned by ``groups`` (kept in ascending
        group order), plus the sorted original feature ids of that subspace."""
        groups = np.unique(np.asarray(groups, dtype=np.int64))
        feats = self.structure.features_of(groups)
        remap = np.full(self.n_groups, -1, dtype=np.int64)
        remap[groups] = np.arange(groups.size)
        sub = GroupStructure(remap[self.structure.labels[feats]]) if feats.size else \
            GroupStructure(np.zeros(0, dtype=np.int64))
        return GroupRegularizer(self.kind, sub), feats
