"""Run modes: plain Prox-SGD, Prox-SGD with full-data screening every T steps,
and Prox-SGD with online screening.

All three share one inner loop, so with screening switched off they produce
bit-identical iterates for a given seed.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from .dataio import SampleStream, lambda_max
from .screening import (ScreenState, WeightRule, _inner_update, finite_region,
                        online_segment_close, screen_groups)
from .solvers import ActiveModel, StepSchedule, _prox_sgd_update, lipschitz_full

ALGOS = ("proxsgd", "fs-proxsgd", "os-proxsgd")


@dataclass
class RunConfig:
    algo: str = "os-proxsgd"
    lambda_ratio: float = 2.0
    epochs: int = 10
    seed: int = 0
    schedule: StepSchedule = None
    w: float = 0.51
    t_factor: int = 4
    screen: bool = True
    reference: np.ndarray = None
    lam: float = None

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError("algo must be one of %s" % (ALGOS,))
        if not self.lambda_ratio >= 1:
            raise ValueError("lambda ratio must be >= 1 (lambda = lambda_max / ratio)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.t_factor < 1:
            raise ValueError("T-factor must be >= 1")
        WeightRule(self.w)


@dataclass
class MetricsLog:
    """One record per segment close: epoch, active count, wall time, error
    to the reference, online gap, nonzeros, mean work per inner iteration."""

    algo: str
    records: list = field(default_factory=list)

    def append(self, **rec):
        self.records.append(rec)

    def column(self, name):
        return [r[name] for r in self.records]

    def __len__(self):
        return len(self.records)


def default_schedule(data, loss, exponent=0.51):
    """gamma_t = 1 / (m L_F t^p) with L_F the Lipschitz constant of the
    gradient of the averaged loss (so scale = 1 / (L ||X||_2^2))."""
    return StepSchedule.per_sample(data.m, lipschitz_full(data, loss), exponent)


def resolve_lambda(config, data, loss, reg):
    if config.lam is not None:
        return float(config.lam)
    return lambda_max(data, loss, reg) / config.lambda_ratio


def _run(config, data, loss, reg):
    algo = config.algo
    screening = config.screen and algo != "proxsgd"
    online = algo == "os-proxsgd"
    m = data.m
    if m == 0:
        raise ValueError("empty dataset")
    if loss.classification:
        data.check_binary_labels()
    lam = resolve_lambda(config, data, loss, reg)
    sched = config.schedule or default_schedule(data, loss)
    wr = WeightRule(config.w)
    L = loss.L
    f, df, fc = loss.scalar_funcs()
    y = data.labels
    ref = None if config.reference is None else np.asarray(config.reference, dtype=float)

    model = ActiveModel.zeros(reg)
    areg = reg
    X = data.X.copy()
    X.sort_indices()
    indptr, indices, vals = X.indptr, X.indices, X.data
    state = ScreenState.zeros(reg.n, reg.n_groups) if online else None
    anchor = model.beta.copy()
    anchor_omega = 0.0
    identity = reg.structure.identity

    stream = SampleStream(data, seed=config.seed)
    T = config.t_factor * m
    total = config.epochs * m
    log = MetricsLog(algo)
    work = 0
    seg_iters = 0
    start = time.perf_counter()
    beta = model.beta

    for k in range(1, total + 1):
        i = stream.draw_index()
        sl = slice(indptr[i], indptr[i + 1])
        idx, val = indices[sl], vals[sl]
        yi = y[i]
        theta = df(float(val @ beta[idx]), yi)
        gamma = sched.scale / k ** sched.exponent
        beta = _prox_sgd_update(beta, idx, val, theta, gamma, lam, areg)
        work += 2 * idx.size + beta.size
        if online:
            if identity:
                sq = (idx, val * val)
            else:
                g = areg.structure.labels[idx]
                gid, inv = np.unique(g, return_inverse=True)
                sq = (gid, np.bincount(inv, weights=val * val))
            state.k += 1
            _inner_update(state, idx, val, yi, theta, float(val @ anchor[idx]),
                          anchor_omega, sq, f, fc, lam, wr.mu(state.k))
            work += 2 * idx.size + beta.size + state.N.size
        seg_iters += 1

        if k % T != 0 and k != total:
            continue

        # segment close
        gap_metric = None
        r_raw = None
        if online:
            region, state = online_segment_close(state, areg, L, lam)
            gap_metric = state.p - state.d
            r_raw = region.raw_residual
        elif algo == "fs-proxsgd":
            region = finite_region(beta, X, y, loss, areg, lam)
            gap_metric = region.raw_residual
            r_raw = region.raw_residual
            work += 3 * X.nnz + X.shape[1]
        if screening:
            drop = screen_groups(region, areg)
            if drop.size:
                keep = np.setdiff1d(np.arange(areg.n_groups), drop)
                areg, feats = areg.restrict(keep)
                model.beta = beta
                model.prune(keep, feats)
                beta = model.beta
                X = X[:, feats].tocsr()
                X.sort_indices()
                indptr, indices, vals = X.indptr, X.indices, X.data
                if online:
                    state.restrict(keep, feats)
                identity = areg.structure.identity
        if online:
            # next segment is evaluated against the (pruned) current iterate
            anchor = beta.copy()
            anchor_omega = areg.omega(anchor)
        model.beta = beta
        elapsed = time.perf_counter() - start
        error = None
        if ref is not None:
            error = float(np.linalg.norm(model.to_dense() - ref))
        nnz = int(np.count_nonzero(beta))
        log.append(epoch=k / m, active=beta.size if screening else nnz,
                   support=nnz, elapsed_s=elapsed, error=error,
                   online_gap=gap_metric, residual=r_raw,
                   work_per_iter=work / seg_iters)
        work = 0
        seg_iters = 0

    model.beta = beta
    return model, log


def run_plain(config, data, loss, reg):
    """Prox-SGD without screening."""
    cfg = RunConfig(**{**config.__dict__, "algo": "proxsgd"})
    return _run(cfg, data, loss, reg)


def run_full_screening(config, data, loss, reg):
    """Prox-SGD; every T = t_factor*m steps, a full pass over the data at the
    current iterate builds a gap-safe region and eliminates groups for good."""
    cfg = RunConfig(**{**config.__dict__, "algo": "fs-proxsgd"})
    return _run(cfg, data, loss, reg)


def run_online_screening(config, data, loss, reg):
    """Prox-SGD with online screening from running estimates only."""
    cfg = RunConfig(**{**config.__dict__, "algo": "os-proxsgd"})
    return _run(cfg, data, loss, reg)


RUNNERS = {"proxsgd": run_plain, "fs-proxsgd": run_full_screening,
           "os-proxsgd": run_online_screening}


def run(config, data, loss, reg):
    return RUNNERS[config.algo](config, data, loss, reg)
