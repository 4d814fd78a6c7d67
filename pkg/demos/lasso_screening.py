"""Lasso on a synthetic 100 x 500 problem: plain Prox-SGD against the two
screening variants, printing the active set and error at each segment."""
import numpy as np

from sparsescreen.dataio import lambda_max, make_synthetic
from sparsescreen.losses import LossModel
from sparsescreen.regularizers import GroupRegularizer
from sparsescreen.runner import ALGOS, RunConfig, default_schedule, run
from sparsescreen.solvers import StepSchedule, pgd_solve

STEP_MULT = 30.0


def main():
    data, _ = make_synthetic(100, 500, 2, noise=0.05, seed=0)
    loss, reg = LossModel("squared"), GroupRegularizer("l1", n=data.n)
    lam = lambda_max(data, loss, reg) / 2
    ref = pgd_solve(data, loss, reg, lam, tol=1e-12)
    base = default_schedule(data, loss)
    sched = StepSchedule(base.scale * STEP_MULT, base.exponent)
    print("reference support: %d of %d" % (np.count_nonzero(ref), data.n))
    for algo in ALGOS:
        cfg = RunConfig(algo=algo, epochs=100, seed=0, lam=lam, schedule=sched, reference=ref)
        _, log = run(cfg, data, loss, reg)
        print("\n%s" % algo)
        print("%7s %7s %10s %12s" % ("epoch", "active", "error", "work/iter"))
        for r in log.records[::5] + log.records[-1:]:
            print("%7g %7d %10.4f %12.0f" % (r["epoch"], r["active"], r["error"],
                                             r["work_per_iter"]))


if __name__ == "__main__":
    main()
