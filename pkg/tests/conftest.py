import numpy as np
import pytest

from sparsescreen.dataio import lambda_max, make_synthetic
from sparsescreen.losses import LossModel
from sparsescreen.regularizers import GroupRegularizer
from sparsescreen.solvers import pgd_solve


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def lasso_small():
    """50 x 200 synthetic lasso at lambda_max / 2 with a tight reference."""
    data, coef = make_synthetic(50, 200, 5, noise=0.01, seed=3)
    loss = LossModel("squared")
    reg = GroupRegularizer("l1", n=data.n)
    lam = lambda_max(data, loss, reg) / 2
    ref = pgd_solve(data, loss, reg, lam, tol=1e-12)
    return data, loss, reg, lam, ref


# Multiplier on the default 1/(m L_F) step used by the experiment-style
# tests. With the bare default, Prox-SGD moves too little in tens of
# epochs for any screening rule to fire.
STEP_MULT = 30.0


def experiment_schedule(data, loss, mult=STEP_MULT):
    from sparsescreen.runner import default_schedule
    from sparsescreen.solvers import StepSchedule
    s = default_schedule(data, loss)
    return StepSchedule(s.scale * mult, s.exponent)
