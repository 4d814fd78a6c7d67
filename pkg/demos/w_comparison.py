"""Effect of the weight exponent w on how fast online screening shrinks
the active set, over five seeds."""
from sparsescreen.dataio import make_synthetic
from sparsescreen.losses import LossModel
from sparsescreen.regularizers import GroupRegularizer
from sparsescreen.runner import RunConfig, default_schedule, run
from sparsescreen.solvers import StepSchedule

STEP_MULT = 30.0
WS = (0.51, 0.6, 0.75, 1.0)


def main():
    print("%4s " % "seed" + " ".join("w=%-5g" % w for w in WS))
    for seed in range(5):
        data, _ = make_synthetic(100, 500, 5, noise=0.01, seed=seed)
        loss, reg = LossModel("squared"), GroupRegularizer("l1", n=data.n)
        base = default_schedule(data, loss)
        sched = StepSchedule(base.scale * STEP_MULT, base.exponent)
        final = []
        for w in WS:
            cfg = RunConfig(algo="os-proxsgd", epochs=100, seed=seed, w=w, schedule=sched)
            final.append(run(cfg, data, loss, reg)[1].records[-1]["active"])
        print("%4d " % seed + " ".join("%-7d" % a for a in final))


if __name__ == "__main__":
    main()
