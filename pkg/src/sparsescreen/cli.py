"""Command line front end.

    sparsescreen run       one algorithm, writes <out>/metrics.csv and <out>/model.txt
    sparsescreen compare   all three algorithms, one combined metrics.csv
    sparsescreen solve-ref reference solution (SAGA or PGD), one coefficient per line
"""
import argparse
import os
import sys

import numpy as np

from .dataio import LibsvmParseError, lambda_max, load_libsvm, normalize_maxabs
from .losses import LossModel
from .regularizers import GroupRegularizer, GroupStructure
from .runner import ALGOS, RunConfig, default_schedule, run
from .solvers import ConvergenceError, StepSchedule, pgd_solve, saga_solve

CSV_HEADER = "algo,epoch,active,elapsed_s,error,online_gap"


class UsageError(Exception):
    pass


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def metrics_rows(log, timing=True):
    for r in log.records:
        yield (log.algo, r["epoch"], r["active"], r["elapsed_s"] if timing else None,
               r["error"], r["online_gap"])


def write_metrics(path, logs, timing=True):
    rows = [row for log in logs for row in metrics_rows(log, timing)]
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for algo, *rest in rows:
            fh.write(",".join([algo] + [_fmt(v) for v in rest]) + "\n")


def write_vector(path, beta):
    with open(path, "w") as fh:
        for b in beta:
            fh.write("%.17g\n" % b)


def read_vector(path):
    with open(path) as fh:
        return np.array([float(tok) for tok in fh.read().split()])


def _common(p):
    p.add_argument("--data", required=True, help="LIBSVM file")
    p.add_argument("--n-override", type=int, default=None, help="feature count")
    p.add_argument("--normalize", action="store_true", help="scale columns to max |x| = 1")
    p.add_argument("--loss", default="squared", choices=["squared", "logistic", "squared-hinge"])
    p.add_argument("--reg", default="l1", choices=["l1", "group-l12"])
    p.add_argument("--groups", default=None, help="file of contiguous group sizes")
    p.add_argument("--lambda-ratio", type=float, default=2.0, help="lambda = lambda_max / ratio")
    p.add_argument("--seed", type=int, default=0)


def _stochastic(p):
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--w", type=float, default=0.51, help="weight exponent in (0.5, 1]")
    p.add_argument("--T-factor", dest="t_factor", type=int, default=4,
                   help="segment length in multiples of m")
    p.add_argument("--step-mult", type=float, default=1.0,
                   help="multiplier on the default step scale 1/(m L_F)")
    p.add_argument("--ref", default=None, help="reference solution file")
    p.add_argument("--no-screen", action="store_true")
    p.add_argument("--no-timing", action="store_true",
                   help="leave elapsed_s empty so repeated runs give identical CSVs")
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="sparsescreen",
                                     description="Stochastic sparse solvers with safe screening")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run one algorithm")
    _common(p)
    p.add_argument("--algo", default="os-proxsgd", choices=ALGOS)
    _stochastic(p)
    p = sub.add_parser("compare", help="run all three algorithms on one seed")
    _common(p)
    _stochastic(p)
    p = sub.add_parser("solve-ref", help="compute a reference solution")
    _common(p)
    p.add_argument("--algo", default="saga", choices=["saga", "pgd"])
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="ref.txt", help="output file, or directory for ref.txt")
    return parser


def _problem(args):
    if not args.lambda_ratio >= 1:
        raise UsageError("--lambda-ratio must be >= 1, got %g" % args.lambda_ratio)
    data = load_libsvm(args.data, n_override=args.n_override)
    if args.normalize:
        data = normalize_maxabs(data)
    loss = LossModel(args.loss)
    if args.reg == "l1":
        if args.groups:
            raise UsageError("--groups only applies to --reg group-l12")
        reg = GroupRegularizer("l1", n=data.n)
    else:
        if not args.groups:
            raise UsageError("--reg group-l12 needs --groups")
        reg = GroupRegularizer("group_l12", GroupStructure.from_file(args.groups, data.n))
    if data.m == 0:
        raise UsageError("dataset %s has no samples" % args.data)
    if loss.classification:
        data.check_binary_labels()
    return data, loss, reg


def _config(args, algo, data, loss):
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    if not args.step_mult > 0:
        raise UsageError("--step-mult must be > 0")
    sched = default_schedule(data, loss)
    sched = StepSchedule(sched.scale * args.step_mult, sched.exponent)
    ref = None
    if args.ref:
        ref = read_vector(args.ref)
        if ref.size != data.n:
            raise UsageError("reference has %d entries, data has n=%d" % (ref.size, data.n))
    try:
        return RunConfig(algo=algo, lambda_ratio=args.lambda_ratio, epochs=args.epochs,
                         seed=args.seed, schedule=sched, w=args.w, t_factor=args.t_factor,
                         screen=not args.no_screen, reference=ref)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_run(args):
    data, loss, reg = _problem(args)
    cfg = _config(args, args.algo, data, loss)
    model, log = run(cfg, data, loss, reg)
    os.makedirs(args.out, exist_ok=True)
    write_metrics(os.path.join(args.out, "metrics.csv"), [log], timing=not args.no_timing)
    write_vector(os.path.join(args.out, "model.txt"), model.to_dense())
    return 0


def cmd_compare(args):
    data, loss, reg = _problem(args)
    logs = []
    os.makedirs(args.out, exist_ok=True)
    for algo in ALGOS:
        model, log = run(_config(args, algo, data, loss), data, loss, reg)
        logs.append(log)
        write_vector(os.path.join(args.out, "model_%s.txt" % algo), model.to_dense())
    write_metrics(os.path.join(args.out, "metrics.csv"), logs, timing=not args.no_timing)
    return 0


def cmd_solve_ref(args):
    data, loss, reg = _problem(args)
    if not args.tol > 0:
        raise UsageError("--tol must be > 0")
    lam = lambda_max(data, loss, reg) / args.lambda_ratio
    if args.algo == "saga":
        beta = saga_solve(data, loss, reg, lam, tol=args.tol, seed=args.seed)
    else:
        beta = pgd_solve(data, loss, reg, lam, tol=args.tol)
    out = args.out
    if os.path.isdir(out) or out.endswith(os.sep):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, "ref.txt")
    write_vector(out, beta)
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "solve-ref": cmd_solve_ref}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print("sparsescreen: error: %s" % exc, file=sys.stderr)
        return 2
    except (OSError, LibsvmParseError, ValueError, ConvergenceError) as exc:
        print("sparsescreen: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
