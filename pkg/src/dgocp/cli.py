"""Command-line front end: solve, convergence, verify."""

import argparse
import os
import sys

import numpy as np

from .basis import default_rule, gauss_rule
from .convergence import run_convergence
from .ivp import IVPRight, NewtonOptions, reverse_dg, solve_backward, solve_forward
from .mesh import (
    DGFunction,
    l2_error,
    make_uniform_partition,
    modal_from_values,
    project_l2,
    save_dg,
)
from .ocp import (
    adjoint_residual,
    cost,
    hessian_form,
    pair_with_direction,
    reduced_gradient,
    solve_adjoint,
    solve_state,
    tangent_solve,
)
from .optimize import OptimizeOptions, StallError, minimize
from .problems import get_builtin

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_STALL = 3

N_PLOT_SAMPLES = 401


def _quad_rule(args, r):
    q = getattr(args, "quad_points", None)
    if q is None:
        env = os.environ.get("DGOCP_QUAD_POINTS")
        q = int(env) if env else None
    return gauss_rule(q) if q else default_rule(r)


def _write_samples(F, path, names):
    ts = np.linspace(0.0, F.partition.T, N_PLOT_SAMPLES)
    vals = F.eval_many(ts, side="left")
    with open(path, "w") as fh:
        fh.write("t," + ",".join(names) + "\n")
        for t, row in zip(ts, vals):
            fh.write(f"{t:.12g}," + ",".join(f"{v:.12e}" for v in row) + "\n")


def _write_jumps(F, path, names):
    with open(path, "w") as fh:
        fh.write("t," + ",".join("jump_" + n for n in names) + "\n")
        for n in range(1, F.partition.N):
            t = F.partition.nodes[n]
            fh.write(f"{t:.12g}," + ",".join(f"{v:.12e}" for v in F.jump(n)) + "\n")


def _resolve_intervals(args, T):
    if args.intervals is not None:
        return args.intervals
    if args.h is not None:
        return int(round(T / args.h))
    return None


def cmd_solve(args):
    builtin = get_builtin(args.problem)
    p = builtin.problem
    N = _resolve_intervals(args, p.T) or 10
    part = make_uniform_partition(p.T, N)
    opts = OptimizeOptions(
        method=args.method,
        grad_tol=args.grad_tol,
        max_outer=args.max_iter,
    )
    try:
        report = minimize(p, None, part, args.order, args.order, opts)
    except StallError as err:
        print(f"solver stalled: {err}", file=sys.stderr)
        return EXIT_STALL

    os.makedirs(args.out, exist_ok=True)
    u_dg = report.u_star.dg
    xnames = [f"x_{i+1}" for i in range(p.d)]
    unames = [f"u_{i+1}" for i in range(p.m)]
    save_dg(u_dg, os.path.join(args.out, "u.csv"))
    save_dg(report.x_star, os.path.join(args.out, "x.csv"))
    save_dg(report.lambda_star, os.path.join(args.out, "lambda.csv"))
    _write_samples(report.x_star, os.path.join(args.out, "x_samples.csv"), xnames)
    _write_samples(u_dg, os.path.join(args.out, "u_samples.csv"), unames)
    _write_samples(report.lambda_star, os.path.join(args.out, "lambda_samples.csv"), xnames)
    _write_jumps(report.x_star, os.path.join(args.out, "x_jumps.csv"), xnames)
    _write_jumps(u_dg, os.path.join(args.out, "u_jumps.csv"), unames)

    summary = {
        "problem": args.problem,
        "order": args.order,
        "intervals": N,
        "h": part.h,
        "method": args.method,
        "iterations": report.iterations,
        "converged": report.converged,
        "cost": repr(report.cost),
        "stationarity": repr(report.stationarity),
        "tv_u": repr(report.tv_u),
    }
    if builtin.exact_state is not None:
        summary["err_x"] = f"{l2_error(report.x_star, builtin.exact_state):.4e}"
        summary["err_u"] = f"{l2_error(u_dg, builtin.exact_control):.4e}"
    lines = [f"{k}={v}" for k, v in summary.items()]
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_convergence(args):
    builtin = get_builtin(args.problem)
    orders = tuple(int(v) for v in args.orders.split(","))
    opts = OptimizeOptions(method=args.method, grad_tol=args.grad_tol)
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    try:
        report = run_convergence(builtin, orders=orders, levels=args.levels,
                                 opts=opts, progress=progress)
    except StallError as err:
        print(f"solver stalled: {err}", file=sys.stderr)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("r,h,err_x,err_u,rate_x,rate_u\n")
        return EXIT_STALL
    text = report.to_csv(args.out)
    print(text, end="")
    return EXIT_OK


def _corrupted(problem, which):
    """Return the problem with one derivative callable deliberately broken."""
    orig = getattr(problem, which)
    setattr(problem, which, lambda t, x, u: orig(t, x, u) * 1.001 + 1e-3)
    return problem


def _random_dg_control(rng, partition, r, m, amp=0.5):
    coeffs = rng.uniform(-amp, amp, size=(partition.N, r + 1, m))
    coeffs *= 1.0 / (1.0 + np.arange(r + 1))[None, :, None]
    return DGFunction(partition, r, m, coeffs)


def run_verification(problem_name, order, intervals, seed, corrupt=None, echo=print):
    """The finite-difference and structural oracle battery; returns overall pass."""
    builtin = get_builtin(problem_name)
    p = builtin.problem
    if corrupt:
        p = _corrupted(p, corrupt)
    part = make_uniform_partition(p.T, intervals)
    rule = default_rule(order)
    rng = np.random.default_rng(seed)
    opts = NewtonOptions()
    eps = 1e-5
    ok = True

    def check(name, value, tol):
        nonlocal ok
        good = value < tol
        ok = ok and good
        echo(f"{name}: {'PASS' if good else 'FAIL'} (discrepancy {value:.3e}, tol {tol:.0e})")

    # gradient check against central differences of the reduced cost
    worst = 0.0
    for _ in range(5):
        u = _random_dg_control(rng, part, order, p.m)
        v = _random_dg_control(rng, part, order, p.m)
        x = solve_state(p, u, part, order, opts, rule)
        lam = solve_adjoint(p, u, x, part, order, opts, rule)
        grad = reduced_gradient(p, u, x, lam)
        lhs = pair_with_direction(grad, v, p, part, rule)
        jp = cost(p, u + eps * v, solve_state(p, u + eps * v, part, order, opts, rule), rule)
        jm = cost(p, u - eps * v, solve_state(p, u - eps * v, part, order, opts, rule), rule)
        fd = (jp - jm) / (2 * eps)
        worst = max(worst, abs(lhs - fd) / max(1.0, abs(fd)))
    check("gradient-check", worst, 1e-6)

    # tangent check: G_h(u +/- eps v) difference quotient vs y_h
    worst = 0.0
    for _ in range(5):
        u = _random_dg_control(rng, part, order, p.m)
        v = _random_dg_control(rng, part, order, p.m)
        x = solve_state(p, u, part, order, opts, rule)
        y = tangent_solve(p, u, x, v, part, order, opts, rule)
        xp = solve_state(p, u + eps * v, part, order, opts, rule)
        xm = solve_state(p, u - eps * v, part, order, opts, rule)
        fd = (1.0 / (2 * eps)) * (xp - xm)
        denom = max(1e-12, fd.l2_norm())
        worst = max(worst, (y - fd).l2_norm() / denom)
    check("tangent-check", worst, 1e-6)

    # Hessian check: second central difference of the reduced cost
    worst = 0.0
    eps2 = 1e-4
    for _ in range(3):
        u = _random_dg_control(rng, part, order, p.m)
        v = _random_dg_control(rng, part, order, p.m)
        quad = hessian_form(p, u, v, part, order, opts, rule)
        j0 = cost(p, u, solve_state(p, u, part, order, opts, rule), rule)
        jp = cost(p, u + eps2 * v, solve_state(p, u + eps2 * v, part, order, opts, rule), rule)
        jm = cost(p, u - eps2 * v, solve_state(p, u - eps2 * v, part, order, opts, rule), rule)
        fd = (jp - 2 * j0 + jm) / eps2**2
        worst = max(worst, abs(quad - fd) / max(1.0, abs(fd)))
    check("hessian-check", worst, 1e-4)

    # discrete adjoint weak-form residual over a full test basis
    u = _random_dg_control(rng, part, order, p.m)
    x = solve_state(p, u, part, order, opts, rule)
    lam = solve_adjoint(p, u, x, part, order, opts, rule)
    check("adjoint-residual", adjoint_residual(p, u, x, lam, rule), 1e-10)

    # time-reversal round trip on a random linear system: reversing the
    # forward solve equals the backward solve of the time-reversed system
    d = p.d
    A = rng.uniform(-1.0, 1.0, size=(d, d))
    b = rng.uniform(-1.0, 1.0, size=d)
    rhs = IVPRight(
        F=lambda ts, X: X @ A.T + b,
        dF_dx=lambda ts, X: np.broadcast_to(A, (ts.size, d, d)).copy(),
    )
    x0 = rng.uniform(-1.0, 1.0, size=d)
    fwd = solve_forward(rhs, x0, part, order, opts, rule)
    rev_rhs = IVPRight(
        F=lambda ts, X: -(X @ A.T + b),
        dF_dx=lambda ts, X: np.broadcast_to(-A, (ts.size, d, d)).copy(),
    )
    back = solve_backward(rev_rhs, x0, part, order, opts, rule)
    check(
        "time-reversal",
        float(np.max(np.abs(back.coeffs - reverse_dg(fwd).coeffs))),
        1e-10,
    )

    return ok


def cmd_verify(args):
    ok = run_verification(args.problem, args.order, args.intervals, args.seed,
                          corrupt=args.corrupt)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="dgocp",
                                     description="DG time-stepping optimal control")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="optimize one problem instance")
    ps.add_argument("--problem", required=True, choices=["linear-lq", "nonlinear-quadratic"])
    ps.add_argument("--order", type=int, default=1)
    ps.add_argument("--intervals", type=int)
    ps.add_argument("--h", type=float)
    ps.add_argument("--method", choices=["pgd", "fbs"], default="fbs")
    ps.add_argument("--out", default="out")
    ps.add_argument("--grad-tol", type=float, default=1e-10)
    ps.add_argument("--max-iter", type=int, default=10000)
    ps.add_argument("--quad-points", type=int)
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("convergence", help="mesh-refinement error table")
    pc.add_argument("--problem", required=True, choices=["linear-lq", "nonlinear-quadratic"])
    pc.add_argument("--orders", default="1,2,3")
    pc.add_argument("--levels", type=int, default=6)
    pc.add_argument("--method", choices=["pgd", "fbs"], default="fbs")
    pc.add_argument("--grad-tol", type=float, default=1e-14)
    pc.add_argument("--out")
    pc.add_argument("--verbose", action="store_true")
    pc.set_defaults(func=cmd_convergence)

    pv = sub.add_parser("verify", help="gradient/tangent/Hessian/adjoint oracles")
    pv.add_argument("--problem", required=True, choices=["linear-lq", "nonlinear-quadratic"])
    pv.add_argument("--order", type=int, default=1)
    pv.add_argument("--intervals", type=int, default=8)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--corrupt", choices=["fx", "fu", "gx", "gu"])
    pv.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
