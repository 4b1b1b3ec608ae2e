"""Mesh-refinement convergence studies mirroring the benchmark error tables."""

import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .mesh import l2_error, make_uniform_partition
from .optimize import OptimizeOptions, minimize

__all__ = ["ConvergenceRow", "ConvergenceReport", "run_convergence"]

BASE_H = 0.1


@dataclass
class ConvergenceRow:
    r: int
    h: float
    err_x: float
    err_u: float
    rate_x: Optional[float] = None
    rate_u: Optional[float] = None


@dataclass
class ConvergenceReport:
    rows: List[ConvergenceRow] = field(default_factory=list)

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("r,h,err_x,err_u,rate_x,rate_u\n")
        for row in self.rows:
            rx = "" if row.rate_x is None else f"{row.rate_x:.2f}"
            ru = "" if row.rate_u is None else f"{row.rate_u:.2f}"
            buf.write(f"{row.r},{row.h:.10g},{row.err_x:.4e},{row.err_u:.4e},{rx},{ru}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _solve_level(problem, r, N, opts):
    part = make_uniform_partition(problem.T, N)
    report = minimize(problem, None, part, r, r, opts)
    return report


def run_convergence(builtin, orders=(1, 2, 3), levels=6, opts=None, base_h=BASE_H,
                    progress=None):
    """Optimize on h = base_h * 2^-k for k = 0..levels-1 and tabulate L2 errors.

    Errors are measured against the closed-form optimum when available,
    otherwise against a self-computed reference on the protocol's fine mesh.
    """
    # the finest levels sit near round-off; the optimizer has to be driven
    # well below the default stationarity tolerance to resolve them
    opts = opts or OptimizeOptions(grad_tol=1e-14)
    p = builtin.problem

    if builtin.exact_state is not None:
        ref_x, ref_u = builtin.exact_state, builtin.exact_control
    else:
        kind, h_ref, r_ref = builtin.reference_protocol
        if kind != "self_refined":
            raise ValueError(f"unknown reference protocol {kind!r}")
        r_ref = max(orders) if r_ref is None else r_ref
        N_ref = int(round(p.T / h_ref))
        if progress:
            progress(f"reference solve: r={r_ref}, N={N_ref}")
        ref = _solve_level(p, r_ref, N_ref, opts)
        ref_x, ref_u = ref.x_star, ref.u_star.dg

    report = ConvergenceReport()
    for r in orders:
        prev = None
        for k in range(levels):
            h = base_h * 2.0**-k
            N = int(round(p.T / h))
            if progress:
                progress(f"r={r}, k={k}, N={N}")
            res = _solve_level(p, r, N, opts)
            err_x = l2_error(res.x_star, ref_x)
            err_u = l2_error(res.u_star.dg, ref_u)
            row = ConvergenceRow(r=r, h=h, err_x=err_x, err_u=err_u)
            if prev is not None:
                row.rate_x = float(np.log2(prev.err_x / err_x))
                row.rate_u = float(np.log2(prev.err_u / err_u))
            report.rows.append(row)
            prev = row
    return report
