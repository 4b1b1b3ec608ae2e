"""Time partitions and piecewise-polynomial (DG) function containers.

A DGFunction stores modal Legendre coefficients per interval and is allowed to
jump at the interior nodes.  One-sided traces, jumps, interval-wise L2
projections/norms and total variation all live here.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .basis import default_rule, legendre_table, mass_diagonal

__all__ = [
    "Partition",
    "DGFunction",
    "ControlFunction",
    "make_uniform_partition",
    "project_l2",
    "modal_from_values",
    "l2_error",
    "total_variation",
    "save_dg",
    "load_dg",
]


@dataclass(frozen=True)
class Partition:
    """Strictly increasing time nodes 0 = t_0 < ... < t_N = T."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a partition needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("partition must start at t = 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("partition nodes must be strictly increasing")

    @property
    def N(self):
        return self.nodes.size - 1

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def h(self):
        return float(np.max(self.widths))

    def reversed(self):
        """Partition with nodes T - t_{N-n} (same interval widths, reversed order)."""
        return Partition(self.T - self.nodes[::-1])

    def quad_times(self, rule):
        """Mapped quadrature times, shape (N, q)."""
        left = self.nodes[:-1]
        return left[:, None] + 0.5 * self.widths[:, None] * (rule.points[None, :] + 1.0)

    def locate(self, ts, side="left"):
        """Interval index for each time; `side` picks the interval at interior nodes."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < -1e-12) or np.any(ts > self.T * (1 + 1e-12) + 1e-12):
            raise ValueError("time outside [0, T]")
        mode = "left" if side == "left" else "right"
        idx = np.searchsorted(self.nodes, ts, side=mode) - 1
        return np.clip(idx, 0, self.N - 1)


def make_uniform_partition(T, N):
    """Uniform partition of [0, T] into N intervals."""
    if T <= 0.0:
        raise ValueError("horizon must be positive")
    if N < 1:
        raise ValueError("need at least one interval")
    return Partition(np.linspace(0.0, T, N + 1))


@dataclass
class DGFunction:
    """Piecewise polynomial of degree <= r, modal coefficients (N, r+1, d)."""

    partition: Partition
    degree: int
    dim: int
    coeffs: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (self.partition.N, self.degree + 1, self.dim)
        if self.coeffs is None:
            self.coeffs = np.zeros(shape)
        else:
            self.coeffs = np.asarray(self.coeffs, dtype=float)
            if self.coeffs.shape != shape:
                raise ValueError(f"coefficient array must have shape {shape}")

    # -- evaluation ---------------------------------------------------------

    def eval_many(self, ts, side="left"):
        """Values at times ts, shape (len(ts), d); side resolves interior nodes."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        idx = self.partition.locate(ts, side=side)
        t0 = self.partition.nodes[idx]
        h = self.partition.widths[idx]
        xi = np.clip(2.0 * (ts - t0) / h - 1.0, -1.0, 1.0)
        P = legendre_table(self.degree, xi)
        return np.einsum("qk,qkd->qd", P, self.coeffs[idx])

    def eval(self, t, side="left"):
        return self.eval_many(np.array([t]), side=side)[0]

    def __call__(self, ts):
        return self.eval_many(ts)

    def values_on_quad(self, rule):
        """Values at the mapped quadrature points of every interval, (N, q, d)."""
        P = legendre_table(self.degree, rule.points)
        return np.einsum("qk,nkd->nqd", P, self.coeffs)

    # -- traces and jumps ---------------------------------------------------

    def trace_right(self, n):
        """One-sided limit from the right at node n (0 <= n <= N-1)."""
        signs = (-1.0) ** np.arange(self.degree + 1)
        return signs @ self.coeffs[n]

    def trace_left(self, n):
        """One-sided limit from the left at node n (1 <= n <= N)."""
        return self.coeffs[n - 1].sum(axis=0)

    def jump(self, n):
        """[phi]_n = phi_n^+ - phi_n^- at an interior node."""
        if not 1 <= n <= self.partition.N - 1:
            raise ValueError("jumps are defined at interior nodes only")
        return self.trace_right(n) - self.trace_left(n)

    # -- algebra ------------------------------------------------------------

    def _compatible(self, other):
        if self.degree != other.degree or self.dim != other.dim:
            raise ValueError("mismatched degree or dimension")
        if not np.array_equal(self.partition.nodes, other.partition.nodes):
            raise ValueError("mismatched partitions")

    def __add__(self, other):
        self._compatible(other)
        return DGFunction(self.partition, self.degree, self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._compatible(other)
        return DGFunction(self.partition, self.degree, self.dim, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return DGFunction(self.partition, self.degree, self.dim, self.coeffs * float(a))

    __rmul__ = __mul__

    def l2_norm(self):
        """Exact L2(0,T) norm from the modal coefficients."""
        mass = mass_diagonal(self.degree)
        per = np.einsum("nkd,k->n", self.coeffs**2, mass)
        return float(np.sqrt(np.sum(0.5 * self.partition.widths * per)))


def modal_from_values(values, partition, r, rule):
    """Modal DGFunction whose interval-wise L2 projection matches quadrature data.

    `values` has shape (N, q, d) at the rule's mapped points.
    """
    values = np.asarray(values, dtype=float)
    P = legendre_table(r, rule.points)
    scale = (2.0 * np.arange(r + 1) + 1.0) / 2.0
    coeffs = np.einsum("q,qk,nqd,k->nkd", rule.weights, P, values, scale)
    return DGFunction(partition, r, values.shape[2], coeffs)


def _ref_values(fn, ts, dim=None):
    vals = np.asarray(fn(ts), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if dim is not None and vals.shape[1] != dim:
        raise ValueError("reference callable returned wrong dimension")
    return vals


def project_l2(fn, partition, r, rule=None, dim=None):
    """Interval-wise L2 projection of a callable onto degree-r DG space."""
    rule = rule or default_rule(r)
    ts = partition.quad_times(rule)
    flat = _ref_values(fn, ts.ravel(), dim)
    values = flat.reshape(partition.N, rule.q, flat.shape[1])
    return modal_from_values(values, partition, r, rule)


def l2_error(F, ref, rule=None):
    """Discrete L2 distance between a DG function and a reference.

    Samples both at the r+1 equidistant points of each interval (the
    midpoint when r = 0) and returns sqrt(sum_n h_n sum_i |e_i|^2).
    The optional rule argument switches to interval-wise Gauss
    quadrature of the continuous L2 norm instead.
    """
    if rule is not None:
        ts = F.partition.quad_times(rule)
        if isinstance(ref, DGFunction):
            rv = ref.eval_many(ts.ravel())
        else:
            rv = _ref_values(ref, ts.ravel(), F.dim)
        diff = F.values_on_quad(rule) - rv.reshape(F.partition.N, rule.q, F.dim)
        per = np.einsum("q,nqd->n", rule.weights, diff**2)
        return float(np.sqrt(np.sum(0.5 * F.partition.widths * per)))
    r = F.degree
    xi = np.linspace(-1.0, 1.0, r + 1) if r > 0 else np.zeros(1)
    P = legendre_table(r, xi)
    nodes = F.partition.nodes
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    ts = mids[:, None] + 0.5 * F.partition.widths[:, None] * xi[None, :]
    if isinstance(ref, DGFunction) and np.array_equal(ref.partition.nodes, nodes):
        # same partition: evaluate the reference interval by interval so
        # its jumps at the boundaries are not counted as error
        Pr = legendre_table(ref.degree, xi)
        rv = np.einsum("ij,njd->nid", Pr, ref.coeffs).reshape(-1, F.dim)
    elif isinstance(ref, DGFunction):
        rv = ref.eval_many(ts.ravel(), side="left").reshape(F.partition.N, r + 1, F.dim)
        if r > 0:
            rv[:, 0, :] = ref.eval_many(ts[:, 0], side="right")
        rv = rv.reshape(-1, F.dim)
    else:
        rv = _ref_values(ref, ts.ravel(), F.dim)
    diff = np.einsum("ij,njd->nid", P, F.coeffs) - rv.reshape(F.partition.N, r + 1, F.dim)
    per = np.sum(diff**2, axis=(1, 2))
    return float(np.sqrt(np.sum(F.partition.widths * per)))


class ControlFunction:
    """A control: either a DGFunction or a closed-form callable, plus box bounds."""

    def __init__(self, source, m=None, lo=None, hi=None):
        if isinstance(source, ControlFunction):
            self.dg, self.fn = source.dg, source.fn
            m = m if m is not None else source.m
            lo = lo if lo is not None else source.lo
            hi = hi if hi is not None else source.hi
        elif isinstance(source, DGFunction):
            self.dg, self.fn = source, None
            m = source.dim
        elif callable(source):
            self.dg, self.fn = None, source
        else:
            raise TypeError("control must be a DGFunction or a callable")
        if m is None:
            raise ValueError("control dimension m required for callable controls")
        self.m = m
        self.lo = None if lo is None else np.broadcast_to(np.asarray(lo, float), (m,))
        self.hi = None if hi is None else np.broadcast_to(np.asarray(hi, float), (m,))

    def __call__(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.dg is not None:
            return self.dg.eval_many(ts)
        return _ref_values(self.fn, ts, self.m)

    def within_box(self, ts, tol=0.0):
        vals = self(ts)
        ok = True
        if self.lo is not None:
            ok = ok and bool(np.all(vals >= self.lo - tol))
        if self.hi is not None:
            ok = ok and bool(np.all(vals <= self.hi + tol))
        return ok


def total_variation(u):
    """Total variation of a piecewise-polynomial control.

    Per component: the exact variation of the polynomial inside each interval
    (split at the real roots of its derivative) plus the interior jump
    magnitudes; the component TVs are summed.
    """
    if isinstance(u, ControlFunction):
        if u.dg is None:
            raise TypeError("total variation of a closed-form control is unsupported")
        u = u.dg
    if not isinstance(u, DGFunction):
        raise TypeError("total variation needs a DG-backed control")

    tv = 0.0
    r = u.degree
    for n in range(u.partition.N):
        for comp in range(u.dim):
            c = u.coeffs[n, :, comp]
            # variation of the polynomial on the reference interval
            breaks = [-1.0, 1.0]
            if r >= 2:
                dc = np.polynomial.legendre.legder(c)
                roots = np.polynomial.legendre.legroots(dc)
                for z in roots:
                    if abs(z.imag) < 1e-12 and -1.0 < z.real < 1.0:
                        breaks.append(float(z.real))
            breaks.sort()
            vals = np.polynomial.legendre.legval(np.asarray(breaks), c)
            tv += float(np.sum(np.abs(np.diff(vals))))
    for n in range(1, u.partition.N):
        tv += float(np.sum(np.abs(u.jump(n))))
    return tv


def save_dg(F, path):
    """Plain-text dump: header (N, r, d, nodes), one row of modal coeffs per interval."""
    with open(path, "w") as fh:
        fh.write(f"# N={F.partition.N} r={F.degree} d={F.dim}\n")
        fh.write("# nodes=" + ",".join(repr(float(t)) for t in F.partition.nodes) + "\n")
        for n in range(F.partition.N):
            row = F.coeffs[n].reshape(-1)
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_dg(path):
    """Inverse of save_dg."""
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(kv.split("=") for kv in header.lstrip("# ").split())
        N, r, d = int(fields["N"]), int(fields["r"]), int(fields["d"])
        nodes = np.array([float(v) for v in fh.readline().split("=", 1)[1].split(",")])
        data = np.loadtxt(io.StringIO(fh.read()), delimiter=",", ndmin=2)
    coeffs = data.reshape(N, r + 1, d)
    return DGFunction(Partition(nodes), r, d, coeffs)
