"""Minimal linear-objective cone program container backed by Clarabel.

A program is ``min q^T x  s.t.  b - A x in K`` where ``K`` is a product of
zero, nonnegative and second-order cones listed in ``cones`` as ``(kind, dim)``
pairs in row order.

Plain-text dump format (one program per file, UTF-8)::

    # tsube cone program
    n <num_variables>
    m <num_rows>
    q <q_0> <q_1> ... <q_{n-1}>
    b <b_0> <b_1> ... <b_{m-1}>
    cones <kind>:<dim> <kind>:<dim> ...       # kind in {zero, nonneg, soc}
    A <nnz>
    <row> <col> <value>                       # one line per nonzero, 0-based
"""

from __future__ import annotations

from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp

from .errors import SolverError

FEAS_TOL = 1e-7

_CONES = {
    "zero": clarabel.ZeroConeT,
    "nonneg": clarabel.NonnegativeConeT,
    "soc": clarabel.SecondOrderConeT,
}

_OK = {clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved}
_INFEASIBLE = {
    clarabel.SolverStatus.PrimalInfeasible,
    clarabel.SolverStatus.AlmostPrimalInfeasible,
}


def _settings():
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_feas = FEAS_TOL
    s.tol_gap_abs = FEAS_TOL
    s.tol_gap_rel = FEAS_TOL
    s.max_iter = 100
    return s


@dataclass
class ConeSolution:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    residuals: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status in ("Solved", "AlmostSolved")

    @property
    def infeasible(self):
        return self.status in ("PrimalInfeasible", "AlmostPrimalInfeasible")


@dataclass
class ConeProgram:
    q: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: list

    @property
    def shape(self):
        return self.A.shape

    def solve(self, strict=True):
        """Solve with Clarabel.

        With ``strict=True`` any status other than solved or primal-infeasible
        raises :class:`SolverError` carrying the final residuals.
        """
        n = self.A.shape[1]
        cones = [_CONES[kind](dim) for kind, dim in self.cones if dim > 0]
        solver = clarabel.DefaultSolver(
            sp.csc_matrix((n, n)), self.q, self.A, self.b, cones, _settings()
        )
        sol = solver.solve()
        status = str(sol.status)
        residuals = {"primal": sol.r_prim, "dual": sol.r_dual, "iterations": sol.iterations}
        if sol.status in _OK:
            return ConeSolution(status, np.asarray(sol.x), sol.obj_val, sol.iterations, residuals)
        if sol.status in _INFEASIBLE:
            return ConeSolution(status, None, np.inf, sol.iterations, residuals)
        if strict:
            raise SolverError(f"cone solver stopped with status {status}", residuals)
        return ConeSolution(status, None, np.nan, sol.iterations, residuals)

    def dump(self, path):
        A = self.A.tocoo()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# tsube cone program\n")
            fh.write(f"n {A.shape[1]}\nm {A.shape[0]}\n")
            fh.write("q " + " ".join(repr(float(v)) for v in self.q) + "\n")
            fh.write("b " + " ".join(repr(float(v)) for v in self.b) + "\n")
            fh.write("cones " + " ".join(f"{k}:{d}" for k, d in self.cones) + "\n")
            fh.write(f"A {A.nnz}\n")
            for r, c, v in zip(A.row, A.col, A.data):
                fh.write(f"{r} {c} {float(v)!r}\n")

    @classmethod
    def load(cls, path):
        fields = {}
        triplets = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                head, _, rest = line.partition(" ")
                if head in ("n", "m", "A"):
                    fields[head] = int(rest)
                elif head in ("q", "b"):
                    fields[head] = np.array([float(v) for v in rest.split()])
                elif head == "cones":
                    fields["cones"] = [
                        (k, int(d)) for k, d in (tok.split(":") for tok in rest.split())
                    ]
                else:
                    r, c, v = line.split()
                    triplets.append((int(r), int(c), float(v)))
        rows, cols, vals = zip(*triplets) if triplets else ((), (), ())
        A = sp.csc_matrix((vals, (rows, cols)), shape=(fields["m"], fields["n"]))
        return cls(q=fields.get("q", np.zeros(fields["n"])), A=A, b=fields["b"], cones=fields["cones"])
