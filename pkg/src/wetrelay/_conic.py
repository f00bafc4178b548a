"""Grid-restricted mutual-information programs solved as exponential-cone problems.

An AWGN channel with inputs on a uniform grid is discretised on an output
lattice at most a quarter noise deviation fine. Writing

    I(p) = sum_i p_i KL(W_i || r) - KL(W p || r)

for a positive reference output law ``r`` keeps every term of the order of
the information itself, which the conic solver needs when almost all the
mass sits on one input (as under a tight cost budget).
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class ConicSolverError(RuntimeError):
    """The conic solver gave up on a grid problem."""


class LatticeChannel:
    """Sparse transition matrix of ``Y = X + N(0, 1)`` for ``X`` on a uniform grid.

    ``x`` is in noise deviations, uniform and odd-sized. Only lattice rows
    within ``tails`` deviations of some input are kept, so widely spaced
    inputs stay cheap.
    """

    def __init__(self, x, resolution: float = 0.25, tails: float = 9.0):
        x = np.asarray(x, dtype=float)
        if x.size < 2:
            raise ValueError("grid needs at least two points")
        step = (x[-1] - x[0]) / (x.size - 1)
        if not np.allclose(np.diff(x), step, rtol=1e-9, atol=0):
            raise ValueError("grid must be uniform")
        m = max(1, int(math.ceil(step / resolution)))
        h = step / m
        L = int(math.ceil(tails / h))
        k = np.arange(-L, L + 1)
        lk = -0.5 * (k * h) ** 2
        kernel = np.exp(lk - lk.max())
        kernel /= kernel.sum()
        n = x.size
        rows = (m * np.arange(n))[:, None] + (k + L)[None, :]
        used, inv = np.unique(rows.ravel(), return_inverse=True)
        cols = np.repeat(np.arange(n), k.size)
        self.x = x
        self.W = sp.csc_matrix((np.tile(kernel, n), (inv, cols)), shape=(used.size, n))
        self.kernel_entropy = float(-(kernel * np.log(kernel)).sum())

    @property
    def n_out(self) -> int:
        return self.W.shape[0]

    def output(self, p):
        return self.W @ np.asarray(p, dtype=float)

    def reference_gain(self, r):
        """``KL(W_i || r)`` for every input ``i`` (nats)."""
        W = self.W.tocoo()
        terms = W.data * (np.log(W.data) - np.log(r[W.row]))
        return np.bincount(W.col, weights=terms, minlength=W.shape[1])

    def mutual_information(self, p) -> float:
        """Mutual information of the discretised channel (nats)."""
        q = self.output(p)
        nz = q > 0
        return float(-(q[nz] * np.log(q[nz])).sum() - self.kernel_entropy * np.sum(p))

    def reference(self, p, floor: float):
        """Output law of ``p`` blended with a little of the uniform-input output."""
        u = self.output(np.full(self.x.size, 1.0 / self.x.size))
        return (1.0 - floor) * self.output(p) + floor * u


def info_expression(chan: LatticeChannel, p, r):
    """cvxpy expression of ``I(p)`` (nats) around the reference ``r``."""
    import cvxpy as cp

    a = chan.reference_gain(r)
    return a @ p - cp.sum(cp.rel_entr(chan.W @ p, r))


def solve(problem, tol: float = 1e-10):
    """Solve with tight tolerances, loosening them once if the solver stalls."""
    import cvxpy as cp

    attempts = [
        dict(tol_gap_abs=tol * 1e-2, tol_gap_rel=tol, tol_feas=tol, tol_ktratio=1e-8, max_iter=400),
        dict(max_iter=400),
    ]
    last = None
    for opts in attempts:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                problem.solve(solver="CLARABEL", **opts)
        except cp.error.SolverError as exc:
            last = exc
            continue
        if problem.status in ("optimal", "optimal_inaccurate"):
            if problem.status != "optimal":
                log.debug("conic solve finished with status %s", problem.status)
            return problem.status
        last = problem.status
    raise ConicSolverError(f"conic solver failed ({last})")
