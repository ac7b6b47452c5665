"""Linear solves for the operator of :mod:`grid_operator`.

:func:`solve` is a preconditioned conjugate-gradient method that only
uses the matrix-free product.  :class:`DirectSolver` factorizes the
assembled sparse matrix once (SuperLU through scipy) and reuses the
factors for the many point sources needed at one frequency; it is the
default backend of the stress pipeline.  :func:`solve_dense_oracle` is a
dense LAPACK solve kept for testing.

The stress pipeline needs ``A^-1`` only between nearby nodes of a contour.
With the factorization ``P A P^T = L D L^H``, the entry
``(A^-1)_ij = sum_k conj(z_i)_k z_j_k / D_k`` with ``z_j = L^-1 P e_j``, and
``z_j`` is nonzero only on the elimination-tree ancestors of ``j``, so the
needed columns cost far less than full solves (:meth:`DirectSolver.selected`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

try:
    import numba
except ImportError:  # pragma: no cover - the block fallback is used instead
    numba = None

from .grid_operator import OperatorSpec, apply, assemble, diagonal

__all__ = [
    "SolveOptions",
    "SolveResult",
    "ConvergenceError",
    "solve",
    "solve_dense_oracle",
    "DirectSolver",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 4096


class ConvergenceError(RuntimeError):
    """CG failed; carries the last iterate and its relative residual."""

    def __init__(self, message, residual, iters, partial=None):
        super().__init__(message)
        self.residual = residual
        self.iters = iters
        self.partial = partial


@dataclass(frozen=True)
class SolveOptions:
    rel_tol: float = 1e-8
    max_iters: int | None = None
    preconditioner: str | None = "jacobi"

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.preconditioner not in (None, "jacobi"):
            raise ValueError("preconditioner must be None or 'jacobi'")

    def iteration_limit(self, n):
        return self.max_iters if self.max_iters is not None else max(1, int(20 * math.sqrt(n)))


class SolveResult(NamedTuple):
    g: np.ndarray
    iters: int
    residual: float


def _dot(x, y):
    # np.sum uses pairwise summation over a fixed blocking, independent of
    # BLAS threading, so the iteration is bit-reproducible
    return np.sum(np.conj(x) * y)


def solve(spec: OperatorSpec, b, opts: SolveOptions = SolveOptions(), x0=None, history=None) -> SolveResult:
    """Solve ``A g = b`` by preconditioned conjugate gradients.

    Parameters
    ----------
    spec : OperatorSpec
    b : ndarray
        Right-hand side on the unknown nodes.
    opts : SolveOptions
    x0 : ndarray, optional
        Starting guess (default zero).
    history : list, optional
        If given, receives the energy ``1/2 g^H A g - Re(b^H g)`` after every
        iteration.  It decreases monotonically in exact arithmetic.

    Returns
    -------
    SolveResult
        ``(g, iters, residual)`` with the relative residual
        ``||b - A g|| / ||b||``.
    """
    b = np.asarray(b)
    if b.shape != (spec.N,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({spec.N},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    dtype = np.result_type(b.dtype, spec.dtype, np.float64)
    bnorm = math.sqrt(_dot(b, b).real)
    if bnorm == 0:
        return SolveResult(np.zeros(spec.N, dtype=dtype), 0, 0.0)
    x = np.zeros(spec.N, dtype=dtype) if x0 is None else np.array(x0, dtype=dtype)
    r = b - apply(spec, x) if x0 is not None else b.astype(dtype)
    inv_diag = 1.0 / diagonal(spec) if opts.preconditioner == "jacobi" else None
    z = r * inv_diag if inv_diag is not None else r
    p = z.copy()
    rz = _dot(r, z)
    limit = opts.iteration_limit(spec.N)
    res = math.sqrt(_dot(r, r).real) / bnorm
    it = 0
    while res > opts.rel_tol:
        if it >= limit:
            raise ConvergenceError(f"CG did not converge in {limit} iterations (residual {res:.3e})", res, it, x)
        Ap = apply(spec, p)
        pAp = _dot(p, Ap)
        if not np.isfinite(pAp) or pAp.real <= 0:
            raise ConvergenceError("CG breakdown: non-finite or non-positive curvature", res, it, x)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if history is not None:
            history.append(-0.5 * _dot(x, b + r).real)
        z = r * inv_diag if inv_diag is not None else r
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = math.sqrt(_dot(r, r).real) / bnorm
        if not math.isfinite(res):
            raise ConvergenceError("NaN encountered in CG", res, it, x)
    if not spec.is_complex and np.iscomplexobj(x) and not np.iscomplexobj(b):
        x = x.real
    return SolveResult(x, it, res)


def solve_dense_oracle(spec: OperatorSpec, b) -> np.ndarray:
    """Dense direct solve, limited to ``N <= 4096``."""
    if spec.N > DENSE_LIMIT:
        raise ValueError(f"dense oracle refused: N = {spec.N} > {DENSE_LIMIT}")
    A = assemble(spec).toarray()
    return scipy.linalg.solve(A, np.asarray(b), assume_a="her" if spec.is_complex else "sym")


class DirectSolver:
    """Sparse LU factors of the operator, reused across right-hand sides.

    The matrix is Hermitian positive definite, so the factorization runs
    without pivoting on a symmetric fill-reducing ordering.
    """

    def __init__(self, spec: OperatorSpec, chunk: int = 128):
        self.spec = spec
        self.chunk = chunk
        A = assemble(spec).tocsc()
        self._lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=self.spec.dtype))

    def selected(self, nodes):
        """Lookup of ``(A^-1)[nodes[a], nodes[b]]`` for position arrays ``a, b``.

        Uses sparse forward solves when the factorization is symmetric (no
        pivoting happened) and numba is available; falls back to
        :meth:`inverse_block` otherwise.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        lu = self._lu
        if numba is None or not np.array_equal(lu.perm_r, lu.perm_c):
            block = self.inverse_block(nodes)
            return lambda a, b: block[a, b]
        L = lu.L.tocsc()
        dinv = 1.0 / lu.U.diagonal()
        ptr, idx, val = _forward_columns(L.indptr, L.indices, L.data, lu.perm_r[nodes].astype(np.int64), self.spec.N)

        def lookup(a, b):
            a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
            out = _column_dots(ptr, idx, val, dinv, a.ravel(), b.ravel())
            return out.reshape(a.shape)

        return lookup

    def inverse_block(self, nodes):
        """``(A^-1)[nodes][:, nodes]`` for unknown indices ``nodes``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        m = len(nodes)
        out = np.empty((m, m), dtype=self.spec.dtype)
        N = self.spec.N
        for start in range(0, m, self.chunk):
            cols = nodes[start : start + self.chunk]
            rhs = np.zeros((N, len(cols)), dtype=self.spec.dtype)
            rhs[cols, np.arange(len(cols))] = 1.0
            sol = self._lu.solve(rhs)
            out[:, start : start + len(cols)] = sol[nodes]
        return out


if numba is not None:

    @numba.njit(cache=True)
    def _forward_columns(indptr, indices, data, starts, N):  # pragma: no cover - compiled
        """Sparse ``L^-1 e_s`` for unit lower-triangular CSC ``L``, as CSC arrays."""
        work = np.zeros(N, dtype=data.dtype)
        cap = 16 * N
        out_idx = np.empty(cap, dtype=np.int64)
        out_val = np.empty(cap, dtype=data.dtype)
        ptr = np.zeros(len(starts) + 1, dtype=np.int64)
        nz = 0
        for c in range(len(starts)):
            work[starts[c]] = 1.0
            for k in range(starts[c], N):
                xk = work[k]
                if xk == 0:
                    continue
                work[k] = 0
                if nz == cap:
                    cap *= 2
                    grown_idx = np.empty(cap, dtype=np.int64)
                    grown_idx[:nz] = out_idx[:nz]
                    out_idx = grown_idx
                    grown_val = np.empty(cap, dtype=data.dtype)
                    grown_val[:nz] = out_val[:nz]
                    out_val = grown_val
                out_idx[nz] = k
                out_val[nz] = xk
                nz += 1
                for p in range(indptr[k], indptr[k + 1]):
                    i = indices[p]
                    if i > k:
                        work[i] -= data[p] * xk
            ptr[c + 1] = nz
        return ptr, out_idx[:nz], out_val[:nz]

    @numba.njit(cache=True)
    def _column_dots(ptr, idx, val, dinv, a, b):  # pragma: no cover - compiled
        """``sum_k conj(z_a)_k z_b_k dinv_k`` over sorted sparse columns."""
        out = np.zeros(len(a), dtype=val.dtype)
        for n in range(len(a)):
            p, pe = ptr[a[n]], ptr[a[n] + 1]
            q, qe = ptr[b[n]], ptr[b[n] + 1]
            acc = out[n] * 0
            while p < pe and q < qe:
                if idx[p] == idx[q]:
                    acc += np.conj(val[p]) * val[q] * dinv[idx[p]]
                    p += 1
                    q += 1
                elif idx[p] < idx[q]:
                    p += 1
                else:
                    q += 1
            out[n] = acc
        return out


def cg_inverse_block(spec: OperatorSpec, nodes, opts: SolveOptions = SolveOptions()):
    """Same as :meth:`DirectSolver.inverse_block`, one CG solve per column."""
    nodes = np.asarray(nodes, dtype=np.int64)
    out = np.empty((len(nodes), len(nodes)), dtype=spec.dtype)
    for j, c in enumerate(nodes):
        e = np.zeros(spec.N, dtype=spec.dtype)
        e[c] = 1.0
        out[:, j] = solve(spec, e, opts).g[nodes]
    return out
