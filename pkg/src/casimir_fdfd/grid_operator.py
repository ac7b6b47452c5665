"""Imaginary-frequency Maxwell operator on the periodic grid.

Both 2D polarizations (and the 1D problem) reduce to one scalar unknown
``psi`` on the grid nodes, the field component normal to the plane:

* TM: ``psi = E_z``; ``A = -div grad + xi^2 eps``; perfect-metal nodes are
  eliminated (Dirichlet).
* TE: ``psi = H_z`` on the staggered (cell-center) lattice;
  ``A = -div (1/eps) grad + xi^2``; edges lying in metal or touching a
  metal node get zero coupling, which imposes the mirror (Neumann)
  condition on the metal surface.

Written with the edge-difference matrix ``P`` (``(P psi)_e`` is the forward
difference across edge ``e``), ``A = P^H K P + xi^2 M`` where ``K`` lives on
edges and ``M`` on nodes.  The in-plane field is a 90 degree rotation of
``P psi``; its own operator ``B = P M^-1 P^H + xi^2 K^-1`` (the in-plane E
block for TE, the in-plane H block for TM) is provided by
:func:`assemble_dual` and serves as an independent route to the in-plane
correlations.

``xi`` is the angular imaginary frequency in units of c/a.  An optional
Bloch wavevector multiplies the wrap across the cell boundary by
``exp(i k L)``; an optional transverse wavevector ``k_transverse`` (1D
only) adds ``k^2 K_node`` for fields varying as ``exp(i k y)`` along a
direction that is not gridded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .geometry import DiscretizedDomain
from .materials import PerfectMetal, epsilon_at_angular

__all__ = [
    "OperatorSpec",
    "apply",
    "assemble",
    "diagonal",
    "assemble_dual",
    "dual_edges",
    "point_source",
    "edge_source",
    "ShapeError",
]

POLARIZATIONS = ("TM", "TE", "scalar")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Everything that defines one linear system.

    Parameters
    ----------
    domain : DiscretizedDomain
    w : float
        Angular imaginary frequency (c/a), > 0.
    polarization : {"TM", "TE", "scalar"}
        ``"scalar"`` is the 1D name of the electric (Dirichlet) problem.
    bloch_k : tuple of float, optional
        Bloch wavevector per axis (``None`` entries mean plain periodic).
    k_transverse : float
        Wavevector along an invariant direction (1D domains only).
    """

    domain: DiscretizedDomain
    w: float
    polarization: str = "TM"
    bloch_k: tuple | None = None
    k_transverse: float = 0.0

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError("the operator is positive definite only for w > 0")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if self.polarization == "scalar" and self.domain.dimension != 1:
            raise ValueError("'scalar' polarization is the 1D problem")
        if (self.polarization == "TE") != self.domain.staggered:
            raise ValueError("TE needs a staggered domain and TM/scalar an unstaggered one")
        if self.k_transverse and self.domain.dimension != 1:
            raise ValueError("k_transverse is only supported on 1D domains")
        if self.bloch_k is not None:
            bk = tuple(self.bloch_k)
            if len(bk) != self.domain.dimension:
                raise ValueError("bloch_k needs one entry per axis")
            object.__setattr__(self, "bloch_k", bk)

    @property
    def field_kind(self):
        return "magnetic" if self.polarization == "TE" else "electric"

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def N(self):
        return self.domain.N

    @cached_property
    def phases(self):
        out = []
        for ax in range(self.dimension):
            k = None if self.bloch_k is None else self.bloch_k[ax]
            if k is None or k == 0:
                out.append(1.0)
            else:
                out.append(complex(np.exp(1j * k * self.domain.cell[ax])))
        return tuple(out)

    @property
    def is_complex(self):
        return any(isinstance(p, complex) and p.imag != 0 for p in self.phases)

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @cached_property
    def _eps_table(self):
        eps = []
        for m in self.domain.materials:
            eps.append(np.inf if isinstance(m, PerfectMetal) else epsilon_at_angular(m, self.w))
        return np.array(eps)

    @cached_property
    def node_eps(self):
        return self._eps_table[self.domain.node_material]

    @cached_property
    def edge_eps(self):
        return tuple(self._eps_table[m] for m in self.domain.edge_material)

    @cached_property
    def edge_coeff(self):
        """``K`` on the edges along each axis (full grid arrays)."""
        metal = self.domain.metal
        out = []
        for ax in range(self.dimension):
            if self.field_kind == "electric":
                K = np.ones(self.domain.shape)
            else:
                nb = np.roll(metal, -1, axis=ax)
                with np.errstate(divide="ignore"):
                    K = 1.0 / self.edge_eps[ax]
                K = np.where(metal | nb | np.isinf(self.edge_eps[ax]), 0.0, K)
            K.setflags(write=False)
            out.append(K)
        return tuple(out)

    @cached_property
    def node_coeff(self):
        """``M`` on the unknown nodes."""
        keep = ~self.domain.metal
        if self.field_kind == "electric":
            return self.node_eps[keep]
        return np.ones(self.N)

    @cached_property
    def transverse_coeff(self):
        """Coefficient of ``k_transverse^2`` on the unknown nodes."""
        keep = ~self.domain.metal
        if self.field_kind == "electric":
            return np.ones(self.N)
        return 1.0 / self.node_eps[keep]


def _embed(spec, v):
    v = np.asarray(v)
    if v.shape != (spec.N,):
        raise ShapeError(f"field vector has shape {v.shape}, expected ({spec.N},)")
    dtype = np.result_type(v.dtype, spec.dtype, np.float64)
    u = np.zeros(spec.domain.shape, dtype=dtype)
    u[~spec.domain.metal] = v
    return u


def _last(ax, d):
    sl = [slice(None)] * d
    sl[ax] = -1
    return tuple(sl)


def _first(ax, d):
    sl = [slice(None)] * d
    sl[ax] = 0
    return tuple(sl)


def apply(spec: OperatorSpec, v) -> np.ndarray:
    """Matrix-free product ``A v`` on the unknown nodes."""
    u = _embed(spec, v)
    d = spec.dimension
    dx = spec.domain.dx
    out = np.zeros_like(u)
    for ax in range(d):
        ph = spec.phases[ax]
        up = np.roll(u, -1, axis=ax)
        if ph != 1.0:
            up[_last(ax, d)] *= ph
        f = spec.edge_coeff[ax] * (up - u) / dx
        fm = np.roll(f, 1, axis=ax)
        if ph != 1.0:
            fm[_first(ax, d)] *= np.conj(ph)
        out += (fm - f) / dx
    res = out[~spec.domain.metal]
    res += spec.w**2 * spec.node_coeff * np.asarray(v)
    if spec.k_transverse:
        res += spec.k_transverse**2 * spec.transverse_coeff * np.asarray(v)
    return res


def diagonal(spec: OperatorSpec) -> np.ndarray:
    dx2 = spec.domain.dx**2
    acc = np.zeros(spec.domain.shape)
    for ax in range(spec.dimension):
        K = spec.edge_coeff[ax]
        acc += (K + np.roll(K, 1, axis=ax)) / dx2
    diag = acc[~spec.domain.metal] + spec.w**2 * spec.node_coeff
    if spec.k_transverse:
        diag = diag + spec.k_transverse**2 * spec.transverse_coeff
    return diag


def _difference_matrix(spec: OperatorSpec):
    """Edge-difference matrix over all edges and all nodes.

    Returns ``(P, K)`` where rows run over the edges of every axis in turn
    and ``K`` is the stacked edge coefficient.
    """
    dom = spec.domain
    shape = dom.shape
    n = int(np.prod(shape))
    flat = np.arange(n).reshape(shape)
    blocks = []
    Ks = []
    for ax in range(spec.dimension):
        nxt = np.roll(flat, -1, axis=ax)
        wrap = np.zeros(shape, dtype=bool)
        wrap[_last(ax, spec.dimension)] = True
        ph = np.where(wrap, spec.phases[ax], 1.0).ravel()
        rows = np.concatenate([flat.ravel(), flat.ravel()])
        cols = np.concatenate([flat.ravel(), nxt.ravel()])
        vals = np.concatenate([-np.ones(n), ph]) / dom.dx
        blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(n, n)))
        Ks.append(spec.edge_coeff[ax].ravel())
    return sp.vstack(blocks).tocsr(), np.concatenate(Ks)


def assemble(spec: OperatorSpec) -> sp.csr_matrix:
    """Sparse matrix of the operator on the unknown nodes."""
    P, K = _difference_matrix(spec)
    keep = np.flatnonzero(~spec.domain.metal.ravel())
    P = P[:, keep]
    A = (P.conj().T @ sp.diags(K) @ P).tocsr()
    diag = spec.w**2 * spec.node_coeff
    if spec.k_transverse:
        diag = diag + spec.k_transverse**2 * spec.transverse_coeff
    A = A + sp.diags(diag)
    if not spec.is_complex:
        A = A.real
    return A.tocsr()


def dual_edges(spec: OperatorSpec) -> np.ndarray:
    """Stacked indices of the edges that carry in-plane field unknowns.

    TM keeps every edge with at least one non-metal end; TE keeps edges with
    nonzero coupling.  Edge ``e`` of axis ``k`` has stacked index
    ``k * n_nodes + e``.
    """
    P, K = _difference_matrix(spec)
    keep = np.flatnonzero(~spec.domain.metal.ravel())
    touched = np.asarray(abs(P[:, keep]).sum(axis=1)).ravel() > 0
    if spec.field_kind == "electric":
        return np.flatnonzero(touched)
    return np.flatnonzero(touched & (K > 0))


def assemble_dual(spec: OperatorSpec):
    """Operator ``B = P M^-1 P^H + w^2 K^-1`` of the in-plane field.

    For TE this is the two-component curl-curl block of the in-plane
    electric field, for TM the same block for the in-plane magnetic field,
    both written in the rotated variables ``P psi``.  Returns
    ``(B, edges)`` with ``edges`` from :func:`dual_edges`.
    """
    if spec.k_transverse:
        raise ValueError("the dual operator does not support k_transverse")
    P, K = _difference_matrix(spec)
    keep = np.flatnonzero(~spec.domain.metal.ravel())
    edges = dual_edges(spec)
    Pr = P[edges][:, keep]
    B = Pr @ sp.diags(1.0 / spec.node_coeff) @ Pr.conj().T + sp.diags(spec.w**2 / K[edges])
    if not spec.is_complex:
        B = B.real
    return B.tocsr(), edges


def _as_index(spec, location):
    if np.isscalar(location):
        location = (int(location),)
    location = tuple(int(i) for i in location)
    if len(location) != spec.dimension:
        raise ShapeError("location needs one index per axis")
    return tuple(i % n for i, n in zip(location, spec.domain.shape))


def point_source(spec: OperatorSpec, location, component="z") -> np.ndarray:
    """Discrete delta of unit total weight at a grid node.

    ``component`` must be the out-of-plane axis ``"z"`` (the scalar unknown
    of either polarization).  For Bloch problems the vector is the source
    of the reference cell of the phased periodic array.
    """
    if component != "z":
        raise ValueError("scalar formulations carry only the out-of-plane component 'z'")
    idx = _as_index(spec, location)
    if spec.domain.metal[idx]:
        raise ValueError(f"source location {idx} lies inside a perfect metal")
    b = np.zeros(spec.N, dtype=spec.dtype)
    b[spec.domain.unknown_index[idx]] = 1.0 / spec.domain.dx**spec.dimension
    return b


def edge_source(spec: OperatorSpec, location, axis: int, edges=None) -> np.ndarray:
    """Discrete delta on the edge from ``location`` along ``axis``, for the
    dual operator of :func:`assemble_dual`."""
    if edges is None:
        edges = dual_edges(spec)
    idx = _as_index(spec, location)
    n = int(np.prod(spec.domain.shape))
    stacked = axis * n + int(np.ravel_multi_index(idx, spec.domain.shape))
    pos = np.searchsorted(edges, stacked)
    if pos >= len(edges) or edges[pos] != stacked:
        raise ValueError(f"edge {idx} along axis {axis} carries no field")
    b = np.zeros(len(edges), dtype=spec.dtype)
    b[pos] = 1.0 / spec.domain.dx**spec.dimension
    return b


def vacuum_lower_bound(spec: OperatorSpec) -> float:
    """Smallest possible eigenvalue, ``w^2 min M`` (k_transverse ignored)."""
    return spec.w**2 * float(np.min(spec.node_coeff)) if spec.N else math.inf
