"""Integration over imaginary frequency and Bloch wavevector.

The semi-infinite frequency integral is mapped to ``t in (0, 1)`` by
``w = s0 t / (1 - t)`` and integrated with a globally adaptive 15-point
Gauss-Kronrod rule (error estimate as in QUADPACK's QK15).  The rule is
open, so ``w = 0`` and ``w = inf`` are never evaluated.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .materials import PerfectMetal

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "QuadratureError",
    "integrate_w",
    "integrate_kz",
    "z_invariant_weight",
    "gauss_legendre",
]

# Kronrod abscissae on [-1, 1] (non-negative half) and weights; the odd
# positions are the 7-point Gauss nodes
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]

_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Subdivision limit reached; carries the partial value and estimate."""

    def __init__(self, message, value, error, n_evals):
        super().__init__(message)
        self.value = value
        self.error = error
        self.n_evals = n_evals


@dataclass(frozen=True)
class QuadratureSpec:
    """Options of the frequency and wavevector quadratures.

    ``w_scale`` is the map scale ``s0``; ``None`` lets the caller choose
    (the force pipeline uses ``2 pi / gap``).  ``mode`` is one of
    ``"2d"`` (plain integral), ``"zinv3d"`` (perfect-metal z-invariant
    reduction) or ``"bloch"`` (periodic along the scene's Bloch axis).
    """

    rel_tol: float = 1e-3
    abs_tol: float = 0.0
    w_scale: float | None = None
    max_subdivisions: int = 50
    kz_nodes: int = 8
    mode: str = "2d"

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.w_scale is not None and not self.w_scale > 0:
            raise ValueError("w_scale must be > 0")
        if self.kz_nodes < 1:
            raise ValueError("kz_nodes must be >= 1")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.mode not in ("2d", "zinv3d", "bloch"):
            raise ValueError("mode must be '2d', 'zinv3d' or 'bloch'")


@dataclass
class QuadResult:
    value: object
    error: float
    n_evals: int
    samples: dict = field(default_factory=dict)
    intervals: list = field(default_factory=list)


def _qk15(vals, half):
    """Kronrod value, Gauss value and QUADPACK error for one interval.

    ``vals`` has shape (15, m) with the already-weighted integrand.
    """
    k = half * (_KW @ vals)
    g = half * (_GW @ vals)
    mean = (_KW @ vals) * 0.5
    resabs = half * (_KW @ np.abs(vals))
    resasc = half * (_KW @ np.abs(vals - mean))
    err = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where((resasc != 0) & (err != 0), resasc * np.minimum(1.0, (200 * err / resasc) ** 1.5), err)
    floor = 50 * _EPS * resabs
    scaled = np.where(resabs > np.finfo(float).tiny / (50 * _EPS), np.maximum(floor, scaled), scaled)
    return k, float(np.linalg.norm(scaled))


def integrate_w(f, spec: QuadratureSpec = QuadratureSpec(), *, w_scale=None, executor=None, cache=None) -> QuadResult:
    """Integrate ``f`` over ``w in (0, inf)``.

    Parameters
    ----------
    f : callable
        Scalar or array valued function of ``w > 0``.
    spec : QuadratureSpec
    w_scale : float, optional
        Overrides ``spec.w_scale``; falls back to ``2 pi``.
    executor : concurrent.futures.Executor, optional
        Evaluates the nodes of each refinement step concurrently.
    cache : dict, optional
        ``w -> f(w)`` memo shared between calls; new values are added.

    Returns
    -------
    QuadResult
        Value, error estimate (norm over components), number of fresh
        evaluations, the samples used and the final interval list.

    Raises
    ------
    QuadratureError
        When ``max_subdivisions`` intervals do not reach the tolerance.
    """
    s0 = w_scale if w_scale is not None else (spec.w_scale if spec.w_scale is not None else 2 * math.pi)
    if not s0 > 0:
        raise ValueError("w_scale must be > 0")
    memo = {} if cache is None else cache
    used = {}
    fresh = [0]

    def evaluate(ws):
        todo = [w for w in ws if w not in memo]
        if todo:
            out = list(executor.map(f, todo)) if executor is not None else [f(w) for w in todo]
            for w, v in zip(todo, out):
                v = np.asarray(v, dtype=float)
                if not np.all(np.isfinite(v)):
                    raise ValueError(f"integrand is not finite at w = {w}")
                memo[w] = v
            fresh[0] += len(todo)
        for w in ws:
            used[w] = memo[w]
        return [memo[w] for w in ws]

    def rule(intervals):
        pts = []
        for a, b in intervals:
            c, h = 0.5 * (a + b), 0.5 * (b - a)
            t = c + h * _NODES
            pts.append(t)
        ws = [float(s0 * t / (1 - t)) for tt in pts for t in tt]
        vals = evaluate(ws)
        out = []
        for i, (a, b) in enumerate(intervals):
            t = pts[i]
            jac = s0 / (1 - t) ** 2
            v = np.array([np.atleast_1d(x) for x in vals[15 * i : 15 * (i + 1)]]) * jac[:, None]
            out.append(_qk15(v, 0.5 * (b - a)))
        return out

    (val, err), = rule([(0.0, 1.0)])
    heap = [(-err, 0.0, 1.0, val)]
    while True:
        total = sum(item[3] for item in heap)
        total_err = math.sqrt(sum(item[0] ** 2 for item in heap))
        tol = max(spec.rel_tol * float(np.linalg.norm(total)), spec.abs_tol)
        if total_err <= tol:
            break
        if len(heap) + 1 > spec.max_subdivisions:
            raise QuadratureError(
                f"subdivision limit reached (value {total}, error {total_err:.3e})", total, total_err, fresh[0]
            )
        _, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        (v1, e1), (v2, e2) = rule([(a, m), (m, b)])
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
    scalar = all(np.ndim(v) == 0 for v in used.values())
    value = float(total[0]) if scalar else total
    return QuadResult(value, total_err, fresh[0], dict(sorted(used.items())), sorted((a, b) for _, a, b, _ in heap))


def gauss_legendre(n, a, b):
    x, wts = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * wts


def integrate_kz(f, Lambda, spec: QuadratureSpec = QuadratureSpec(), nodes=None):
    """``(1/2pi) * 2 * int_0^{pi/Lambda} f(k) dk`` by Gauss-Legendre.

    ``f`` must be even in ``k``; only the half zone is sampled.
    """
    if not Lambda > 0:
        raise ValueError("Lambda must be > 0")
    n = spec.kz_nodes if nodes is None else int(nodes)
    ks, wts = gauss_legendre(n, 0.0, math.pi / Lambda)
    acc = 0.0
    for k, wt in zip(ks, wts):
        acc = acc + wt * np.asarray(f(float(k)), dtype=float)
    return acc / math.pi


def z_invariant_weight(w, n_invariant: int = 1, scene=None) -> float:
    """Weight turning an integrand at zero transverse wavevector into the
    integrand per unit length (area) along ``n_invariant`` invariant
    directions.

    Equals the area of the half sphere of radius ``w`` in ``n + 1``
    dimensions divided by ``(2 pi)^n``: ``w/2`` for one invariant
    direction, ``w^2/(2 pi)`` for two.  Only valid for perfect metals in
    vacuum; passing ``scene`` checks that.
    """
    if scene is not None:
        for b in scene.bodies:
            if not isinstance(b.material, PerfectMetal):
                raise ValueError(
                    f"body {b.id!r} is not a perfect metal; the invariant-direction weight needs "
                    "perfect metals in vacuum"
                )
    n = int(n_invariant)
    if n < 1:
        raise ValueError("n_invariant must be >= 1")
    area = math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)  # half of the unit n-sphere area
    return area * float(w) ** n / (2 * math.pi) ** n
