"""Adaptive Gauss-Kronrod quadrature with a log-space front end.

The integrators here serve the marginal-likelihood denominators, whose
integrands span thousands of log units.  `log_integrate` shifts by the
scanned maximum of the log integrand before exponentiating, so the
adaptive rule only ever sees numbers of order one.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import DomainError, NumericalError

__all__ = ["integrate", "log_integrate"]

# Kronrod-15 nodes on [-1, 1] (positive half) and weights; the embedded
# Gauss-7 rule uses every second node.
_XK = np.array(
    [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ]
)
_WK = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ]
)
_WG = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ]
)

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])  # 15 ascending nodes
_WEIGHTS_K = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS_IDX = np.arange(1, 15, 2)
_WEIGHTS_G = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a: float, b: float):
    """One Gauss-Kronrod 7-15 panel; returns (kronrod, error_estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fv = np.asarray(f(mid + half * _NODES), dtype=float)
    if fv.shape != (15,):
        raise NumericalError("integrand must map a vector of nodes to a vector")
    if not np.all(np.isfinite(fv)):
        raise NumericalError(f"integrand returned non-finite values on [{a}, {b}]")
    k15 = half * float(_WEIGHTS_K @ fv)
    g7 = half * float(_WEIGHTS_G @ fv[_GAUSS_IDX])
    diff = abs(k15 - g7)
    err = min(diff, (200.0 * diff) ** 1.5)
    return k15, err


def integrate(
    f,
    a: float,
    b: float,
    *,
    tol_abs: float = 1e-12,
    tol_rel: float = 1e-10,
    max_intervals: int = 5000,
    breakpoints=(),
):
    """Adaptive integral of a vectorized callable on [a, b].

    Splits the interval with the worst error estimate until the summed
    estimate meets max(tol_abs, tol_rel * |integral|).  Returns
    (value, error_estimate); raises NumericalError if the interval budget
    is exhausted first.

    Subdivision is driven by sampled values, so structure narrower than
    the initial node spacing can be missed entirely; callers that know
    where a sharp feature lives must pass interior `breakpoints` so the
    initial cells resolve it (log_integrate does this for its peak).
    """
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError(f"integration interval must be finite with a < b, got [{a}, {b}]")
    edges = [a]
    for p in sorted(breakpoints):
        if edges[-1] < p < b:
            edges.append(p)
    edges.append(b)
    if len(edges) == 2:
        # no caller-supplied structure: a mild uniform split gives the
        # error estimator something to compare before declaring victory
        edges = list(np.linspace(a, b, 5))
    heap = []
    total_val = 0.0
    total_err = 0.0
    for lo, hi in zip(edges, edges[1:]):
        val, err = _gk15(f, lo, hi)
        heap.append((-err, lo, hi, val, err))
        total_val += val
        total_err += err
    heapq.heapify(heap)
    for _ in range(max_intervals):
        if total_err <= max(tol_abs, tol_rel * abs(total_val)):
            return total_val, total_err
        neg_err, lo, hi, val, err = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval at floating-point resolution; accept its estimate
            heapq.heappush(heap, (0.0, lo, hi, val, 0.0))
            total_err -= err
            continue
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total_val += v1 + v2 - val
        total_err += e1 + e2 - err
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
    if total_err <= max(tol_abs, tol_rel * abs(total_val)):
        return total_val, total_err
    raise NumericalError(
        f"adaptive quadrature failed to converge on [{a}, {b}]: "
        f"error estimate {total_err:.3e} after {max_intervals} refinements"
    )


def log_integrate(
    log_f,
    a: float,
    b: float,
    *,
    tol_rel: float = 1e-9,
    scan_points: int = 257,
    max_intervals: int = 5000,
) -> float:
    """log of the integral of exp(log_f) over [a, b].

    A coarse scan locates the maximum of log_f, a golden-section pass
    sharpens it (BFF integrands can be orders of magnitude narrower than
    any fixed scan), and the integrand is then exponentiated relative to
    that shift, keeping it representable no matter how large or small the
    true integral is.  If evaluation still uncovers a higher peak, the
    shift is raised and the integration retried.  Returns -inf when the
    integrand is zero everywhere.
    """
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError(f"integration interval must be finite with a < b, got [{a}, {b}]")
    xs = np.linspace(a, b, scan_points)
    ls = np.asarray(log_f(xs), dtype=float)
    if ls.shape != xs.shape:
        raise NumericalError("log integrand must map a vector of points to a vector")
    if np.any(np.isnan(ls)):
        raise NumericalError("log integrand returned NaN during the scan")
    i_max = int(np.argmax(ls))
    shift = float(ls[i_max])
    if shift == -math.inf:
        return -math.inf
    x_hat = float(xs[i_max])
    rx, refined = _refine_max(
        log_f, float(xs[max(i_max - 1, 0)]), float(xs[min(i_max + 1, scan_points - 1)])
    )
    if refined > shift:
        shift = refined
        x_hat = rx

    # cells expand geometrically away from the peak so that a peak far
    # narrower than the scan spacing is still resolved by the first pass
    width = _drop_width(log_f, x_hat, shift, a, b)
    pts = []
    w = width
    while True:
        pts.extend((x_hat - w, x_hat + w))
        if x_hat - w <= a and x_hat + w >= b:
            break
        w *= 4.0
    breakpoints = tuple(p for p in pts if a < p < b)

    for _ in range(8):
        peak = [shift]

        def shifted(x):
            lv = np.asarray(log_f(x), dtype=float)
            if lv.size:
                m = float(np.max(lv))
                if m > peak[0]:
                    peak[0] = m
            with np.errstate(over="ignore"):
                return np.exp(np.minimum(lv - shift, 700.0))

        try:
            value, _ = integrate(
                shifted, a, b, tol_abs=0.0, tol_rel=tol_rel,
                max_intervals=max_intervals, breakpoints=breakpoints,
            )
        except NumericalError:
            if peak[0] > shift + 1e-9:
                shift = peak[0]
                continue
            raise
        if peak[0] > shift + 1.0:
            # the scan missed the true peak; rescale and redo
            shift = peak[0]
            continue
        if value <= 0.0:
            return -math.inf
        return shift + math.log(value)
    raise NumericalError(
        f"log-space integration on [{a}, {b}] could not stabilize its scaling shift"
    )


_INVPHI = 0.5 * (math.sqrt(5.0) - 1.0)


def _refine_max(log_f, lo: float, hi: float):
    """Golden-section sharpening of a bracketed maximum of log_f.

    Returns (argmax, max); falls back to -inf on non-finite values.
    """

    def f(x):
        return float(np.asarray(log_f(np.array([x])), dtype=float)[0])

    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    tol = 1e-13 * (1.0 + abs(lo) + abs(hi))
    for _ in range(200):
        if hi - lo <= tol:
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
    x_best, best = (x1, f1) if f1 >= f2 else (x2, f2)
    if not (math.isfinite(best) or best == -math.inf):
        return x_best, -math.inf
    return x_best, best


def _drop_width(log_f, x_hat, peak, a: float, b: float, drop: float = 4.0) -> float:
    """Smallest dyadic distance at which log_f falls `drop` below its peak.

    Used to size the integration cells around the maximum; a flat
    integrand simply reports the whole interval.
    """

    def f(x):
        return float(np.asarray(log_f(np.array([x])), dtype=float)[0])

    span = b - a
    w = span * 1e-14
    for _ in range(60):
        left_done = x_hat - w <= a or not f(x_hat - w) > peak - drop
        right_done = x_hat + w >= b or not f(x_hat + w) > peak - drop
        if left_done and right_done:
            return w
        w *= 2.0
        if w >= span:
            return span
    return span
