"""Model-agnostic machinery for Bayes factor functions.

A BFF maps each tested null value theta0 to the Bayes factor BF01 in
favour of H0: theta = theta0 against a fixed alternative.  Everything in
this module works on the natural-log scale; ratio-scale numbers appear
only in returned summaries.  Three consumers are served: curve
evaluation over grids, the maximum evidence estimate (the theta0 best
supported by the data, with its evidence level k_ME), and support sets
S_k = {theta0 : BF01(theta0) >= k} obtained by cutting the curve at k.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, DomainError, NumericalError

__all__ = [
    "DensityFn",
    "GridSpec",
    "BffModel",
    "BffCurve",
    "MeeResult",
    "Interval",
    "SupportSet",
    "evaluate_curve",
    "find_mee",
    "support_set",
    "support_region",
    "savage_dickey_bff",
    "relative_belief_ratio",
    "laplace_log_bff",
    "combine_sequential",
    "universal_bound_pvalue",
]

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class DensityFn:
    """A univariate density on the log scale with its support bounds.

    `local=True` marks densities that depend on the tested value (and are
    therefore unusable for Savage-Dickey); `proper=False` marks
    non-normalizable ones.
    """

    log_density: Callable
    lower: float
    upper: float
    descriptor: str
    proper: bool = True
    local: bool = False

    def __post_init__(self):
        if not self.descriptor:
            raise ContractError("DensityFn requires a non-empty descriptor")
        if not self.lower < self.upper:
            raise ContractError(
                f"DensityFn support must have lower < upper, got "
                f"[{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned evaluation grid; one (lower, upper, points) per dimension."""

    lower: tuple
    upper: tuple
    points: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.points)):
            raise ContractError("GridSpec fields must have matching lengths")
        if len(self.lower) not in (1, 2):
            raise ContractError("GridSpec supports 1 or 2 dimensions")
        for lo, hi, n in zip(self.lower, self.upper, self.points):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ContractError(f"grid bounds must be finite with lo < hi, got [{lo}, {hi}]")
            if n < 3:
                raise ContractError(f"grids need at least 3 points per dimension, got {n}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def axes(self):
        return tuple(
            np.linspace(lo, hi, n)
            for lo, hi, n in zip(self.lower, self.upper, self.points)
        )

    @classmethod
    def one_dim(cls, lower: float, upper: float, points: int = 512) -> "GridSpec":
        return cls((lower,), (upper,), (points,))

    @classmethod
    def two_dim(cls, lower, upper, points=(101, 101)) -> "GridSpec":
        return cls(tuple(lower), tuple(upper), tuple(points))


@dataclass(frozen=True)
class BffModel:
    """log BF01 as a function of the tested value, plus domain metadata.

    For dim 1 `log_bff` must accept a float or a 1-D array; for dim 2 it
    takes a length-2 point.  `lower_closed`/`upper_closed` mark finite
    domain endpoints that belong to the parameter space (a maximum there
    is a genuine MEE, not a truncation artifact).
    """

    log_bff: Callable
    lower: tuple
    upper: tuple
    descriptor: str
    dim: int = 1
    lower_closed: tuple = None
    upper_closed: tuple = None

    def __post_init__(self):
        if not self.descriptor:
            raise ContractError("BffModel requires a non-empty descriptor")
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise ContractError("BffModel bounds must match its dimension")
        if self.lower_closed is None:
            object.__setattr__(
                self, "lower_closed", tuple(math.isfinite(b) for b in self.lower)
            )
        if self.upper_closed is None:
            object.__setattr__(
                self, "upper_closed", tuple(math.isfinite(b) for b in self.upper)
            )


@dataclass(frozen=True)
class BffCurve:
    """Grid evaluation of a BFF: one axis per dimension, log BF01 values."""

    axes: tuple
    log_bf: np.ndarray
    descriptor: str
    warnings: tuple = ()

    def rows(self):
        """Yield (point, log_bf) pairs in row-major order."""
        if len(self.axes) == 1:
            for x, v in zip(self.axes[0], self.log_bf):
                yield (float(x),), float(v)
        else:
            for i, x in enumerate(self.axes[0]):
                for j, y in enumerate(self.axes[1]):
                    yield (float(x), float(y)), float(self.log_bf[i, j])


@dataclass(frozen=True)
class MeeResult:
    """Maximum evidence estimate.  exists=False means the BFF has no
    interior maximum (it still climbs at a search boundary); theta_hat
    and the evidence level are then absent."""

    exists: bool
    theta_hat: Optional[tuple]
    k_me: Optional[float]
    log_k_me: Optional[float]
    boundary: bool = False
    diagnostic: Optional[str] = None


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    lower_unbounded: bool = False
    upper_unbounded: bool = False


@dataclass(frozen=True)
class SupportSet:
    """The set {theta0 : BF01 >= k} within a search grid, as intervals."""

    k: float
    intervals: tuple
    warnings: tuple = ()

    @property
    def empty(self) -> bool:
        return len(self.intervals) == 0


def _eval_many(model: BffModel, xs: np.ndarray) -> np.ndarray:
    """Evaluate a 1-D model on an array, tolerating scalar-only callables."""
    try:
        out = np.asarray(model.log_bff(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(model.log_bff(float(x))) for x in xs])


def _eval_point(model: BffModel, point) -> float:
    if model.dim == 1:
        return float(model.log_bff(float(point[0])))
    return float(model.log_bff(np.asarray(point, dtype=float)))


def evaluate_curve(model: BffModel, grid: GridSpec, threads: int = 0) -> BffCurve:
    """Evaluate log BF01 over a grid.

    NaN values (a model reporting a truncated curve) are kept and flagged
    with a warning; numerical failures are re-raised with the offending
    grid point attached.  Results do not depend on evaluation order or on
    the number of worker threads.
    """
    if grid.dim != model.dim:
        raise ContractError(
            f"grid dimension {grid.dim} does not match model dimension {model.dim}"
        )
    axes = grid.axes()
    if model.dim == 1:
        xs = axes[0]
        if threads and threads > 1:
            chunks = np.array_split(xs, threads * 4)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda c: _eval_curve_chunk(model, c), chunks))
            values = np.concatenate(parts)
        else:
            values = _eval_curve_chunk(model, xs)
    else:
        t_ax, u_ax = axes
        values = np.empty((len(t_ax), len(u_ax)))
        points = [
            (i, j, (float(t), float(u)))
            for i, t in enumerate(t_ax)
            for j, u in enumerate(u_ax)
        ]

        def run(chunk):
            out = []
            for i, j, pt in chunk:
                out.append((i, j, _eval_guarded(model, pt)))
            return out

        if threads and threads > 1:
            split = [points[s::threads] for s in range(threads)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = [r for part in pool.map(run, split) for r in part]
        else:
            results = run(points)
        for i, j, v in results:
            values[i, j] = v
    warnings = ()
    if np.any(np.isnan(values)):
        warnings = ("truncated-curve: log BF01 undefined on part of the grid",)
    return BffCurve(axes=axes, log_bf=values, descriptor=model.descriptor, warnings=warnings)


def _eval_curve_chunk(model: BffModel, xs: np.ndarray) -> np.ndarray:
    try:
        return _eval_many(model, xs)
    except NumericalError:
        # redo pointwise so the failure names the grid point
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            out[i] = _eval_guarded(model, (float(x),))
        return out


def _eval_guarded(model: BffModel, point) -> float:
    try:
        return _eval_point(model, point)
    except NumericalError as exc:
        label = point[0] if model.dim == 1 else tuple(point)
        raise NumericalError(f"{exc} (at grid point {label})") from exc


def _is_local_max(vals: np.ndarray, i: int) -> bool:
    left = vals[i - 1] if i > 0 else -np.inf
    right = vals[i + 1] if i < len(vals) - 1 else -np.inf
    return np.isfinite(vals[i]) and vals[i] >= left and vals[i] >= right


def _golden_max(f, a: float, b: float, tol: float):
    """Golden-section maximization on [a, b]; returns (x, f(x))."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    if f1 >= f2:
        return x1, f1
    return x2, f2


def find_mee(model: BffModel, grid: GridSpec) -> MeeResult:
    """Locate the maximum evidence estimate by grid scan plus refinement.

    1-D refinement is golden-section to 1e-8 of the grid range; 2-D adds
    a Nelder-Mead polish.  A maximizer pushed against a search boundary
    with the curve still climbing outward means the MEE does not exist in
    the searched region (unless that boundary is a closed endpoint of the
    model's own domain, where a boundary maximum is genuine).
    """
    curve = evaluate_curve(model, grid)
    if model.dim == 1:
        return _find_mee_1d(model, grid, curve)
    return _find_mee_2d(model, grid, curve)


def _boundary_is_artificial(model: BffModel, dim_idx: int, side: str, edge: float) -> bool:
    """True when `edge` truncates the domain rather than bounding it."""
    if side == "lower":
        domain_edge = model.lower[dim_idx]
        closed = model.lower_closed[dim_idx]
    else:
        domain_edge = model.upper[dim_idx]
        closed = model.upper_closed[dim_idx]
    if closed and math.isfinite(domain_edge) and math.isclose(edge, domain_edge, rel_tol=0.0, abs_tol=1e-12 * (1.0 + abs(domain_edge))):
        return False
    return True


def _find_mee_1d(model: BffModel, grid: GridSpec, curve: BffCurve) -> MeeResult:
    xs = curve.axes[0]
    vals = curve.log_bf
    finite = np.isfinite(vals)
    if not finite.any():
        raise NumericalError("log BF01 is not finite anywhere on the search grid")
    masked = np.where(finite, vals, -np.inf)
    n = len(xs)
    step = xs[1] - xs[0]
    tol = 1e-8 * (grid.upper[0] - grid.lower[0])
    f = lambda x: _eval_guarded(model, (x,))

    # refine every grid-local maximum; the global one wins
    candidates = [i for i in range(n) if _is_local_max(masked, i)]
    i_star = int(np.argmax(masked))
    if i_star not in candidates:
        candidates.append(i_star)
    x_hat, f_hat = float(xs[i_star]), float(masked[i_star])
    for i in candidates:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, n - 1)]
        x_ref, f_ref = _golden_max(f, float(lo), float(hi), tol)
        if f_ref > f_hat:
            x_hat, f_hat = x_ref, f_ref

    for side, edge in (("lower", float(xs[0])), ("upper", float(xs[-1]))):
        near = abs(x_hat - edge) <= step
        if not near:
            continue
        h = max(tol, 1e-7 * (grid.upper[0] - grid.lower[0]))
        inward = edge + h if side == "lower" else edge - h
        climbing = f(edge) > f(inward)
        if climbing and _boundary_is_artificial(model, 0, side, edge):
            return MeeResult(
                exists=False,
                theta_hat=None,
                k_me=None,
                log_k_me=None,
                boundary=True,
                diagnostic=(
                    f"log BF01 is still increasing at the {side} search boundary "
                    f"{edge:g}; no maximum evidence estimate in the searched region"
                ),
            )
    return MeeResult(
        exists=True,
        theta_hat=(float(x_hat),),
        k_me=float(np.exp(f_hat)),
        log_k_me=float(f_hat),
        boundary=False,
    )


def _find_mee_2d(model: BffModel, grid: GridSpec, curve: BffCurve) -> MeeResult:
    from scipy import optimize

    t_ax, u_ax = curve.axes
    vals = curve.log_bf
    finite = np.isfinite(vals)
    if not finite.any():
        raise NumericalError("log BF01 is not finite anywhere on the search grid")
    masked = np.where(finite, vals, -np.inf)
    i, j = np.unravel_index(int(np.argmax(masked)), vals.shape)
    x0 = np.array([t_ax[i], u_ax[j]])
    lo = np.array(grid.lower)
    hi = np.array(grid.upper)

    def neg(p):
        q = np.clip(p, lo, hi)
        return -_eval_guarded(model, q)

    res = optimize.minimize(
        neg, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000}
    )
    p_hat = np.clip(res.x, lo, hi)
    f_hat = -neg(p_hat)
    if vals[i, j] > f_hat:
        p_hat = x0
        f_hat = float(vals[i, j])

    steps = (t_ax[1] - t_ax[0], u_ax[1] - u_ax[0])
    for d in range(2):
        for side, edge in (("lower", grid.lower[d]), ("upper", grid.upper[d])):
            if abs(p_hat[d] - edge) > steps[d]:
                continue
            h = max(1e-8 * (grid.upper[d] - grid.lower[d]), 1e-12)
            at_edge = p_hat.copy()
            at_edge[d] = edge
            inward = at_edge.copy()
            inward[d] = edge + h if side == "lower" else edge - h
            climbing = _eval_guarded(model, at_edge) > _eval_guarded(model, inward)
            if climbing and _boundary_is_artificial(model, d, side, edge):
                return MeeResult(
                    exists=False,
                    theta_hat=None,
                    k_me=None,
                    log_k_me=None,
                    boundary=True,
                    diagnostic=(
                        f"log BF01 is still increasing at the {side} search boundary "
                        f"of dimension {d} ({edge:g}); no maximum evidence estimate "
                        f"in the searched region"
                    ),
                )
    return MeeResult(
        exists=True,
        theta_hat=tuple(float(v) for v in p_hat),
        k_me=float(np.exp(f_hat)),
        log_k_me=float(f_hat),
        boundary=False,
    )


def _bisect_crossing(f, lo: float, hi: float, f_lo: float, f_hi: float, tol: float) -> float:
    """Bisection for a sign change of f on [lo, hi]."""
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0.0) != (f_mid < 0.0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def support_set(model: BffModel, k: float, grid: GridSpec) -> SupportSet:
    """Cut a 1-D BFF at level k: the set {theta0 : BF01(theta0) >= k}.

    Crossings are bracketed on the grid and bisected to 1e-10 of the grid
    range.  The set may be empty, and it may run into a search boundary,
    which is flagged (the region can continue past the grid) unless that
    boundary is a closed domain endpoint.
    """
    if model.dim != 1:
        raise ContractError("support_set handles 1-D models; use support_region for 2-D")
    if not (k > 0.0 and math.isfinite(k)):
        raise DomainError(f"support level k must be positive and finite, got {k!r}")
    curve = evaluate_curve(model, grid)
    xs = curve.axes[0]
    target = math.log(k)
    vals = curve.log_bf - target
    vals = np.where(np.isnan(vals), -np.inf, vals)
    above = vals >= 0.0
    if not above.any():
        return SupportSet(k=k, intervals=(), warnings=())

    f = lambda x: _eval_guarded(model, (x,)) - target
    tol = 1e-10 * (grid.upper[0] - grid.lower[0])
    edges = []
    for i in range(len(xs) - 1):
        if above[i] != above[i + 1]:
            edges.append(
                _bisect_crossing(
                    f, float(xs[i]), float(xs[i + 1]), float(vals[i]), float(vals[i + 1]), tol
                )
            )

    intervals = []
    warnings = []
    idx = 0
    if above[0]:
        start = float(xs[0])
        start_unbounded = _boundary_is_artificial(model, 0, "lower", start)
        if start_unbounded:
            warnings.append(
                f"unbounded-si-edge: support set at k={k:g} reaches the lower "
                f"search boundary {start:g} and may continue past it"
            )
    else:
        start = None
        start_unbounded = False
    for x in edges:
        if start is None:
            start, start_unbounded = x, False
        else:
            intervals.append(Interval(start, x, lower_unbounded=start_unbounded))
            start, start_unbounded = None, False
        idx += 1
    if start is not None:
        end = float(xs[-1])
        end_unbounded = _boundary_is_artificial(model, 0, "upper", end)
        if end_unbounded:
            warnings.append(
                f"unbounded-si-edge: support set at k={k:g} reaches the upper "
                f"search boundary {end:g} and may continue past it"
            )
        intervals.append(
            Interval(start, end, lower_unbounded=start_unbounded, upper_unbounded=end_unbounded)
        )
    return SupportSet(k=k, intervals=tuple(intervals), warnings=tuple(warnings))


def support_region(model: BffModel, k: float, grid: GridSpec):
    """2-D analogue of support_set: membership mask plus contour segments.

    Returns (mask, segments): mask[i, j] says whether grid point (i, j)
    lies in the region, and segments is a list of ((x1, y1), (x2, y2))
    marching-squares pieces of the BF01 = k contour.
    """
    if model.dim != 2:
        raise ContractError("support_region handles 2-D models")
    if not (k > 0.0 and math.isfinite(k)):
        raise DomainError(f"support level k must be positive and finite, got {k!r}")
    curve = evaluate_curve(model, grid)
    t_ax, u_ax = curve.axes
    g = curve.log_bf - math.log(k)
    g = np.where(np.isnan(g), -np.inf, g)
    mask = g >= 0.0

    def interp(x1, x2, v1, v2):
        if v1 == v2:
            return 0.5 * (x1 + x2)
        w = v1 / (v1 - v2)
        return x1 + w * (x2 - x1)

    segments = []
    for i in range(len(t_ax) - 1):
        for j in range(len(u_ax) - 1):
            corners = (g[i, j], g[i + 1, j], g[i + 1, j + 1], g[i, j + 1])
            if not all(np.isfinite(c) or c == -np.inf for c in corners):
                continue
            signs = [c >= 0.0 for c in corners]
            if all(signs) or not any(signs):
                continue
            x_lo, x_hi = t_ax[i], t_ax[i + 1]
            y_lo, y_hi = u_ax[j], u_ax[j + 1]
            pts = []
            # edge (i,j)-(i+1,j)
            if signs[0] != signs[1] and np.isfinite(corners[0]) and np.isfinite(corners[1]):
                pts.append((interp(x_lo, x_hi, corners[0], corners[1]), y_lo))
            # edge (i+1,j)-(i+1,j+1)
            if signs[1] != signs[2] and np.isfinite(corners[1]) and np.isfinite(corners[2]):
                pts.append((x_hi, interp(y_lo, y_hi, corners[1], corners[2])))
            # edge (i,j+1)-(i+1,j+1)
            if signs[3] != signs[2] and np.isfinite(corners[3]) and np.isfinite(corners[2]):
                pts.append((interp(x_lo, x_hi, corners[3], corners[2]), y_hi))
            # edge (i,j)-(i,j+1)
            if signs[0] != signs[3] and np.isfinite(corners[0]) and np.isfinite(corners[3]):
                pts.append((x_lo, interp(y_lo, y_hi, corners[0], corners[3])))
            if len(pts) >= 2:
                segments.append((pts[0], pts[1]))
            if len(pts) == 4:
                segments.append((pts[2], pts[3]))
    return mask, segments


def savage_dickey_bff(posterior: DensityFn, prior: DensityFn) -> BffModel:
    """BF01(theta0) as the posterior-to-prior density ratio at theta0.

    Valid only for a proper prior that does not move with the tested
    value; construction is refused otherwise.  Evaluation where the prior
    density vanishes is a numerical error; where the posterior density is
    unknown (e.g. beyond an MCMC sample range) the curve reports NaN
    rather than a fabricated value.
    """
    if prior.local:
        raise ContractError(
            "Savage-Dickey requires a prior that is independent of the tested "
            f"value; got local prior {prior.descriptor!r}"
        )
    if not prior.proper:
        raise ContractError(
            f"Savage-Dickey requires a proper prior; got {prior.descriptor!r}"
        )

    lo = max(posterior.lower, prior.lower)
    hi = min(posterior.upper, prior.upper)

    def log_bff(theta):
        arr = np.asarray(theta, dtype=float)
        scalar = arr.ndim == 0
        pts = np.atleast_1d(arr)
        lp_prior = np.atleast_1d(np.asarray(prior.log_density(pts), dtype=float))
        bad = np.isneginf(lp_prior)
        if bad.any():
            where = pts[bad][0]
            raise NumericalError(
                f"prior density is zero at theta0={where:g}; the density ratio "
                f"is undefined there"
            )
        lp_post = np.atleast_1d(np.asarray(posterior.log_density(pts), dtype=float))
        out = lp_post - lp_prior
        return float(out[0]) if scalar else out

    return BffModel(
        log_bff=log_bff,
        lower=(lo,),
        upper=(hi,),
        descriptor=f"savage-dickey[{posterior.descriptor} / {prior.descriptor}]",
        dim=1,
    )


def relative_belief_ratio(posterior: DensityFn, prior: DensityFn, theta0: float) -> float:
    """Ratio-scale posterior/prior density ratio at one point."""
    model = savage_dickey_bff(posterior, prior)
    return float(np.exp(model.log_bff(theta0)))


def _fd_hessian(f, x: np.ndarray) -> np.ndarray:
    """Central finite-difference Hessian with per-coordinate steps."""
    d = len(x)
    h = np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.abs(x))
    hess = np.empty((d, d))
    f0 = f(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def _maximize(f, starts) -> tuple:
    from scipy import optimize

    best_x, best_v = None, -math.inf
    for s in starts:
        res = optimize.minimize(
            lambda v: -f(v), np.asarray(s, dtype=float), method="BFGS",
            options={"gtol": 1e-10, "maxiter": 500},
        )
        if -res.fun > best_v:
            best_x, best_v = res.x, -res.fun
    if best_x is None or not math.isfinite(best_v):
        raise NumericalError("maximization failed for all starts")
    return np.atleast_1d(best_x), best_v


def _log_det_dispersion(f, x: np.ndarray, n: int, label: str) -> float:
    """log det of n * (inverse negative Hessian) at a maximizer."""
    if len(x) == 0:
        return 0.0
    neg_hess = -_fd_hessian(f, x)
    eigs = np.linalg.eigvalsh(neg_hess)
    if np.any(eigs <= 0.0):
        raise NumericalError(
            f"negative log-likelihood Hessian for {label} is not positive "
            f"definite at its maximizer (eigenvalues {eigs})"
        )
    sign, logdet = np.linalg.slogdet(neg_hess)
    # V = n * inv(-H): log|V| = d*log(n) - log|-H|
    return len(x) * math.log(n) - logdet


def laplace_log_bff(
    loglik0,
    loglik1,
    log_prior0,
    log_prior1,
    dim_theta: int,
    dim_psi: int,
    n: int,
    *,
    psi_start=None,
    theta_psi_start=None,
    n_restarts: int = 3,
    seed: int = 0,
) -> float:
    """Laplace approximation of log BF01 at a point null with nuisances.

    loglik0(psi) and loglik1(theta_psi) are full-data log likelihoods
    under H0 and H1; the priors are the corresponding log densities.  The
    value is the sum of four terms: the log likelihood-ratio at the two
    maximizers, (dim_theta/2)*log(n/2pi), the log prior ratio at the
    maximizers, and half the log ratio of the per-observation dispersion
    determinants |V0|/|V1| with V = n * (inverse negative Hessian).
    Maximization is quasi-Newton with seeded multi-start.
    """
    if dim_theta < 1:
        raise DomainError(f"dim_theta must be >= 1, got {dim_theta}")
    if dim_psi < 0:
        raise DomainError(f"dim_psi must be >= 0, got {dim_psi}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)

    def starts_around(x0, dim):
        base = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
        yield base
        for _ in range(n_restarts):
            yield base + rng.normal(scale=0.5 * (1.0 + np.abs(base)))

    if dim_psi > 0:
        psi_hat, ll0_max = _maximize(loglik0, starts_around(psi_start, dim_psi))
        lp0 = float(log_prior0(psi_hat))
        log_det_v0 = _log_det_dispersion(loglik0, psi_hat, n, "H0")
    else:
        psi_hat = np.zeros(0)
        ll0_max = float(loglik0(psi_hat))
        lp0 = 0.0 if log_prior0 is None else float(log_prior0(psi_hat))
        log_det_v0 = 0.0

    full_hat, ll1_max = _maximize(
        loglik1, starts_around(theta_psi_start, dim_theta + dim_psi)
    )
    lp1 = float(log_prior1(full_hat))
    log_det_v1 = _log_det_dispersion(loglik1, full_hat, n, "H1")

    return (
        (ll0_max - ll1_max)
        + 0.5 * dim_theta * math.log(n / (2.0 * math.pi))
        + (lp0 - lp1)
        + 0.5 * (log_det_v0 - log_det_v1)
    )


def combine_sequential(log_bf_first: float, log_bf_partial: float) -> float:
    """Combine a log Bayes factor with a partial one for a later batch.

    The partial factor uses the posterior after the first batch as its
    prior, so evidence accumulates by addition on the log scale.  Fold
    repeatedly for more than two batches.
    """
    for name, v in (("log_bf_first", log_bf_first), ("log_bf_partial", log_bf_partial)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    return float(log_bf_first) + float(log_bf_partial)


def universal_bound_pvalue(bf01: float) -> float:
    """Conservative p-value min(BF01, 1); Pr(BF01 <= k | H0) <= k."""
    if not bf01 > 0.0 or math.isnan(bf01):
        raise DomainError(f"BF01 must be positive, got {bf01!r}")
    return min(float(bf01), 1.0)
