"""Random-effects meta-analysis BFFs.

Study estimates y_i are modeled as N(theta, sigma_i^2 + tau^2) given the
common effect theta and the heterogeneity standard deviation tau.  The
joint BFF tests H0: theta = theta0, tau = tau0; each marginal BFF tests
one parameter with the other integrated out over its prior.  All three
share a single H1 marginal likelihood, computed once by nested adaptive
quadrature in log space and cached.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .binomial import TruncBetaPrior
from .engine import BffModel
from .errors import DomainError
from .normal import GlobalNormalPrior
from .quadrature import log_integrate
from .specfun import half_normal_log_density

__all__ = [
    "MetaDataset",
    "MetaPriors",
    "read_meta_csv",
    "meta_loglik",
    "meta_log_denominator",
    "meta_log_denominator_mc",
    "meta_joint_bff",
    "meta_marginal_theta_bff",
    "meta_marginal_tau_bff",
]


@dataclass(frozen=True)
class MetaDataset:
    ids: tuple
    estimates: np.ndarray
    std_errors: np.ndarray

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=float)
        se = np.asarray(self.std_errors, dtype=float)
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "std_errors", se)
        if est.ndim != 1 or se.shape != est.shape or len(self.ids) != len(est):
            raise DomainError("ids, estimates and std_errors must have equal lengths")
        if len(est) < 2:
            raise DomainError("need at least 2 studies")
        if not np.all(np.isfinite(est)):
            raise DomainError("estimates must be finite")
        if not np.all(np.isfinite(se) & (se > 0.0)):
            raise DomainError("standard errors must be positive and finite")

    def __len__(self) -> int:
        return len(self.estimates)


def read_meta_csv(path) -> MetaDataset:
    """Read a study table with header `id,estimate,se` (UTF-8, comma
    separated, dot decimal)."""
    ids, est, se = [], [], []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "estimate", "se"]:
            raise DomainError(
                f"{path}: expected header 'id,estimate,se', got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DomainError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            ids.append(row[0].strip())
            try:
                est.append(float(row[1]))
                se.append(float(row[2]))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: non-numeric value ({exc})") from None
    return MetaDataset(tuple(ids), np.array(est), np.array(se))


@dataclass(frozen=True)
class MetaPriors:
    """Independent priors: theta_prior on the common effect (truncated
    beta or global normal) and a half-normal(tau_scale) on tau."""

    theta_prior: Union[TruncBetaPrior, GlobalNormalPrior]
    tau_scale: float = 0.02

    def __post_init__(self):
        if not (self.tau_scale > 0.0 and math.isfinite(self.tau_scale)):
            raise DomainError(f"tau_scale must be positive and finite, got {self.tau_scale!r}")
        if not isinstance(self.theta_prior, (TruncBetaPrior, GlobalNormalPrior)):
            raise DomainError(
                f"unsupported theta prior type {type(self.theta_prior).__name__}"
            )

    def theta_support(self):
        """Interval carrying the theta prior's mass, used as the inner
        integration range."""
        p = self.theta_prior
        if isinstance(p, TruncBetaPrior):
            return p.l, p.u
        half = 10.0 * math.sqrt(p.v)
        return p.m - half, p.m + half

    def theta_log_density(self, theta):
        p = self.theta_prior
        if isinstance(p, TruncBetaPrior):
            return p.log_density(theta)
        from .specfun import normal_log_density

        return normal_log_density(theta, p.m, p.v)

    @property
    def tau_upper(self) -> float:
        # half-normal mass beyond 10 scales is ~1e-23
        return 10.0 * self.tau_scale

    def describe(self) -> str:
        return f"{self.theta_prior.describe()} x half-normal(s={self.tau_scale:g})"


def meta_loglik(data: MetaDataset, theta, tau):
    """Joint log likelihood Sum_i ln N(y_i; theta, sigma_i^2 + tau^2).

    theta and tau broadcast: scalars give a scalar, equal-length arrays
    give the elementwise log likelihood.
    """
    th = np.asarray(theta, dtype=float)
    ta = np.asarray(tau, dtype=float)
    if np.any(ta < 0.0):
        raise DomainError("tau must be nonnegative")
    scalar = th.ndim == 0 and ta.ndim == 0
    th, ta = np.atleast_1d(th), np.atleast_1d(ta)
    var = data.std_errors[:, None] ** 2 + ta[None, :] ** 2
    dev = data.estimates[:, None] - th[None, :]
    ll = np.sum(-0.5 * np.log(2.0 * math.pi * var) - dev**2 / (2.0 * var), axis=0)
    return float(ll[0]) if scalar else ll


def meta_log_denominator(
    data: MetaDataset, priors: MetaPriors, *, tol_rel: float = 1e-8
) -> float:
    """H1 log marginal likelihood, ln Int Int exp(loglik) p(theta) p(tau).

    Nested adaptive quadrature in log space: theta inside over the
    prior's support, tau outside over [0, 10 tau_scale].  The log-space
    carrier keeps 1e5-scale log likelihoods representable.
    """
    lo, hi = priors.theta_support()

    def log_inner(tau_val: float) -> float:
        def f(th):
            return meta_loglik(data, th, np.full_like(np.asarray(th, float), tau_val)) \
                + priors.theta_log_density(th)

        return log_integrate(f, lo, hi, tol_rel=tol_rel)

    def outer(taus):
        ts = np.atleast_1d(np.asarray(taus, dtype=float))
        vals = np.array([log_inner(float(t)) for t in ts])
        return vals + half_normal_log_density(ts, priors.tau_scale)

    return log_integrate(outer, 0.0, priors.tau_upper, tol_rel=tol_rel, scan_points=65)


def meta_log_denominator_mc(
    data: MetaDataset,
    priors: MetaPriors,
    n_draws: int = 1_000_000,
    seed: int = 1,
    batch: int = 100_000,
):
    """Plain Monte Carlo estimate of the H1 log marginal likelihood.

    Draws (theta, tau) from the priors and averages the likelihood.
    Returns (log_estimate, se_log) where se_log is the delta-method
    standard error of the log estimate.  Used as an independent check of
    meta_log_denominator; prior sampling is deliberately naive.
    """
    if n_draws < 2:
        raise DomainError("n_draws must be at least 2")
    rng = np.random.default_rng(seed)
    p = priors.theta_prior
    lls = np.empty(n_draws)
    done = 0
    while done < n_draws:
        m = min(batch, n_draws - done)
        if isinstance(p, TruncBetaPrior):
            from scipy.special import betainc, betaincinv

            lo_q = betainc(p.a, p.b, p.l)
            hi_q = betainc(p.a, p.b, p.u)
            u = rng.uniform(lo_q, hi_q, size=m)
            thetas = betaincinv(p.a, p.b, u)
        else:
            thetas = rng.normal(p.m, math.sqrt(p.v), size=m)
        taus = np.abs(rng.normal(0.0, priors.tau_scale, size=m))
        lls[done : done + m] = meta_loglik(data, thetas, taus)
        done += m
    shift = float(np.max(lls))
    w = np.exp(lls - shift)
    mean_w = float(np.mean(w))
    se_log = float(np.std(w, ddof=1) / (math.sqrt(n_draws) * mean_w))
    return shift + math.log(mean_w), se_log


def meta_joint_bff(
    data: MetaDataset, priors: MetaPriors, log_denominator: Optional[float] = None
) -> BffModel:
    """2-D BFF testing H0: theta = theta0, tau = tau0.

    Pass a precomputed log_denominator to share it across the joint and
    marginal models; it is computed (once) otherwise.
    """
    log_denom = meta_log_denominator(data, priors) if log_denominator is None else log_denominator

    def log_bff(point):
        theta0, tau0 = float(point[0]), float(point[1])
        if tau0 < 0.0:
            raise DomainError(f"tau0 must be nonnegative, got {tau0!r}")
        return meta_loglik(data, theta0, tau0) - log_denom

    return BffModel(
        log_bff=log_bff,
        lower=(-math.inf, 0.0),
        upper=(math.inf, math.inf),
        descriptor=f"meta-joint[{len(data)} studies] + {priors.describe()}",
        dim=2,
        lower_closed=(False, True),
        upper_closed=(False, False),
    )


def meta_marginal_theta_bff(
    data: MetaDataset, priors: MetaPriors, log_denominator: Optional[float] = None
) -> BffModel:
    """1-D BFF for theta with tau integrated over its half-normal prior."""
    log_denom = meta_log_denominator(data, priors) if log_denominator is None else log_denominator
    s = priors.tau_scale

    def log_numerator(theta0: float) -> float:
        def f(taus):
            ts = np.atleast_1d(np.asarray(taus, dtype=float))
            return meta_loglik(
                data, np.full_like(ts, theta0), ts
            ) + half_normal_log_density(ts, s)

        return log_integrate(f, 0.0, priors.tau_upper, scan_points=129)

    def log_bff(theta0):
        arr = np.asarray(theta0, dtype=float)
        if arr.ndim == 0:
            return log_numerator(float(arr)) - log_denom
        return np.array([log_numerator(float(t)) for t in arr]) - log_denom

    return BffModel(
        log_bff=log_bff,
        lower=(-math.inf,),
        upper=(math.inf,),
        descriptor=f"meta-theta[{len(data)} studies] + {priors.describe()}",
        dim=1,
    )


def meta_marginal_tau_bff(
    data: MetaDataset, priors: MetaPriors, log_denominator: Optional[float] = None
) -> BffModel:
    """1-D BFF for tau with theta integrated over its prior."""
    log_denom = meta_log_denominator(data, priors) if log_denominator is None else log_denominator
    lo, hi = priors.theta_support()

    def log_numerator(tau0: float) -> float:
        if tau0 < 0.0:
            raise DomainError(f"tau0 must be nonnegative, got {tau0!r}")

        def f(ths):
            ts = np.atleast_1d(np.asarray(ths, dtype=float))
            return meta_loglik(data, ts, np.full_like(ts, tau0)) \
                + priors.theta_log_density(ts)

        return log_integrate(f, lo, hi, scan_points=129)

    def log_bff(tau0):
        arr = np.asarray(tau0, dtype=float)
        if arr.ndim == 0:
            return log_numerator(float(arr)) - log_denom
        return np.array([log_numerator(float(t)) for t in arr]) - log_denom

    return BffModel(
        log_bff=log_bff,
        lower=(0.0,),
        upper=(math.inf,),
        descriptor=f"meta-tau[{len(data)} studies] + {priors.describe()}",
        dim=1,
        lower_closed=(True,),
        upper_closed=(False,),
    )
