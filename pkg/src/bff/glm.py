"""Per-coefficient BFFs for logistic regression.

Three routes to the marginal posterior that the density-ratio BFF
needs: a Laplace (Gaussian) approximation around the MAP, kernel density
on random-walk Metropolis samples, and a univariate-normal shortcut that
treats the coefficient's MLE and standard error as a normal estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .engine import BffModel, DensityFn, savage_dickey_bff
from .errors import ContractError, DomainError, NumericalError
from .normal import GlobalNormalPrior, NormalSummary, global_prior_density, normal_bff

__all__ = [
    "GlmDataset",
    "GlmPrior",
    "MapFit",
    "read_glm_csv",
    "fit_map",
    "laplace_marginal_posterior",
    "metropolis_sample",
    "kde_density",
    "glm_coefficient_bff",
]

_SEPARATION_BOUND = 15.0


@dataclass(frozen=True)
class GlmDataset:
    """Design matrix with a leading all-ones intercept column, binary
    outcome vector, and per-column names."""

    design: np.ndarray
    outcome: np.ndarray
    names: tuple

    def __post_init__(self):
        x = np.asarray(self.design, dtype=float)
        y = np.asarray(self.outcome, dtype=float)
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "outcome", y)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DomainError("design must be 2-D with one outcome per row")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DomainError("outcome values must be 0 or 1")
        if not np.all(x[:, 0] == 1.0):
            raise DomainError("first design column must be the all-ones intercept")
        if len(self.names) != x.shape[1]:
            raise DomainError("names must match the design column count")
        _check_rank(x)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    def coefficient_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DomainError(
                f"unknown coefficient {name!r}; available: {', '.join(self.names)}"
            ) from None


def _check_rank(x: np.ndarray):
    # standardize covariate columns so the rank test is scale-free
    z = x.copy()
    for j in range(1, x.shape[1]):
        col = x[:, j]
        sd = col.std()
        if sd == 0.0:
            raise DomainError(f"design column {j} is constant")
        z[:, j] = (col - col.mean()) / sd
    if np.linalg.matrix_rank(z) < x.shape[1]:
        raise DomainError("design matrix is rank deficient after standardization")


def read_glm_csv(path) -> GlmDataset:
    """Read observations with a header row: an `outcome` column of 0/1
    plus numeric covariate columns.  The intercept is added implicitly."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DomainError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if "outcome" not in header:
            raise DomainError(f"{path}: no 'outcome' column in header {header!r}")
        y_idx = header.index("outcome")
        cov_names = [h for i, h in enumerate(header) if i != y_idx]
        rows = []
        ys = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DomainError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: non-numeric value ({exc})") from None
            ys.append(vals[y_idx])
            rows.append([v for i, v in enumerate(vals) if i != y_idx])
    if not rows:
        raise DomainError(f"{path}: no data rows")
    covs = np.asarray(rows, dtype=float)
    design = np.hstack([np.ones((len(rows), 1)), covs])
    return GlmDataset(design, np.asarray(ys), ("intercept", *cov_names))


@dataclass(frozen=True)
class GlmPrior:
    """Independent N(0, coef_variance) on every non-intercept coefficient;
    the intercept is flat unless intercept_variance is given."""

    coef_variance: float = 0.5
    intercept_variance: Optional[float] = None

    def __post_init__(self):
        if not (self.coef_variance > 0.0 and math.isfinite(self.coef_variance)):
            raise DomainError(
                f"coef_variance must be positive and finite, got {self.coef_variance!r}"
            )
        if self.intercept_variance is not None and not (
            self.intercept_variance > 0.0 and math.isfinite(self.intercept_variance)
        ):
            raise DomainError(
                f"intercept_variance must be positive, got {self.intercept_variance!r}"
            )

    def precisions(self, p: int) -> np.ndarray:
        prec = np.full(p, 1.0 / self.coef_variance)
        prec[0] = 0.0 if self.intercept_variance is None else 1.0 / self.intercept_variance
        return prec


@dataclass(frozen=True)
class MapFit:
    mode: np.ndarray
    neg_hessian: np.ndarray
    converged: bool
    iterations: int


def _log_lik(x: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = x @ beta
    return float(y @ eta - np.sum(np.logaddexp(0.0, eta)))


def fit_map(data: GlmDataset, prior: Optional[GlmPrior]) -> MapFit:
    """Posterior mode by Newton ascent with step halving.

    prior=None fits the MLE (flat priors on every coefficient).
    Convergence is max-norm gradient < 1e-8 within 100 iterations; a
    coefficient wandering past +-15 on the logit scale marks suspected
    perfect separation in the failure message.
    """
    x, y = data.design, data.outcome
    p = data.p
    prec = prior.precisions(p) if prior is not None else np.zeros(p)
    beta = np.zeros(p)
    obj = _log_lik(x, y, beta)  # prior term is 0 at beta = 0
    separation = False
    for it in range(1, 101):
        mu = expit(x @ beta)
        grad = x.T @ (y - mu) - prec * beta
        if np.max(np.abs(grad)) < 1e-8:
            # expit saturates in float64 once |eta| > ~37, so a runaway fit
            # reports an exactly-zero gradient; refuse that as convergence
            if np.max(np.abs(beta)) > _SEPARATION_BOUND:
                raise NumericalError(
                    "gradient vanished with a coefficient beyond +-15 on the "
                    "logit scale; perfect separation suspected"
                )
            w = mu * (1.0 - mu)
            neg_hess = x.T @ (x * w[:, None]) + np.diag(prec)
            try:
                np.linalg.cholesky(neg_hess)
            except np.linalg.LinAlgError:
                raise NumericalError(
                    "singular Hessian at the converged mode"
                    + ("; perfect separation suspected" if separation else "")
                ) from None
            return MapFit(mode=beta, neg_hessian=neg_hess, converged=True, iterations=it)
        w = mu * (1.0 - mu)
        neg_hess = x.T @ (x * w[:, None]) + np.diag(prec)
        try:
            step = np.linalg.solve(neg_hess, grad)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "singular Hessian during the Newton fit"
                + ("; perfect separation suspected" if separation else "")
            ) from None
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            cand_obj = _log_lik(x, y, cand) - 0.5 * float(prec @ cand**2)
            if cand_obj > obj - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
        obj = _log_lik(x, y, beta) - 0.5 * float(prec @ beta**2)
        if np.max(np.abs(beta)) > _SEPARATION_BOUND:
            separation = True
    raise NumericalError(
        "Newton fit did not converge in 100 iterations"
        + ("; perfect separation suspected (a coefficient exceeded +-15)" if separation else "")
    )


def laplace_marginal_posterior(fit: MapFit, j: int, name: str = "") -> DensityFn:
    """Gaussian marginal for coefficient j implied by the MAP fit."""
    if not fit.converged:
        raise ContractError("fit did not converge; no Laplace approximation")
    try:
        cov = np.linalg.inv(fit.neg_hessian)
    except np.linalg.LinAlgError:
        raise NumericalError("could not invert the negative Hessian") from None
    var = float(cov[j, j])
    if var <= 0.0:
        raise NumericalError(f"nonpositive marginal variance for coefficient {j}")
    mean = float(fit.mode[j])
    from .specfun import normal_log_density

    def log_density(b):
        return normal_log_density(b, mean, var)

    label = name or f"coef{j}"
    return DensityFn(
        log_density=log_density,
        lower=-math.inf,
        upper=math.inf,
        descriptor=f"laplace-posterior[{label}](mean={mean:.4g}, sd={math.sqrt(var):.4g})",
        proper=True,
        local=False,
    )


def metropolis_sample(
    data: GlmDataset, prior: GlmPrior, n_samples: int = 200_000, seed: int = 1
):
    """Random-walk Metropolis draws from the joint posterior.

    The proposal is N(0, scale^2 * (2.38^2/d) * H^-1) seeded at the MAP;
    the global scale adapts during the first 10% (burn-in, discarded)
    toward a 0.234 acceptance rate and is frozen afterwards.  Returns
    (samples, info) where info carries the post-burn-in acceptance rate
    and any warnings; identical seeds give identical samples.
    """
    if n_samples < 100:
        raise DomainError("n_samples must be at least 100")
    fit = fit_map(data, prior)
    d = data.p
    cov = np.linalg.inv(fit.neg_hessian) * (2.38**2 / d)
    chol = np.linalg.cholesky(cov)
    x, y = data.design, data.outcome
    prec = prior.precisions(d)

    def log_post(beta):
        return _log_lik(x, y, beta) - 0.5 * float(prec @ beta**2)

    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((n_samples, d))
    log_unifs = np.log(rng.uniform(size=n_samples))

    burn = n_samples // 10
    scale = 1.0
    beta = fit.mode.copy()
    lp = log_post(beta)
    out = np.empty((n_samples, d))
    accepted_recent = 0
    accepted_main = 0
    for t in range(n_samples):
        prop = beta + scale * (chol @ normals[t])
        lp_prop = log_post(prop)
        if log_unifs[t] < lp_prop - lp:
            beta, lp = prop, lp_prop
            if t < burn:
                accepted_recent += 1
            else:
                accepted_main += 1
        out[t] = beta
        if t < burn and (t + 1) % 100 == 0:
            rate = accepted_recent / 100.0
            scale *= math.exp(rate - 0.234)
            accepted_recent = 0
    rate = accepted_main / max(n_samples - burn, 1)
    warnings = ()
    if not 0.05 <= rate <= 0.7:
        warnings = (
            f"acceptance-rate: post-burn-in Metropolis acceptance {rate:.3f} "
            f"outside [0.05, 0.7]; treat the sampled posterior with caution",
        )
    info = {"acceptance_rate": rate, "proposal_scale": scale, "warnings": warnings}
    return out[burn:], info


def kde_density(sample, descriptor: str = "kde-posterior") -> DensityFn:
    """Gaussian kernel density with Silverman bandwidth.

    Supported on the sample range only: outside [min, max] the log
    density is NaN, which downstream curve evaluation reports as a
    truncated curve instead of inventing tail values.
    """
    s = np.sort(np.asarray(sample, dtype=float))
    if s.ndim != 1 or len(s) < 2:
        raise DomainError("sample must be one-dimensional with at least 2 values")
    n = len(s)
    sd = float(s.std(ddof=1))
    iqr = float(s[int(0.75 * (n - 1))] - s[int(0.25 * (n - 1))])
    width = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    if width <= 0.0:
        raise DomainError("sample is degenerate; no bandwidth")
    h = 0.9 * width * n ** (-0.2)
    lo, hi = float(s[0]), float(s[-1])
    log_norm = math.log(n * h * math.sqrt(2.0 * math.pi))

    def log_density(b):
        arr = np.atleast_1d(np.asarray(b, dtype=float))
        res = np.empty(arr.shape)
        for start in range(0, len(arr), 32):
            block = arr[start : start + 32]
            q = -0.5 * ((block[:, None] - s[None, :]) / h) ** 2
            m = np.max(q, axis=1, keepdims=True)
            res[start : start + 32] = m[:, 0] + np.log(np.sum(np.exp(q - m), axis=1))
        res -= log_norm
        res[(arr < lo) | (arr > hi)] = np.nan
        return float(res[0]) if np.ndim(b) == 0 else res

    return DensityFn(
        log_density=log_density,
        lower=lo,
        upper=hi,
        descriptor=f"{descriptor}(n={n}, h={h:.4g})",
        proper=True,
        local=False,
    )


def glm_coefficient_bff(
    data: GlmDataset,
    prior: GlmPrior,
    j: int,
    method: str = "laplace",
    *,
    n_samples: int = 200_000,
    seed: int = 1,
    samples: Optional[np.ndarray] = None,
    mle_fit: Optional[MapFit] = None,
) -> BffModel:
    """BFF for H0: beta_j = b over the alternative's N(0, v) prior.

    method 'laplace' and 'mcmc' are density ratios of an approximate
    marginal posterior to the prior; 'univariate-normal' reruns the
    closed-form normal analysis on (MLE_j, SE_j).  The intercept carries
    a flat prior, so testing it is refused.  Pass precomputed `samples`
    (mcmc) or `mle_fit` (univariate-normal) to reuse expensive pieces.
    """
    if not 0 <= j < data.p:
        raise DomainError(f"coefficient index {j} out of range")
    if j == 0:
        raise ContractError(
            "the intercept has a flat prior; density-ratio BFFs need a proper prior"
        )
    name = data.names[j]
    prior_j = global_prior_density(0.0, prior.coef_variance)

    if method == "laplace":
        fit = fit_map(data, prior)
        post = laplace_marginal_posterior(fit, j, name)
        model = savage_dickey_bff(post, prior_j)
    elif method == "mcmc":
        if samples is None:
            samples, _ = metropolis_sample(data, prior, n_samples=n_samples, seed=seed)
        post = kde_density(samples[:, j], f"kde-posterior[{name}]")
        model = savage_dickey_bff(post, prior_j)
    elif method == "univariate-normal":
        fit = mle_fit if mle_fit is not None else fit_map(data, None)
        cov = np.linalg.inv(fit.neg_hessian)
        se = math.sqrt(float(cov[j, j]))
        model = normal_bff(
            NormalSummary(float(fit.mode[j]), se),
            GlobalNormalPrior(0.0, prior.coef_variance),
        )
    else:
        raise DomainError(
            f"unknown method {method!r}; expected laplace, mcmc or univariate-normal"
        )
    return BffModel(
        log_bff=model.log_bff,
        lower=model.lower,
        upper=model.upper,
        descriptor=f"logistic[{name}] via {method}",
        dim=1,
        lower_closed=model.lower_closed,
        upper_closed=model.upper_closed,
    )
