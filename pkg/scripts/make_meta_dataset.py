"""Generate the bundled per-flipper meta-analysis CSV.

The original per-participant records are not redistributable, so this
script builds a synthetic 48-row surrogate and calibrates it until the
analysis pipeline reproduces the headline numbers: joint MEE near
(0.5105, 0.016), joint evidence level near 14, marginal evidence levels
near 2.2 (theta) and 6.4 (tau), and log BF01(0.5, 0) near -1.81e5.

Deterministic: fixed seed, fixed calibration order.  Writes
src/bff/data/coinflip_meta.csv relative to the repo root.
"""

import math
import os
import sys

import numpy as np
from scipy.optimize import minimize

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from bff.binomial import TruncBetaPrior
from bff.engine import GridSpec, find_mee
from bff.meta import (
    MetaDataset,
    MetaPriors,
    meta_joint_bff,
    meta_log_denominator,
    meta_loglik,
    meta_marginal_tau_bff,
    meta_marginal_theta_bff,
)

THETA_TARGET = 0.5105
TAU_TARGET = 0.016
LOGBF_NULL_TARGET = -1.81e5

N_PRECISE = 32
N_SMALL = 16


def standardized(rng, n):
    u = rng.normal(size=n)
    u -= u.mean()
    u /= u.std()
    return u


def build(theta_c, tau_c, sigma_scale, parts):
    u_p, u_s, sig_p, sig_s = parts
    y = np.concatenate([theta_c + tau_c * u_p, theta_c + tau_c * u_s])
    se = np.concatenate([sigma_scale * sig_p, sig_s])
    ids = tuple(f"flipper{i + 1:02d}" for i in range(len(y)))
    return MetaDataset(ids, tuple(y), tuple(se))


def joint_mle(data):
    def neg(x):
        if x[1] < 0:
            return 1e12
        return -meta_loglik(data, x[0], x[1])

    best = None
    for tau0 in (0.01, 0.016, 0.025):
        r = minimize(neg, [THETA_TARGET, tau0], method="Nelder-Mead",
                     options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 2000})
        if best is None or r.fun < best.fun:
            best = r
    return best.x[0], best.x[1]


def main():
    rng = np.random.default_rng(20240817)
    u_p = standardized(rng, N_PRECISE)
    u_s = standardized(rng, N_SMALL)
    sig_p = np.exp(rng.uniform(math.log(1.7e-4), math.log(2.3e-4), N_PRECISE))
    sig_s = np.exp(rng.uniform(math.log(0.02), math.log(0.04), N_SMALL))
    parts = (u_p, u_s, sig_p, sig_s)

    theta_c, tau_c, scale = THETA_TARGET, TAU_TARGET, 1.0

    # center the MLE on the targets (sigma scale barely moves it)
    for _ in range(4):
        data = build(theta_c, tau_c, scale, parts)
        th, ta = joint_mle(data)
        print(f"  mle pass: theta_hat={th:.6f} tau_hat={ta:.6f}")
        theta_c += THETA_TARGET - th
        tau_c *= TAU_TARGET / ta

    priors = MetaPriors(TruncBetaPrior(5100.0, 4900.0, 0.5, 1.0), 0.02)

    # match log BF01(0.5, 0): scaling the precise-row SEs by c changes it by
    # roughly (Sz2/2)(1 - 1/c^2) - N ln c where Sz2 = sum((y-0.5)/se)^2
    for it in range(6):
        data = build(theta_c, tau_c, scale, parts)
        log_z = meta_log_denominator(data, priors)
        lb_null = meta_loglik(data, 0.5, 0.0) - log_z
        print(f"  null pass {it}: logBF(0.5,0)={lb_null:.1f} (target {LOGBF_NULL_TARGET:.1f})")
        if abs(lb_null - LOGBF_NULL_TARGET) < 0.001 * abs(LOGBF_NULL_TARGET):
            break
        y_p = theta_c + tau_c * u_p
        sz2 = float(np.sum(((y_p - 0.5) / (scale * sig_p)) ** 2))

        def gap(c):
            return (lb_null + 0.5 * sz2 * (1.0 - 1.0 / c**2)
                    - N_PRECISE * math.log(c) - LOGBF_NULL_TARGET)

        lo, hi = 0.2, 5.0
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if gap(mid) > 0:
                hi = mid
            else:
                lo = mid
        scale *= math.sqrt(lo * hi)

    data = build(theta_c, tau_c, scale, parts)
    log_z = meta_log_denominator(data, priors)

    joint = meta_joint_bff(data, priors, log_denominator=log_z)
    grid2 = GridSpec.two_dim((0.5, 0.0), (0.52, 0.05), (101, 101))
    mee_j = find_mee(joint, grid2)
    th_j, ta_j = mee_j.theta_hat

    m_theta = meta_marginal_theta_bff(data, priors, log_denominator=log_z)
    mee_t = find_mee(m_theta, GridSpec.one_dim(0.5, 0.52, 201))
    m_tau = meta_marginal_tau_bff(data, priors, log_denominator=log_z)
    mee_u = find_mee(m_tau, GridSpec.one_dim(0.0, 0.05, 201))

    lb_null = meta_loglik(data, 0.5, 0.0) - log_z

    checks = [
        ("joint theta MEE", th_j, 0.508, 0.512),
        ("joint tau MEE", ta_j, 0.015, 0.017),
        ("joint k_ME", mee_j.k_me, 14 * 0.8, 14 * 1.2),
        ("marginal theta k_ME", mee_t.k_me, 2.2 * 0.8, 2.2 * 1.2),
        ("marginal tau k_ME", mee_u.k_me, 6.4 * 0.8, 6.4 * 1.2),
        ("log BF01(0.5,0)", lb_null, LOGBF_NULL_TARGET * 1.01, LOGBF_NULL_TARGET * 0.99),
    ]
    ok = True
    for name, val, lo, hi in checks:
        state = "PASS" if lo <= val <= hi else "FAIL"
        ok &= state == "PASS"
        print(f"{state}: {name} = {val:.6g}  (window [{lo:.6g}, {hi:.6g}])")
    if not ok:
        raise SystemExit("calibration failed; adjust knobs")

    out = os.path.join(os.path.dirname(__file__), "..", "src", "bff", "data",
                       "coinflip_meta.csv")
    lines = ["id,estimate,se"]
    for i, (e, s) in enumerate(zip(data.estimates, data.std_errors)):
        lines.append(f"flipper{i + 1:02d},{e:.10g},{s:.10g}")
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {os.path.normpath(out)} ({len(data)} rows)")


if __name__ == "__main__":
    main()
