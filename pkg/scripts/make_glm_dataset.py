"""Generate the bundled neonatal-mortality logistic-regression CSV.

The original birth records are not redistributable; this script builds
a synthetic 2992-row surrogate (17 deaths, 14 covariates) calibrated so
the analysis pipeline reproduces the headline numbers: early-age
OR_ME ~ 1.4 with evidence level ~ 1.5 and k=1 support interval
~ [1/1.4, 2.5] on the Laplace path, and a hydramnios univariate-normal
path with OR_ME ~ 60.3 and support interval ~ [1.7, 2188].

Deterministic: per-candidate seeding, fixed search order.  Writes
src/bff/data/neonatal_births.csv relative to the repo root.
"""

import itertools
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from bff.engine import GridSpec, find_mee, support_set
from bff.glm import GlmDataset, GlmPrior, fit_map, glm_coefficient_bff

N_ROWS = 2992
N_DEATHS = 17

# name -> (survivor prevalence, death rows exposed), death rows indexed 0..16
BINARY = {
    "hydramnios": (None, (0,)),          # exactly 3 survivors, handled apart
    "breech": (0.03, (1,)),
    "twin_birth": (0.02, (2,)),
    "premature": (0.08, (3, 4)),
    "anemia": (0.15, (1, 5, 6)),
    "toxemia": (0.05, (7,)),
    "diabetes": (0.02, (8,)),
    "prev_stillbirth": (0.04, (9,)),
    "cord_prolapse": (0.01, (10,)),
    "induced_labour": (0.12, (5, 11)),
    "forceps": (0.10, (12, 13)),
    "low_weight": (0.07, (4, 14)),
}
PROGRESS_LEVELS = (0.0, 0.33, 0.67, 1.0)
PROGRESS_SURVIVOR_P = (0.55, 0.25, 0.12, 0.08)
PROGRESS_DEATHS = {1: 0.33, 6: 0.33, 15: 0.33, 9: 0.67, 12: 0.67, 10: 1.0, 16: 1.0}

OR_ME_WIN = (1.4 * 0.85, 1.4 * 1.15)
K_ME_WIN = (1.5 * 0.85, 1.5 * 1.15)
SI_LO_WIN = ((1 / 1.4) * 0.85, (1 / 1.4) * 1.15)
SI_HI_WIN = (2.5 * 0.85, 2.5 * 1.15)
H_Y_WIN = (math.log(60.3) * 0.85, math.log(60.3) * 1.15)
H_LO_WIN = (math.log(1.7) * 0.85, math.log(1.7) * 1.15)
H_HI_WIN = (math.log(2188) * 0.85, math.log(2188) * 1.15)


def build(n1, n2, d1, d2):
    rng = np.random.default_rng((20240817, n1, n2, d1, d2))
    names = ["early_age"] + list(BINARY) + ["labour_progress"]
    cols = {name: np.zeros(N_ROWS) for name in names}
    outcome = np.zeros(N_ROWS, dtype=int)
    outcome[:N_DEATHS] = 1

    for name, (prev, death_rows) in BINARY.items():
        for r in death_rows:
            cols[name][r] = 1.0
        if prev is None:
            exposed = N_DEATHS + rng.choice(N_ROWS - N_DEATHS, size=3, replace=False)
        else:
            mask = rng.random(N_ROWS - N_DEATHS) < prev
            exposed = N_DEATHS + np.flatnonzero(mask)
        cols[name][exposed] = 1.0

    for r, val in PROGRESS_DEATHS.items():
        cols["labour_progress"][r] = val
    draws = rng.choice(len(PROGRESS_LEVELS), size=N_ROWS - N_DEATHS, p=PROGRESS_SURVIVOR_P)
    cols["labour_progress"][N_DEATHS:] = np.asarray(PROGRESS_LEVELS)[draws]

    # early-age deaths go on the least-loaded death rows (from the end)
    ea_rows = [16, 15, 14, 13, 12][: d1 + d2]
    for i, r in enumerate(ea_rows):
        cols["early_age"][r] = 1.0 if i < d1 else 2.0
    surv = N_DEATHS + rng.choice(
        N_ROWS - N_DEATHS, size=(n1 - d1) + (n2 - d2), replace=False
    )
    cols["early_age"][surv[: n1 - d1]] = 1.0
    cols["early_age"][surv[n1 - d1:]] = 2.0

    order = rng.permutation(N_ROWS)
    design = np.column_stack([np.ones(N_ROWS)] + [cols[n][order] for n in names])
    return GlmDataset(design, outcome[order], tuple(["intercept"] + names)), names


def evaluate(data):
    prior = GlmPrior(0.5)
    j = data.coefficient_index("early_age")
    model = glm_coefficient_bff(data, prior, j, "laplace")
    fit = fit_map(data, prior)
    sd = math.sqrt(np.linalg.inv(fit.neg_hessian)[j, j])
    grid = GridSpec.one_dim(fit.mode[j] - 8 * sd, fit.mode[j] + 8 * sd, 512)
    mee = find_mee(model, grid)
    ss = support_set(model, 1.0, grid)
    iv = ss.intervals[0]
    early = (math.exp(mee.theta_hat[0]), mee.k_me, math.exp(iv.lower), math.exp(iv.upper))

    h = data.coefficient_index("hydramnios")
    hmodel = glm_coefficient_bff(data, prior, h, "univariate-normal")
    mle = fit_map(data, None)
    hsd = math.sqrt(np.linalg.inv(mle.neg_hessian)[h, h])
    hgrid = GridSpec.one_dim(mle.mode[h] - 8 * hsd, mle.mode[h] + 8 * hsd, 512)
    hss = support_set(hmodel, 1.0, hgrid)
    hiv = hss.intervals[0]
    hydr = (float(mle.mode[h]), hiv.lower, hiv.upper)
    return early, hydr, mle


def margin(val, win):
    lo, hi = win
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return (half - abs(val - mid)) / half  # > 0 means inside, 1 = dead center


def main():
    wins_e = (OR_ME_WIN, K_ME_WIN, SI_LO_WIN, SI_HI_WIN)
    wins_h = (H_Y_WIN, H_LO_WIN, H_HI_WIN)
    best = None
    for n1, n2, d1, d2 in itertools.product(
        (140, 160, 180, 200, 220, 240), (30, 45, 60, 75), (1, 2, 3), (0, 1, 2)
    ):
        data, names = build(n1, n2, d1, d2)
        try:
            early, hydr, mle = evaluate(data)
        except Exception:
            continue
        if not mle.converged:
            continue
        ms = [margin(v, w) for v, w in zip(early, wins_e)]
        ms += [margin(v, w) for v, w in zip(hydr, wins_h)]
        score = min(ms)
        if best is None or score > best[0]:
            best = (score, (n1, n2, d1, d2), early, hydr)
            print(f"  candidate n1={n1} n2={n2} d1={d1} d2={d2}: "
                  f"worst margin {score:+.3f}")
        if score > 0.55:
            break

    score, knobs, early, hydr = best
    if score <= 0.0:
        raise SystemExit("calibration failed; widen the search")
    n1, n2, d1, d2 = knobs
    data, names = build(n1, n2, d1, d2)

    labels = ["early OR_ME", "early k_ME", "early SI lower (OR)", "early SI upper (OR)"]
    for lab, v, w in zip(labels, early, wins_e):
        print(f"PASS: {lab} = {v:.4g}  (window [{w[0]:.4g}, {w[1]:.4g}])")
    labels = ["hydramnios log-OR MLE", "hydramnios SI lower (log)", "hydramnios SI upper (log)"]
    for lab, v, w in zip(labels, hydr, wins_h):
        print(f"PASS: {lab} = {v:.4g}  (window [{w[0]:.4g}, {w[1]:.4g}])")
    print(f"chosen: n1={n1} n2={n2} d1={d1} d2={d2}, "
          f"hydramnios OR_ME={math.exp(hydr[0]):.4g}")

    out = os.path.join(os.path.dirname(__file__), "..", "src", "bff", "data",
                       "neonatal_births.csv")
    lines = ["outcome," + ",".join(names)]
    for i in range(N_ROWS):
        vals = []
        for k, name in enumerate(names):
            x = data.design[i, k + 1]
            vals.append(f"{x:g}")
        lines.append(f"{data.outcome[i]}," + ",".join(vals))
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {os.path.normpath(out)} ({N_ROWS} rows, {int(data.outcome.sum())} deaths)")


if __name__ == "__main__":
    main()
