"""Regenerate the bundled example forecast file.

Synthetic hub-style quantile forecasts: four models, two targets, four
locations, four forecast dates and two horizons. One model never forecasts
cases, one has a few missing death forecasts, and two baseline case
forecasts have no predicted values at all.

    python tools/make_fixture.py src/probscore/fixtures/example_quantile.csv
"""

import csv
import datetime as dt
import sys

import numpy as np
from scipy import stats

from probscore.data import HUB_LEVELS

MODELS = {
    # name: (log-scale bias, log-scale spread, noise)
    "EuroCOVIDhub-ensemble": (0.00, 0.20, 0.15),
    "EuroCOVIDhub-baseline": (0.10, 0.15, 0.30),
    "epiforecasts-EpiNow2": (-0.05, 0.30, 0.20),
    "UMass-MechBayes": (0.05, 0.25, 0.15),
}
LOCATIONS = {"DE": (90000, 700), "FR": (60000, 300), "GB": (20000, 40), "IT": (30000, 200)}
DATES = ["2021-05-03", "2021-05-10", "2021-05-17", "2021-05-24"]
HORIZONS = [1, 2]
SKIP = {("UMass-MechBayes", "Cases")}
MISSING = {("epiforecasts-EpiNow2", "Deaths", "IT", "2021-05-24", 2),
           ("epiforecasts-EpiNow2", "Deaths", "GB", "2021-05-17", 1),
           ("epiforecasts-EpiNow2", "Deaths", "GB", "2021-05-24", 2)}
NA_FORECASTS = {("EuroCOVIDhub-baseline", "Cases", "FR", "2021-05-10", 1),
                ("EuroCOVIDhub-baseline", "Cases", "FR", "2021-05-10", 2)}


def main(path):
    rng = np.random.default_rng(2021)
    z = stats.norm.ppf(HUB_LEVELS)
    truth = {}
    for loc, (cases, deaths) in LOCATIONS.items():
        for d in DATES:
            for h in HORIZONS:
                end = dt.date.fromisoformat(d) + dt.timedelta(days=5 + 7 * (h - 1))
                trend = 1.0 - 0.08 * (DATES.index(d) + h)
                for target, level in (("Cases", cases), ("Deaths", deaths)):
                    truth[(loc, end, target)] = int(round(level * trend * np.exp(rng.normal(0, 0.1))))

    rows = []
    for model, (bias, spread, noise) in MODELS.items():
        for target in ("Cases", "Deaths"):
            if (model, target) in SKIP:
                continue
            for loc in LOCATIONS:
                for d in DATES:
                    for h in HORIZONS:
                        if (model, target, loc, d, h) in MISSING:
                            continue
                        end = dt.date.fromisoformat(d) + dt.timedelta(days=5 + 7 * (h - 1))
                        y = truth[(loc, end, target)]
                        median = y * np.exp(bias + rng.normal(0, noise * np.sqrt(h)))
                        q = np.round(median * np.exp(spread * np.sqrt(h) * z)).astype(int)
                        blank = (model, target, loc, d, h) in NA_FORECASTS
                        for lvl, v in zip(HUB_LEVELS, q):
                            rows.append([loc, end.isoformat(), target, y, d, lvl, "NA" if blank else int(v), model, h])

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["location", "target_end_date", "target_type", "true_value", "forecast_date",
                    "quantile", "prediction", "model", "horizon"])
        w.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1])
