"""Reference values for Erlang log density, log survival and hazard.

Run from this directory to regenerate ../data/erlang_oracle.csv:

    python3 erlang_mp.py
"""
import csv
from mpmath import mp, mpf, log, gammainc, loggamma, exp

mp.dps = 60

SHAPES = [1, 2, 3, 5, 10, 50, 100, 1000, 5000, 20000]
SCALES = ["0.01", "0.3", "1", "7", "50"]
RATIOS = ["0.05", "0.5", "0.9", "1", "1.1", "2", "4"]
# individual (m, theta, t) points checked by name in the tests
EXTRA = [(10000, "0.5", "5000"), (400, "0.5", "250")]


def row(m, theta, t):
    m, theta, t = mpf(m), mpf(theta), mpf(t)  # exact binary values
    x = t / theta
    log_pdf = (m - 1) * log(t) - x - loggamma(m) - m * log(theta)
    sf = gammainc(m, x, mp.inf, regularized=True)
    log_sf = log(sf)
    hazard = exp(log_pdf - log_sf)
    return log_pdf, log_sf, hazard


def main():
    with open("../data/erlang_oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "theta", "t", "log_pdf", "log_sf", "hazard"])
        for m in SHAPES:
            for theta in SCALES:
                for r in RATIOS:
                    # evaluate at the double nearest to t, which the reader parses exactly
                    t = float(mpf(r) * m * mpf(theta))
                    vals = row(m, float(theta), t)
                    w.writerow([m, theta, repr(t)] + [mp.nstr(v, 25) for v in vals])
        for m, theta, t in EXTRA:
            vals = row(m, float(theta), float(t))
            w.writerow([m, theta, repr(float(t))] + [mp.nstr(v, 25) for v in vals])


if __name__ == "__main__":
    main()
