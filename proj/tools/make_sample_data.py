#!/usr/bin/env python3
"""Regenerate data/sample_mids.csv: a deterministic synthetic mid series.

One 6.5-hour trading day sampled every 30 seconds (781 rows), a plain random
walk in log space with mild intraday seasonality. Fixed seed so the committed
file is reproducible bit for bit.
"""

import math
import random

OUT = "data/sample_mids.csv"
T0 = 34200          # 09:30:00 in seconds of day
T1 = 57600          # 16:00:00
STEP = 30
S0 = 100.0
SIGMA = 5e-4        # per-observation relative std


def main() -> None:
    rng = random.Random(20240615)
    rows = []
    log_s = math.log(S0)
    n = (T1 - T0) // STEP + 1
    for i in range(n):
        t = T0 + i * STEP
        u = i / (n - 1)
        seasonal = 1.0 + 0.8 * (u - 0.5) ** 2  # busier open/close
        log_s += rng.gauss(0.0, SIGMA * seasonal)
        rows.append((t, math.exp(log_s)))
    with open(OUT, "w", encoding="ascii") as f:
        f.write("timestamp,mid\n")
        for t, s in rows:
            f.write(f"{t},{s:.6f}\n")
    print(f"wrote {OUT} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
