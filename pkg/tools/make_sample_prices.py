"""Generate the bundled sample price strips (data/houston_jan2022_*.csv).

Synthesizes ten days of day-ahead (hourly) and real-time (15-minute)
prices with the character of the Houston hub in January 2022: a double
diurnal peak, volatile real-time prices around the day-ahead level,
occasional scarcity spikes of several hundred $/MWh, and rare negative
dips in the small hours. Fully deterministic (fixed seed); rerunning
reproduces the committed files byte for byte.

Real market exports can be swapped in as long as they are pre-shaped to
the documented CSV format (header ``timestamp,price_usd_per_mwh``, ISO
timestamps, one row per interval).
"""

from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

START = datetime(2022, 1, 1)
DAYS = 10
OUT_DIR = Path(__file__).resolve().parent.parent / "data"


def diurnal_shape(hours: np.ndarray) -> np.ndarray:
    """Double-humped daily profile, peaks near 08:00 and 19:00."""
    morning = np.exp(-0.5 * ((hours - 8.0) / 2.2) ** 2)
    evening = np.exp(-0.5 * ((hours - 19.0) / 2.8) ** 2)
    return 1.0 + 0.55 * morning + 0.75 * evening


def make_dam(rng: np.random.Generator) -> np.ndarray:
    hours = np.arange(24)
    days = []
    for d in range(DAYS):
        base = 24.0 + 6.0 * rng.normal() * 0.5 + 3.0 * np.sin(2 * np.pi * d / 7.0)
        level = max(base, 12.0)
        day = level * diurnal_shape(hours) + rng.normal(0.0, 1.4, 24)
        days.append(np.maximum(day, 5.0))
    return np.concatenate(days)


def make_rtm(rng: np.random.Generator, dam_hourly: np.ndarray) -> np.ndarray:
    n = DAYS * 96
    base = np.repeat(dam_hourly, 4)
    # AR(1) deviation around the day-ahead level
    noise = np.zeros(n)
    for i in range(1, n):
        noise[i] = 0.82 * noise[i - 1] + rng.normal(0.0, 4.5)
    rtm = base + noise

    # scarcity spikes: a couple of pronounced events across the strip
    for _ in range(int(rng.poisson(0.9 * DAYS))):
        start = int(rng.integers(0, n - 8))
        length = int(rng.integers(2, 7))
        height = float(rng.lognormal(mean=5.6, sigma=0.55))
        profile = height * np.exp(-0.5 * (np.arange(length) - length / 2.0) ** 2)
        rtm[start : start + length] += profile[: max(0, min(length, n - start))]

    # occasional negative dips in the small hours (wind oversupply)
    for d in range(DAYS):
        if rng.random() < 0.45:
            start = d * 96 + int(rng.integers(4, 20))
            length = int(rng.integers(2, 6))
            rtm[start : start + length] -= float(rng.uniform(25.0, 55.0))

    return np.maximum(rtm, -30.0)


def write_csv(path: Path, start: datetime, minutes: int, prices: np.ndarray) -> None:
    lines = ["timestamp,price_usd_per_mwh"]
    for i, price in enumerate(prices):
        ts = start + timedelta(minutes=i * minutes)
        lines.append(f"{ts.isoformat()},{round(float(price), 2)}")
    path.write_text("\n".join(lines) + "\n")


def main() -> None:
    rng = np.random.default_rng(20220101)
    dam = make_dam(rng)
    rtm = make_rtm(rng, dam)
    OUT_DIR.mkdir(exist_ok=True)
    write_csv(OUT_DIR / "houston_jan2022_dam.csv", START, 60, dam)
    write_csv(OUT_DIR / "houston_jan2022_rtm.csv", START, 15, rtm)
    print(f"wrote {DAYS * 24} DAM rows and {DAYS * 96} RTM rows into {OUT_DIR}")


if __name__ == "__main__":
    main()
