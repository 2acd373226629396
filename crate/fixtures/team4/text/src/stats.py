"""Weekly delay statistics per route."""
from statistics import mean, median, quantiles


def weekly(rows):
    by_key = {}
    for row in rows:
        by_key.setdefault((row["route"], row["week"]), []).append(row["delay"])
    out = {}
    for key, delays in by_key.items():
        out[key] = {
            "mean": mean(delays),
            "median": median(delays),
            "p90": quantiles(delays, n=10)[-1] if len(delays) > 1 else delays[0],
        }
    return out
