"""Load the public delay feed into a tidy table."""
import csv
from datetime import datetime


def parse_time(raw):
    """Return a datetime, or None when the feed leaves the field blank."""
    if not raw:
        return None
    return datetime.fromisoformat(raw)


def load_feed(path):
    rows = []
    with open(path, newline="") as handle:
        for record in csv.DictReader(handle):
            observed = parse_time(record["observed"])
            if observed is None:
                continue
            scheduled = parse_time(record["scheduled"])
            rows.append({
                "route": record["route"],
                "stop": record["stop"],
                "delay": (observed - scheduled).total_seconds() / 60.0,
            })
    return rows
