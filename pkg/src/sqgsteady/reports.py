"""Check reports and their NDJSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field


@dataclass
class CheckReport:
    check_id: str
    slack_min: float
    constant_observed: float
    passed: bool
    details: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # (t, value, bound) for plotting

    def record(self, config_hash: str = "") -> dict:
        return {"check_id": self.check_id, "config_hash": config_hash,
                "slack_min": _clean(self.slack_min),
                "constant_observed": _clean(self.constant_observed),
                "pass": bool(self.passed)}


def _clean(x):
    """JSON has no inf/nan; encode them as strings."""
    if isinstance(x, bool) or isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _clean(x.item())
    return x


def ndjson_line(obj: dict) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":")) + "\n"


def to_ndjson(records) -> str:
    return "".join(ndjson_line(r) for r in records)


def rows_to_csv(rows, header=("t", "value", "bound")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
