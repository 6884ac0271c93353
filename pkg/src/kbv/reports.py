"""Report records and their JSON / CSV emission.

Reports carry no timestamps or host data, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from kbv import __version__

CSV_MAGIC = "# kbv-report v1"


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def plain(value: Any) -> Any:
    """Convert report values into JSON-safe primitives."""
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if hasattr(value, "to_dict"):
        return plain(value.to_dict())
    return value


@dataclass
class TvReport:
    """Exact TV between the valuation vector and the geometric vector, its
    three-region split and the matching bounds with verdicts."""

    n: int
    law: str
    gamma: str
    tv: Fraction
    many: Fraction | None = None
    high: Fraction | None = None
    small: Fraction | None = None
    alpha: float | None = None
    beta: float | None = None
    bounds: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "law": self.law,
            "gamma": self.gamma,
            "tv": frac_str(self.tv),
            "tv_decimal": float(self.tv),
        }
        if self.many is not None:
            out.update(
                alpha=self.alpha,
                beta=self.beta,
                s_many=frac_str(self.many),
                s_many_decimal=float(self.many),
                s_high=frac_str(self.high),
                s_high_decimal=float(self.high),
                s_small=frac_str(self.small),
                s_small_decimal=float(self.small),
            )
        for k, v in self.bounds.items():
            out[f"bound_{k}"] = v
        for k, v in self.verdicts.items():
            out[f"verdict_{k}"] = v
        return out


@dataclass
class Report:
    command: str
    mode: str
    config: dict
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"format": CSV_MAGIC[2:], "version": __version__, "command": self.command, "mode": self.mode}

    def to_json(self) -> str:
        payload = {
            **self.header(),
            "config": plain(self.config),
            "rows": plain(self.rows),
            "summary": plain(self.summary),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_MAGIC + "\n")
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        buf.write("# config: " + json.dumps(plain(self.config), sort_keys=True) + "\n")
        if self.summary:
            buf.write("# summary: " + json.dumps(plain(self.summary), sort_keys=True) + "\n")
        rows = [plain(r) for r in self.rows]
        columns: list[str] = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()
