"""Residual reports shared by the command-line checks."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    samples: int
    max_abs: float
    mean_abs: float
    threshold: float
    worst: dict | None = None
    excluded: int = 0
    invert: bool = False  # negative controls pass when the residual exceeds the threshold

    @property
    def passed(self) -> bool:
        ok = self.max_abs <= self.threshold
        return (not ok) if self.invert else ok

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "samples": int(self.samples),
            "max_abs": float(self.max_abs),
            "mean_abs": float(self.mean_abs),
            "threshold": float(self.threshold),
            "pass": bool(self.passed),
        }
        if self.invert:
            d["expect"] = "exceed"
        if self.excluded:
            d["excluded"] = int(self.excluded)
        if self.worst is not None and (not self.passed or self.invert):
            d["worst_sample"] = self.worst
        return d


def make_check(name: str, per_sample: np.ndarray, threshold: float, jets=None, excluded: int = 0,
               invert: bool = False) -> Check:
    """Summarize per-sample residuals (leading axis = sample)."""
    r = np.abs(np.asarray(per_sample, dtype=float))
    n = r.shape[0] if r.ndim else 1
    flat = r.reshape(n, -1) if r.size else np.zeros((0, 1))
    worst_per = flat.max(axis=1) if flat.size else np.zeros(0)
    worst = None
    if jets is not None and len(worst_per):
        i = int(np.argmax(worst_per))
        worst = jets(i) if callable(jets) else jets[i]
    return Check(name, n, float(flat.max()) if flat.size else 0.0, float(flat.mean()) if flat.size else 0.0,
                 threshold, worst, excluded, invert)


@dataclass
class ResidualReport:
    command: str
    checks: list[Check] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = {"command": self.command, "config": self.config, "pass": self.passed,
             "checks": [c.to_dict() for c in self.checks]}
        if self.extra:
            d["diagnostics"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "samples", "max_abs", "mean_abs", "threshold", "pass"])
        for c in self.checks:
            w.writerow([c.name, c.samples, repr(float(c.max_abs)), repr(float(c.mean_abs)), repr(float(c.threshold)),
                        "true" if c.passed else "false"])
        return buf.getvalue()

    def render(self, fmt: str = "json") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()
