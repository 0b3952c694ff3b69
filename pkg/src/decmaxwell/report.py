"""Pass/fail bookkeeping shared by validation, verification and the CLI."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from ._json import _fmt_float


@dataclass(frozen=True)
class CheckResult:
    """One named check.

    ``kind`` says how ``statistic`` is compared with ``threshold``: ``"le"``
    passes when statistic <= threshold, ``"ge"`` when statistic >= threshold,
    ``"info"`` always passes (reported for reference only).
    """

    name: str
    statistic: float
    threshold: float
    kind: str = "le"

    @property
    def passed(self) -> bool:
        if self.kind == "info":
            return True
        if math.isnan(self.statistic):
            return False
        if self.kind == "le":
            return self.statistic <= self.threshold
        if self.kind == "ge":
            return self.statistic >= self.threshold
        raise ValueError(f"unknown comparison {self.kind!r}")


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return _fmt_float(x)


@dataclass
class Report:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name, statistic, threshold, kind="le") -> CheckResult:
        c = CheckResult(name, float(statistic), float(threshold), kind)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = ""):
        for c in other.checks:
            self.checks.append(CheckResult(prefix + c.name, c.statistic, c.threshold, c.kind))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "statistic", "threshold", "pass"])
        for c in sorted(self.checks, key=lambda c: c.name):
            w.writerow([c.name, _num(c.statistic), _num(c.threshold),
                        "pass" if c.passed else "fail"])
        return buf.getvalue()
