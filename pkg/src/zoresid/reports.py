"""Shared report container for empirical inequality checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["BoundCheckReport"]


@dataclass
class BoundCheckReport:
    """Pointwise lhs <= rhs + slack verdicts for one named inequality."""

    name: str
    per_point_lhs: list = field(default_factory=list)
    per_point_rhs: list = field(default_factory=list)
    per_point_slack: list = field(default_factory=list)
    slack_policy: str = ""
    seed: int | None = None
    n: int | None = None
    notes: str = ""

    def add(self, lhs: float, rhs: float, slack: float = 0.0) -> None:
        self.per_point_lhs.append(float(lhs))
        self.per_point_rhs.append(float(rhs))
        self.per_point_slack.append(float(slack))

    @property
    def passed(self) -> bool:
        lhs = np.asarray(self.per_point_lhs)
        rhs = np.asarray(self.per_point_rhs)
        slack = np.asarray(self.per_point_slack)
        return bool(np.all(lhs <= rhs + slack))

    @property
    def worst_ratio(self) -> float:
        lhs = np.asarray(self.per_point_lhs, dtype=float)
        rhs = np.asarray(self.per_point_rhs, dtype=float)
        slack = np.asarray(self.per_point_slack, dtype=float)
        if lhs.size == 0:
            return 0.0
        # rhs = 0 checks (pure-slack tolerances) fall back to the slack scale
        denom = np.where(rhs != 0.0, rhs, np.where(slack != 0.0, slack, np.finfo(float).tiny))
        return float(np.max(lhs / denom))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "worst_ratio": self.worst_ratio,
            "n": self.n,
            "seed": self.seed,
            "slack_policy": self.slack_policy,
            "notes": self.notes,
            "points": len(self.per_point_lhs),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status:4s}  {self.name:42s} worst_ratio={self.worst_ratio:.4g} points={len(self.per_point_lhs)}"
