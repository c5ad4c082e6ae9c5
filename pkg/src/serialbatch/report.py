from __future__ import annotations

import enum
from dataclasses import dataclass

from .model import Schedule


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SolveReport:
    status: Status
    incumbent: Schedule | None
    objective: int | None
    dual_bound: int
    nodes: int = 0
    elapsed: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.incumbent is not None
