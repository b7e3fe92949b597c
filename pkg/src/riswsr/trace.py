"""Per-iteration convergence records shared by the iterative solvers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field


@dataclass
class Trace:
    """Objective (nats), WSR (nats) and cumulative wall time (ms) per iteration."""

    objective: list = field(default_factory=list)
    wsr: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def record(self, objective: float, wsr: float) -> None:
        self.objective.append(float(objective))
        self.wsr.append(float(wsr))
        self.elapsed_ms.append((time.perf_counter() - self._t0) * 1e3)

    def __len__(self):
        return len(self.objective)

    def rows(self):
        """(iteration, objective, wsr, cumulative_ms) tuples, iteration 0 being the start point."""
        return list(zip(range(len(self.objective)), self.objective, self.wsr, self.elapsed_ms))
