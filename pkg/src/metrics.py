"""Outcome tallies and the statistical tolerances used to judge them."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple, Any

from rich.console import Console
from rich.table import Table

Outcome = Tuple[int, ...]


def statistical_tolerance(p: float, n: int, sigmas: float = 4.0) -> float:
    """``sigmas * sqrt(p(1-p)/n)``; zero for sure or impossible cells."""
    if n <= 0:
        raise ValueError(f"Sample size must be positive, got {n}")
    return sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def outcome_key(outcome: Outcome) -> str:
    """Stable string key, e.g. ``(1, 0) -> "1,0"``."""
    return ",".join(str(v) for v in outcome)


@dataclass
class OutcomeTally:
    """Counts of joint outcomes for a fixed, ordered tuple of observable labels."""

    labels: Tuple[str, ...]
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def record(self, outcome: Outcome) -> None:
        """
        Record one joint outcome.

        Args:
            outcome: One value per label, in label order
        """
        if len(outcome) != len(self.labels):
            raise ValueError(f"Expected {len(self.labels)} outcomes, got {len(outcome)}")
        self.counts[tuple(outcome)] += 1
        self.total += 1

    def record_many(self, outcomes: Iterable[Outcome]) -> None:
        for outcome in outcomes:
            self.record(outcome)

    def count(self, outcome: Outcome) -> int:
        return self.counts.get(tuple(outcome), 0)

    def frequency(self, outcome: Outcome) -> float:
        """Empirical frequency of a joint outcome (0 for an empty tally)."""
        if self.total == 0:
            return 0.0
        return self.count(outcome) / self.total

    def frequencies(self) -> Dict[str, float]:
        return {outcome_key(o): self.frequency(o) for o in sorted(self.counts, reverse=True)}

    def within_tolerance(self, expected: Mapping[Outcome, float], sigmas: float = 4.0) -> bool:
        """True iff every expected cell is matched within ``sigmas`` standard errors."""
        if self.total == 0:
            return False
        return all(
            abs(self.frequency(outcome) - p) <= statistical_tolerance(p, self.total, sigmas)
            for outcome, p in expected.items()
        )

    def get_summary(self) -> Dict[str, Any]:
        """
        Get a summary of the tally.

        Returns:
            Dictionary with labels, total, raw counts and frequencies
        """
        return {
            "labels": list(self.labels),
            "total": self.total,
            "counts": {outcome_key(o): c for o, c in sorted(self.counts.items(), reverse=True)},
            "frequencies": self.frequencies(),
        }

    def print_summary(self, console: Optional[Console] = None, title: Optional[str] = None) -> None:
        """Render the tally as a table."""
        console = console or Console()
        table = Table(title=title or f"Joint outcomes of {', '.join(self.labels)}", header_style="bold")
        for label in self.labels:
            table.add_column(label, justify="center")
        table.add_column("Count", justify="right")
        table.add_column("Frequency", justify="right")
        for outcome in sorted(self.counts, reverse=True):
            table.add_row(*(str(v) for v in outcome), str(self.count(outcome)), f"{self.frequency(outcome):.5f}")
        console.print(table)

    def reset(self) -> None:
        """Reset all counts."""
        self.counts.clear()
        self.total = 0
