"""Tests for outcome tallies."""

import io

import pytest
from rich.console import Console

from src.metrics import OutcomeTally, outcome_key, statistical_tolerance


def test_statistical_tolerance():
    assert statistical_tolerance(0.5, 100) == pytest.approx(4 * 0.05)
    assert statistical_tolerance(1.0, 100) == 0.0
    with pytest.raises(ValueError):
        statistical_tolerance(0.5, 0)


def test_outcome_key():
    assert outcome_key((1, -1)) == "1,-1"


def test_tally_counts_and_frequencies():
    tally = OutcomeTally(("T", "Y"))
    tally.record_many([(1, 1), (1, 0), (1, 0), (0, 0)])

    assert tally.total == 4
    assert tally.count((1, 0)) == 2
    assert tally.frequency((0, 1)) == 0.0
    assert tally.frequencies() == {"1,1": 0.25, "1,0": 0.5, "0,0": 0.25}


def test_tally_rejects_wrong_arity():
    tally = OutcomeTally(("T", "Y"))
    with pytest.raises(ValueError):
        tally.record((1,))


def test_within_tolerance():
    tally = OutcomeTally(("A",))
    tally.record_many([(1,)] * 52 + [(-1,)] * 48)
    assert tally.within_tolerance({(1,): 0.5, (-1,): 0.5})
    assert not tally.within_tolerance({(1,): 0.1, (-1,): 0.9})
    assert not OutcomeTally(("A",)).within_tolerance({(1,): 0.5})


def test_summary_and_reset():
    tally = OutcomeTally(("A", "P"))
    tally.record((1, -1))
    summary = tally.get_summary()
    assert summary == {
        "labels": ["A", "P"],
        "total": 1,
        "counts": {"1,-1": 1},
        "frequencies": {"1,-1": 1.0},
    }
    tally.reset()
    assert tally.total == 0
    assert tally.get_summary()["counts"] == {}


def test_print_summary():
    buffer = io.StringIO()
    tally = OutcomeTally(("T", "Y"))
    tally.record((1, 0))
    tally.print_summary(Console(file=buffer, width=80), title="TY")
    output = buffer.getvalue()
    assert "TY" in output
    assert "1.00000" in output
