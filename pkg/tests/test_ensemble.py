"""Tests for supports, seeded measurement and the extension passes."""

import numpy as np
import pytest

from src.ensemble import (
    MeasurementPolicy,
    apply_policy,
    apply_strict_extension,
    apply_wide_extension,
    check_record_correlation,
    create_support,
    epr_intersection,
    keyed_uniforms,
    measure,
    measured_set,
    objective_set,
    record_measurement,
    simultaneous_reality_set,
)
from src.exceptions import (
    CertificationError,
    CommutationError,
    ExtensionConflictError,
    MeasurementError,
    PolicyError,
    SeparationError,
)
from src.quantum import CorrelationRule, Direction, Site, certify_correlation, identity_observable


def test_keyed_uniforms_ignore_order():
    """Test that a specimen's draw depends only on its id."""
    forward = keyed_uniforms(42, "k", [1, 3, 5])
    backward = keyed_uniforms(42, "k", [5, 3, 1])
    assert np.array_equal(forward, backward[::-1])
    assert keyed_uniforms(42, "k", [3])[0] == forward[1]


def test_keyed_uniforms_depend_on_key_and_seed():
    base = keyed_uniforms(42, "k", range(10))
    assert not np.array_equal(base, keyed_uniforms(42, "other", range(10)))
    assert not np.array_equal(base, keyed_uniforms(43, "k", range(10)))
    assert np.all((base >= 0) & (base < 1))


def test_create_support_requires_specimens(singlet):
    with pytest.raises(MeasurementError):
        create_support(singlet.state, 0, 42)


def test_measure_is_deterministic(ideal):
    first = create_support(ideal.state, 500, 7, ideal.observables)
    second = create_support(ideal.state, 500, 7, ideal.observables)
    assert measure(first, first.ids, [ideal.T, ideal.Y]) == measure(second, second.ids, [ideal.T, ideal.Y])


def test_measure_threads_do_not_change_outcomes(ideal):
    single = create_support(ideal.state, 1000, 11, ideal.observables)
    pooled = create_support(ideal.state, 1000, 11, ideal.observables)
    assert measure(single, single.ids, [ideal.T, ideal.Y], threads=1) == \
        measure(pooled, pooled.ids, [ideal.T, ideal.Y], threads=4)


def test_measure_rejects_non_commuting_set(ideal):
    support = create_support(ideal.state, 10, 1, ideal.observables)
    with pytest.raises(CommutationError):
        measure(support, support.ids, [ideal.E, ideal.G])


def test_measure_unknown_specimen(ideal):
    support = create_support(ideal.state, 3, 1, ideal.observables)
    with pytest.raises(MeasurementError):
        measure(support, [3], [ideal.T])


def test_exclusion_of_incompatible_measurements(singlet):
    """Test that B cannot be measured on a specimen that already carries A."""
    support = create_support(singlet.state, 4, 1, singlet.observables)
    measure(support, [0, 1], [singlet.A])
    with pytest.raises(MeasurementError):
        measure(support, [1], [singlet.B])
    measure(support, [2], [singlet.B])


def test_same_axis_anti_correlation(singlet):
    """Test a(x) = -p(x) on every specimen of a same-axis joint measurement."""
    support = create_support(singlet.state, 100000, 42, singlet.observables)
    outcomes = measure(support, support.ids, [singlet.A, singlet.P])
    assert all(a == -p for a, p in outcomes.values())
    ups = sum(1 for a, _ in outcomes.values() if a == 1)
    assert abs(ups / 100000 - 0.5) < 4 * np.sqrt(0.25 / 100000)


def test_sequential_measurement_is_conditioned(singlet):
    """Test that P measured after A respects the anti-correlation."""
    support = create_support(singlet.state, 2000, 3, singlet.observables)
    first = measure(support, support.ids, [singlet.A])
    second = measure(support, support.ids, [singlet.P])
    assert all(second[i][0] == -first[i][0] for i in support.ids)


def test_record_measurement(ideal):
    support = create_support(ideal.state, 2, 1, ideal.observables)
    record_measurement(support, 0, {"T": 1, "Y": 0})
    specimen = support.specimen(0)
    assert specimen.measured == {"T": 1, "Y": 0}
    assert specimen.objective["T"].value == 1
    assert specimen.objective["T"].via == "T"


def test_record_measurement_validation(ideal):
    support = create_support(ideal.state, 2, 1, ideal.observables)
    with pytest.raises(MeasurementError):
        record_measurement(support, 0, {"T": -1})
    with pytest.raises(CommutationError):
        record_measurement(support, 0, {"E": 1, "G": 1})
    record_measurement(support, 1, {"E": 1})
    with pytest.raises(MeasurementError):
        record_measurement(support, 1, {"G": 0})


def test_policy_parse_and_spec():
    policy = MeasurementPolicy.parse("A,Q:0.5; P,B:0.5")
    assert [g.labels for g in policy.groups] == [("A", "Q"), ("P", "B")]
    assert policy.to_spec() == "A,Q:0.5;P,B:0.5"


@pytest.mark.parametrize("spec", ["A,Q:0.5;P,B:0.4", "A,Q", "A:x", "", "A,A:1.0", "A:1.5;B:-0.5"])
def test_policy_parse_errors(spec):
    with pytest.raises(PolicyError):
        MeasurementPolicy.parse(spec)


def test_policy_allocation_largest_remainder():
    policy = MeasurementPolicy.parse("A:0.333;B:0.667")
    assert policy.allocate(10) == [3, 7]
    assert sum(MeasurementPolicy.parse("A:0.25;B:0.25;P:0.25;Q:0.25").allocate(7)) == 7


def test_policy_rejects_non_commuting_group(singlet):
    support = create_support(singlet.state, 10, 1, singlet.observables)
    with pytest.raises(PolicyError):
        apply_policy(support, MeasurementPolicy.parse("A,B:1.0"))


def test_policy_rejects_unknown_label(singlet):
    support = create_support(singlet.state, 10, 1, singlet.observables)
    with pytest.raises(PolicyError):
        apply_policy(support, MeasurementPolicy.parse("A,Z:1.0"))


def test_apply_policy_blocks(singlet):
    support = create_support(singlet.state, 11, 5, singlet.observables)
    allocation = apply_policy(support, MeasurementPolicy.parse("A,Q:0.5;P,B:0.5"))
    assert allocation[("A", "Q")] == [0, 1, 2, 3, 4, 5]
    assert allocation[("P", "B")] == [6, 7, 8, 9, 10]
    assert measured_set(support, "A") == frozenset(range(6))


def test_strict_extension_epr_guard(singlet):
    """Test that every inference in a mixed EPR run is refused by the locality guard."""
    n = 400
    support = create_support(singlet.state, n, 42, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A,Q:0.5;P,B:0.5"))
    assigned = sum(apply_strict_extension(support, rule) for rule in singlet.rules)

    assert assigned == 0
    assert len(support.refusals) == 2 * n
    aq = measured_set(support, "A") & measured_set(support, "Q")
    for refusal in support.refusals:
        if refusal.specimen_id in aq:
            assert (refusal.target, refusal.blocked_by) in {("P", "Q"), ("B", "A")}
        else:
            assert (refusal.target, refusal.blocked_by) in {("A", "B"), ("Q", "P")}
    assert simultaneous_reality_set(support, "P", "Q") == frozenset()


def test_strict_extension_assigns_without_blockers(singlet):
    support = create_support(singlet.state, 50, 9, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A:1.0"))
    assigned = apply_strict_extension(support, singlet.rules[0])
    assert assigned == 50
    for specimen in support.specimens:
        assert specimen.objective["P"].value == -specimen.measured["A"]
        assert specimen.objective["P"].via == "A"
    assert objective_set(support, "Q") == frozenset()


def test_wide_extension_fills_every_specimen(singlet):
    support = create_support(singlet.state, 300, 42, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A:0.25;B:0.25;P:0.25;Q:0.25"))
    for rule in singlet.rules:
        apply_wide_extension(support, rule)
    assert simultaneous_reality_set(support, "P", "Q") == frozenset(support.ids)
    for specimen in support.specimens:
        assert specimen.objective["A"].value == -specimen.objective["P"].value
        assert specimen.objective["B"].value == -specimen.objective["Q"].value
    born = [s for s in support.specimens if any(v.via == "born" for v in s.objective.values())]
    assert born


def test_wide_extension_is_deterministic(singlet):
    def run():
        support = create_support(singlet.state, 200, 4, singlet.observables)
        apply_policy(support, MeasurementPolicy.parse("A:0.5;Q:0.5"))
        for rule in singlet.rules:
            apply_wide_extension(support, rule)
        return [s.to_dict() for s in support.specimens]

    assert run() == run()


def test_extension_conflict(singlet):
    support = create_support(singlet.state, 1, 1, singlet.observables)
    record_measurement(support, 0, {"A": 1, "P": 1})
    with pytest.raises(ExtensionConflictError):
        apply_strict_extension(support, singlet.rules[0])


def test_extension_requires_certified_rule(singlet):
    support = create_support(singlet.state, 1, 1, singlet.observables)
    rule = CorrelationRule(singlet.A, singlet.P, singlet.state, Direction.IFF)
    with pytest.raises(CertificationError):
        apply_strict_extension(support, rule)


def test_extension_requires_same_state(singlet, ideal):
    support = create_support(ideal.state, 1, 1, ideal.observables)
    with pytest.raises(CertificationError):
        apply_strict_extension(support, singlet.rules[0])


def test_extension_requires_separated_pair(ideal):
    support = create_support(ideal.state, 1, 1, ideal.observables)
    rule = certify_correlation(ideal.E, ideal.E, ideal.state)
    with pytest.raises(SeparationError):
        apply_strict_extension(support, rule)


def test_epr_intersection_identity(singlet):
    support = create_support(singlet.state, 100, 2, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A,Q:0.3;P,B:0.3;A:0.2;Q:0.2"))
    a, b, p, q = (measured_set(support, label) for label in "ABPQ")
    xy = epr_intersection(support)
    assert xy == (a & q) | (p & b)
    assert len(xy) == 60


def test_check_record_correlation(singlet):
    support = create_support(singlet.state, 500, 8, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A,P:0.5;B,Q:0.5"))
    assert all(check_record_correlation(support, rule) for rule in singlet.rules)

    broken = create_support(singlet.state, 1, 1, singlet.observables)
    record_measurement(broken, 0, {"A": 1, "P": 1})
    assert not check_record_correlation(broken, singlet.rules[0])


def test_measured_and_objective_sets(ideal):
    support = create_support(ideal.state, 3, 1, ideal.observables)
    record_measurement(support, 0, {"T": 1})
    record_measurement(support, 1, {"T": 0})
    assert measured_set(support, ideal.T) == {0, 1}
    assert measured_set(support, "T", 1) == {0}
    assert objective_set(support, "T", 0) == {1}


def test_measure_identity_gives_one_everywhere(ideal):
    support = create_support(ideal.state, 300, 3, ideal.observables)
    sure = identity_observable(ideal.state.dim, Site("lab"))
    outcomes = measure(support, support.ids, [sure])
    assert set(outcomes.values()) == {(1,)}
    assert measured_set(support, sure, 1) == frozenset(support.ids)


def test_measured_set_partition(singlet):
    support = create_support(singlet.state, 400, 6, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A,Q:0.5;A:0.25;B:0.25"))
    a, a_plus, a_minus = (measured_set(support, "A", v) for v in (None, 1, -1))
    assert a_plus | a_minus == a
    assert not a_plus & a_minus
    assert a_plus and a_minus


def test_measure_after_wide_extension_reveals_held_values(singlet):
    """Test that a measurement reads out the value a specimen already holds."""
    support = create_support(singlet.state, 200, 42, singlet.observables)
    for rule in singlet.rules:
        apply_wide_extension(support, rule)
    held = {s.id: s.objective["A"].value for s in support.specimens}

    outcomes = measure(support, support.ids, [singlet.A])
    assert {i: a for i, (a,) in outcomes.items()} == held
    for specimen in support.specimens:
        assert specimen.measured["A"] == specimen.objective["A"].value

    partner = measure(support, support.ids, [singlet.P])
    assert all(partner[i][0] == -held[i] for i in support.ids)


def test_measure_after_wide_extension_samples_free_targets(singlet):
    support = create_support(singlet.state, 2000, 5, singlet.observables)
    apply_wide_extension(support, singlet.rules[0])
    outcomes = measure(support, support.ids, [singlet.A, singlet.Q])
    assert all(a == support.specimen(i).objective["A"].value for i, (a, _) in outcomes.items())
    ups = sum(1 for _, q in outcomes.values() if q == 1)
    assert abs(ups / 2000 - 0.5) < 4 * np.sqrt(0.25 / 2000)


def test_record_measurement_checks_before_writing(singlet):
    support = create_support(singlet.state, 1, 1, singlet.observables)
    apply_wide_extension(support, singlet.rules[0])
    held = support.specimen(0).objective["A"].value
    with pytest.raises(ExtensionConflictError):
        record_measurement(support, 0, {"Q": 1, "A": -held})
    assert support.specimen(0).measured == {}
    record_measurement(support, 0, {"Q": 1, "A": held})
    assert support.specimen(0).measured == {"Q": 1, "A": held}


def test_measure_rejects_impossible_records(singlet):
    """Test A=1, P=1 (probability 0 in the singlet) cannot condition a measurement."""
    support = create_support(singlet.state, 1, 1, singlet.observables)
    record_measurement(support, 0, {"A": 1, "P": 1})
    sure = identity_observable(singlet.state.dim, Site("lab"))
    with pytest.raises(MeasurementError):
        measure(support, [0], [sure])
    assert "1" not in support.specimen(0).measured


def test_strict_extension_domain_is_exact(singlet):
    """Test that each side of A <-> -P gets a value exactly on A ∪ P minus the refused specimens."""
    support = create_support(singlet.state, 500, 13, singlet.observables)
    apply_policy(support, MeasurementPolicy.parse("A,Q:0.3;P,B:0.3;A:0.2;P:0.2"))
    rule = singlet.rules[0]
    apply_strict_extension(support, rule)
    domain = measured_set(support, "A") | measured_set(support, "P")
    for target in ("A", "P"):
        refused = {r.specimen_id for r in support.refusals if r.target == target}
        assert refused
        assert objective_set(support, target) == domain - refused
