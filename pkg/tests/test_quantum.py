"""Tests for states, observables and probability predicates."""

import math

import numpy as np
import pytest

from src import linalg
from src.exceptions import (
    CertificationError,
    CommutationError,
    DimensionError,
    ObservableError,
    SeparationError,
    ZeroProbabilityError,
)
from src.quantum import (
    Direction,
    Observable,
    Sign,
    Site,
    SpectrumKind,
    StateVector,
    are_separated,
    born_probability,
    certify_correlation,
    conditional_probability,
    embed,
    identity_observable,
    joint_probability,
    negate,
    perfectly_correlated,
    quantum_implies,
    reduce_to_slot,
    spectral_projector,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
QUBIT = Site("q")


def test_state_must_be_normalized():
    with pytest.raises(DimensionError):
        StateVector(np.array([1.0, 1.0]))


def test_observable_must_be_self_adjoint():
    with pytest.raises(ObservableError):
        Observable(np.array([[0, 1], [0, 0]]), SpectrumKind.TWO_VALUE, QUBIT, "N")


def test_zero_one_observable_must_be_projector():
    with pytest.raises(ObservableError):
        Observable(SIGMA_Z, SpectrumKind.ZERO_ONE, QUBIT, "Z")


def test_two_value_observable_must_square_to_identity():
    with pytest.raises(ObservableError):
        Observable(np.diag([1, 0]), SpectrumKind.TWO_VALUE, QUBIT, "P")


def test_observable_tensor_form_checked_against_site():
    """Test that an operator acting on both factors is rejected at a single site."""
    site = Site("R_1", dims=(2, 2), slot=0)
    with pytest.raises(ObservableError):
        Observable(linalg.tensor(SIGMA_Z, SIGMA_Z), SpectrumKind.TWO_VALUE, site, "ZZ")


def test_embed_and_reduce():
    local = np.diag([1, 0, 0]).astype(complex)
    op = embed(local, (3, 2), 0)
    assert op.shape == (6, 6)
    assert linalg.allclose(reduce_to_slot(op, (3, 2), 0), local)
    with pytest.raises(DimensionError):
        embed(local, (3, 2), 2)


def test_spectral_projector_two_value():
    z = Observable(SIGMA_Z, SpectrumKind.TWO_VALUE, QUBIT, "Z")
    assert linalg.allclose(spectral_projector(z, 1), np.diag([1, 0]))
    assert linalg.allclose(spectral_projector(z, -1), np.diag([0, 1]))
    with pytest.raises(ObservableError):
        spectral_projector(z, 0)


def test_born_probability_sums_to_one():
    plus = StateVector(np.array([1, 1]) / math.sqrt(2))
    x = Observable(SIGMA_X, SpectrumKind.TWO_VALUE, QUBIT, "X")
    z = Observable(SIGMA_Z, SpectrumKind.TWO_VALUE, QUBIT, "Z")
    assert born_probability(x, 1, plus) == pytest.approx(1.0)
    assert born_probability(z, 1, plus) == pytest.approx(0.5)
    assert born_probability(z, 1, plus) + born_probability(z, -1, plus) == pytest.approx(1.0)


def test_born_probability_dimension_mismatch(ideal):
    z = Observable(SIGMA_Z, SpectrumKind.TWO_VALUE, QUBIT, "Z")
    with pytest.raises(DimensionError):
        born_probability(z, 1, ideal.state)


def test_conditional_probability_ideal(ideal):
    """Test p(E|T) = p(T|E) = p(G|Y) = p(Y|G) = 1."""
    for a, given in ((ideal.E, ideal.T), (ideal.T, ideal.E), (ideal.G, ideal.Y), (ideal.Y, ideal.G)):
        assert conditional_probability(a, given, ideal.state) == pytest.approx(1.0, abs=1e-12)


def test_conditional_probability_requires_commuting(ideal):
    with pytest.raises(CommutationError):
        conditional_probability(ideal.E, ideal.G, ideal.state)


def test_conditional_probability_zero_denominator():
    up = StateVector(np.array([1, 0]))
    down = Observable(np.diag([0, 1]), SpectrumKind.ZERO_ONE, QUBIT, "D")
    with pytest.raises(ZeroProbabilityError):
        conditional_probability(down, down, up)


def test_joint_probability_ideal(ideal):
    """Test joint (T, Y) Born values against the amplitudes of psi."""
    expected = {(1, 1): 1 / 8, (1, 0): 3 / 8, (0, 1): 3 / 8, (0, 0): 1 / 8}
    for outcome, p in expected.items():
        assert joint_probability([ideal.T, ideal.Y], outcome, ideal.state) == pytest.approx(p, abs=1e-12)


def test_joint_probability_non_commuting(ideal):
    with pytest.raises(CommutationError):
        joint_probability([ideal.E, ideal.G], (1, 1), ideal.state)


def test_quantum_implies(ideal):
    assert quantum_implies(ideal.E, ideal.T, ideal.state)
    assert quantum_implies(ideal.T, ideal.E, ideal.state)
    assert not quantum_implies(ideal.T, ideal.Y, ideal.state)


def test_quantum_implies_fails_for_uncorrelated_pair(ideal):
    """Test p(Y=1|E=1) = 1/4, so E does not imply Y."""
    assert conditional_probability(ideal.Y, ideal.E, ideal.state) == pytest.approx(0.25)
    assert not quantum_implies(ideal.E, ideal.Y, ideal.state)


def test_perfectly_correlated_zero_one(ideal):
    assert perfectly_correlated(ideal.E, ideal.T, ideal.state)
    assert perfectly_correlated(ideal.G, ideal.Y, ideal.state)
    assert not perfectly_correlated(ideal.E, ideal.Y, ideal.state)


def test_perfectly_correlated_singlet(singlet):
    """Test A <-> -P holds while A <-> P does not."""
    assert perfectly_correlated(singlet.A, negate(singlet.P), singlet.state)
    assert not perfectly_correlated(singlet.A, singlet.P, singlet.state)


def test_negate():
    z = Observable(SIGMA_Z, SpectrumKind.TWO_VALUE, QUBIT, "Z")
    minus_z = negate(z)
    assert minus_z.label == "-Z"
    assert negate(minus_z).label == "Z"
    assert linalg.allclose(minus_z.op, -SIGMA_Z)
    with pytest.raises(ObservableError):
        negate(identity_observable(2, QUBIT))


def test_are_separated(singlet, ideal):
    assert are_separated(singlet.A, singlet.P)
    assert not are_separated(singlet.A, singlet.B)
    assert not are_separated(ideal.E, ideal.G)


def test_separated_but_non_commuting_raises():
    x = Observable(SIGMA_X, SpectrumKind.TWO_VALUE, Site("left"), "X")
    z = Observable(SIGMA_Z, SpectrumKind.TWO_VALUE, Site("right"), "Z")
    with pytest.raises(SeparationError):
        are_separated(x, z)


def test_certify_correlation_ideal(ideal):
    rule = certify_correlation(ideal.E, ideal.T, ideal.state)
    assert rule.certified
    assert rule.label == "E<->T"
    assert rule.implied_b(1) == 1
    assert rule.implied_a(0) == 0


def test_certify_correlation_singlet(singlet):
    rule = certify_correlation(singlet.A, singlet.P, singlet.state, Direction.IFF, Sign.MINUS)
    assert rule.label == "A<->-P"
    assert rule.implied_b(1) == -1
    assert rule.implied_b(-1) == 1
    assert rule.implied_a(1) == -1


def test_certify_correlation_failure(ideal):
    with pytest.raises(CertificationError):
        certify_correlation(ideal.E, ideal.Y, ideal.state)


def test_certify_anti_correlation_needs_two_value(ideal):
    with pytest.raises(CertificationError):
        certify_correlation(ideal.E, ideal.T, ideal.state, Direction.IFF, Sign.MINUS)


def test_implies_rule_forces_only_contrapositive(ideal):
    """Test an implication fixes b only for a=1 and a only for b=0."""
    rule = certify_correlation(ideal.E, ideal.T, ideal.state, Direction.IMPLIES)
    assert rule.label == "E->T"
    assert rule.implied_b(1) == 1
    assert rule.implied_b(0) is None
    assert rule.implied_a(0) == 0
    assert rule.implied_a(1) is None


def test_implied_value_outside_spectrum(singlet):
    rule = singlet.rules[0]
    with pytest.raises(ObservableError):
        rule.implied_b(0)
