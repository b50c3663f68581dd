"""States, site-tagged observables and the probability predicates built on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from . import linalg
from .exceptions import (
    CertificationError,
    CommutationError,
    DimensionError,
    ObservableError,
    SeparationError,
    ZeroProbabilityError,
)
from .linalg import CMatrix, CVector, DEFAULT_TOL

logger = logging.getLogger(__name__)

# Denominators below this are treated as zero-probability conditioning events.
ZERO_PROBABILITY = 1e-12


class SpectrumKind(Enum):
    """Declared spectrum of an observable."""

    TWO_VALUE = "two-value"  # {1, -1}
    ZERO_ONE = "zero-one"  # {1, 0}

    @property
    def outcomes(self) -> Tuple[int, int]:
        """Canonical outcome labels, positive first."""
        return (1, -1) if self is SpectrumKind.TWO_VALUE else (1, 0)

    @property
    def negative(self) -> int:
        return self.outcomes[1]


class Direction(Enum):
    """Direction of a perfect correlation."""

    IMPLIES = "->"
    IFF = "<->"


class Sign(Enum):
    """Sign of a perfect correlation (A <-> -P is MINUS)."""

    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class Site:
    """
    Spatial region tag.

    ``dims``/``slot`` optionally describe where the region's degrees of freedom
    sit in a bipartite space, e.g. ``Site("R_I", dims=(6, 4), slot=0)``.
    """

    name: str
    dims: Optional[Tuple[int, int]] = None
    slot: Optional[int] = None


@dataclass(frozen=True, eq=False)
class StateVector:
    """A unit vector of a finite-dimensional Hilbert space."""

    vec: CVector
    label: str = "psi"
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vec", linalg.as_vector(self.vec))
        deviation = abs(linalg.norm(self.vec) - 1.0)
        if deviation > self.tol:
            raise DimensionError(f"State '{self.label}' is not normalized (| ||psi|| - 1 | = {deviation:.3e})")

    @property
    def dim(self) -> int:
        return int(self.vec.shape[0])

    def density(self) -> CMatrix:
        """Projector onto the state."""
        return linalg.outer(self.vec, self.vec)

    def same_as(self, other: "StateVector", tol: float = DEFAULT_TOL) -> bool:
        """Equal vectors within ``tol`` (no phase freedom)."""
        return self.dim == other.dim and linalg.allclose(self.vec, other.vec, tol)


@dataclass(frozen=True, eq=False)
class Observable:
    """A self-adjoint operator with declared spectrum kind and site tag."""

    op: CMatrix
    kind: SpectrumKind
    site: Site
    label: str
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "op", linalg.as_matrix(self.op))
        if self.op.shape[0] != self.op.shape[1]:
            raise DimensionError(f"Observable '{self.label}' is not square: {self.op.shape}")
        if not linalg.is_hermitian(self.op, self.tol):
            raise ObservableError(f"Observable '{self.label}' is not self-adjoint")
        if self.kind is SpectrumKind.ZERO_ONE:
            if not linalg.is_projector(self.op, self.tol):
                raise ObservableError(f"0-1 observable '{self.label}' is not a projector")
        else:
            square = self.op @ self.op
            if linalg.frobenius_norm(square - np.eye(self.dim)) > self.tol:
                raise ObservableError(f"Two-value observable '{self.label}' does not square to the identity")
        self._check_tensor_form()

    def _check_tensor_form(self) -> None:
        dims, slot = self.site.dims, self.site.slot
        if dims is None or slot is None:
            return
        d0, d1 = dims
        if d0 * d1 != self.dim:
            raise DimensionError(f"Site {self.site.name} declares dims {dims} but '{self.label}' has dim {self.dim}")
        local = reduce_to_slot(self.op, dims, slot)
        if not linalg.allclose(embed(local, dims, slot), self.op, self.tol):
            raise ObservableError(f"Observable '{self.label}' does not act on {self.site.name} alone")

    @property
    def dim(self) -> int:
        return int(self.op.shape[0])

    @property
    def outcomes(self) -> Tuple[int, int]:
        return self.kind.outcomes

    def same_as(self, other: "Observable", tol: float = DEFAULT_TOL) -> bool:
        """Same operator, kind and site."""
        return (
            self.kind is other.kind
            and self.site.name == other.site.name
            and self.dim == other.dim
            and linalg.allclose(self.op, other.op, tol)
        )


def embed(local: ArrayLike, dims: Tuple[int, int], slot: int) -> CMatrix:
    """``local ⊗ 1`` for slot 0, ``1 ⊗ local`` for slot 1."""
    d0, d1 = dims
    if slot == 0:
        return linalg.tensor(local, linalg.identity(d1))
    if slot == 1:
        return linalg.tensor(linalg.identity(d0), local)
    raise DimensionError(f"Slot must be 0 or 1, got {slot}")


def reduce_to_slot(op: ArrayLike, dims: Tuple[int, int], slot: int) -> CMatrix:
    """Normalized partial trace of ``op`` onto one factor."""
    d0, d1 = dims
    blocks = np.asarray(op, dtype=complex).reshape(d0, d1, d0, d1)
    if slot == 0:
        return linalg.as_matrix(np.einsum("ijkj->ik", blocks) / d1)
    return linalg.as_matrix(np.einsum("ijil->jl", blocks) / d0)


def identity_observable(dim: int, site: Site, label: str = "1") -> Observable:
    """The sure event on a ``dim``-dimensional space."""
    return Observable(linalg.identity(dim), SpectrumKind.ZERO_ONE, site, label)


def spectral_projector(a: Observable, outcome: int) -> CMatrix:
    """Projector onto the eigenspace of ``a`` for ``outcome``."""
    if outcome not in a.outcomes:
        raise ObservableError(f"Outcome {outcome} not in spectrum {a.outcomes} of '{a.label}'")
    eye = np.eye(a.dim, dtype=complex)
    if a.kind is SpectrumKind.TWO_VALUE:
        return linalg.as_matrix((eye + outcome * a.op) / 2)
    return linalg.as_matrix(a.op if outcome == 1 else eye - a.op)


def _check_dims(psi: StateVector, *observables: Observable) -> None:
    for obs in observables:
        if obs.dim != psi.dim:
            raise DimensionError(f"Observable '{obs.label}' (dim {obs.dim}) does not act on '{psi.label}' (dim {psi.dim})")


def _require_commuting(a: Observable, b: Observable, tol: float) -> None:
    if linalg.commutator_norm(a.op, b.op) > tol:
        raise CommutationError(f"'{a.label}' and '{b.label}' do not commute")


def born_probability(a: Observable, outcome: int, psi: StateVector) -> float:
    """Probability ``<psi|Pi_outcome psi>`` of obtaining ``outcome`` for ``a``."""
    _check_dims(psi, a)
    return linalg.expectation(spectral_projector(a, outcome), psi.vec)


def joint_probability(
    observables: Sequence[Observable],
    outcomes: Sequence[int],
    psi: StateVector,
    tol: float = DEFAULT_TOL,
) -> float:
    """Joint Born probability of outcomes for a pairwise commuting family."""
    if len(observables) != len(outcomes):
        raise DimensionError("One outcome per observable is required")
    _check_dims(psi, *observables)
    for i, a in enumerate(observables):
        for b in observables[i + 1:]:
            _require_commuting(a, b, tol)
    vec = psi.vec
    for obs, outcome in zip(observables, outcomes):
        vec = spectral_projector(obs, outcome) @ vec
    return float(np.vdot(vec, vec).real)


def conditional_probability(
    a: Observable,
    given: Observable,
    psi: StateVector,
    tol: float = DEFAULT_TOL,
) -> float:
    """``p(a=1 | given=1) = <psi|Pi_a Pi_given psi> / <psi|Pi_given psi>``."""
    _check_dims(psi, a, given)
    _require_commuting(a, given, tol)
    denominator = born_probability(given, 1, psi)
    if denominator <= ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"p({given.label}=1) vanishes in '{psi.label}'")
    numerator = linalg.expectation(spectral_projector(a, 1) @ spectral_projector(given, 1), psi.vec)
    return numerator / denominator


def quantum_implies(a: Observable, b: Observable, psi: StateVector, tol: float = DEFAULT_TOL) -> bool:
    """True iff outcome 1 for ``a`` forces outcome 1 for ``b`` in ``psi``."""
    _check_dims(psi, a, b)
    _require_commuting(a, b, tol)
    pa = spectral_projector(a, 1)
    not_b = np.eye(b.dim, dtype=complex) - spectral_projector(b, 1)
    return linalg.expectation(pa @ not_b, psi.vec) <= tol


def perfectly_correlated(a: Observable, b: Observable, psi: StateVector, tol: float = DEFAULT_TOL) -> bool:
    """
    Perfect correlation ``a <-> b`` in ``psi``.

    For two 0-1 observables this is the vector identity ``a psi = b psi``;
    otherwise it falls back to ``quantum_implies`` in both directions.
    """
    _check_dims(psi, a, b)
    if a.kind is not SpectrumKind.ZERO_ONE or b.kind is not SpectrumKind.ZERO_ONE:
        return quantum_implies(a, b, psi, tol) and quantum_implies(b, a, psi, tol)

    distance = linalg.norm(a.op @ psi.vec - b.op @ psi.vec)
    if distance > tol:
        return False
    check_tol = max(tol, DEFAULT_TOL)
    if linalg.commutator_norm(a.op, b.op) <= check_tol:
        for x, y in ((a, b), (b, a)):
            if born_probability(y, 1, psi) <= ZERO_PROBABILITY:
                continue
            p = conditional_probability(x, y, psi, check_tol)
            if abs(p - 1.0) > check_tol:
                raise CertificationError(f"{a.label} psi = {b.label} psi but p({x.label}|{y.label}) = {p}")
    return True


def negate(a: Observable) -> Observable:
    """The observable ``-A``; outcome labels swap, site is kept."""
    if a.kind is not SpectrumKind.TWO_VALUE:
        raise ObservableError(f"Cannot negate 0-1 observable '{a.label}'")
    label = a.label[1:] if a.label.startswith("-") else f"-{a.label}"
    return Observable(-a.op, a.kind, a.site, label, a.tol)


def are_separated(a: Observable, b: Observable, tol: float = DEFAULT_TOL) -> bool:
    """
    True iff the observables live at different sites.

    Separated observables must commute; a separated pair that does not is a
    model-construction bug and raises SeparationError.
    """
    if a.site.name == b.site.name:
        return False
    if linalg.commutator_norm(a.op, b.op) > tol:
        raise SeparationError(f"'{a.label}' at {a.site.name} and '{b.label}' at {b.site.name} are separated but do not commute")
    return True


@dataclass(frozen=True, eq=False)
class CorrelationRule:
    """A perfect correlation between two observables in a state.

    Obtain certified instances through :func:`certify_correlation`.
    """

    a: Observable
    b: Observable
    state: StateVector
    direction: Direction
    sign: Sign = Sign.PLUS
    certified: bool = False
    tol: float = field(default=DEFAULT_TOL, repr=False)

    @property
    def label(self) -> str:
        minus = "-" if self.sign is Sign.MINUS else ""
        return f"{self.a.label}{self.direction.value}{minus}{self.b.label}"

    def _flip(self, value: int, source: Observable, target: Observable) -> int:
        positive = value == 1
        if self.sign is Sign.MINUS:
            positive = not positive
        return target.outcomes[0] if positive else target.outcomes[1]

    def implied_b(self, a_value: int) -> Optional[int]:
        """Value of ``b`` forced by ``a = a_value``, or None."""
        if a_value not in self.a.outcomes:
            raise ObservableError(f"Outcome {a_value} not in spectrum of '{self.a.label}'")
        if self.direction is Direction.IMPLIES and a_value != 1:
            return None
        return self._flip(a_value, self.a, self.b)

    def implied_a(self, b_value: int) -> Optional[int]:
        """Value of ``a`` forced by ``b = b_value``, or None."""
        if b_value not in self.b.outcomes:
            raise ObservableError(f"Outcome {b_value} not in spectrum of '{self.b.label}'")
        b_effective_positive = (b_value == 1) != (self.sign is Sign.MINUS)
        if self.direction is Direction.IMPLIES and b_effective_positive:
            return None
        return self._flip(b_value, self.b, self.a)


def certify_correlation(
    a: Observable,
    b: Observable,
    psi: StateVector,
    direction: Direction = Direction.IFF,
    sign: Sign = Sign.PLUS,
    tol: float = DEFAULT_TOL,
) -> CorrelationRule:
    """Certify ``a -> (±b)`` or ``a <-> (±b)`` in ``psi`` and return the rule."""
    try:
        partner = negate(b) if sign is Sign.MINUS else b
    except ObservableError as e:
        raise CertificationError(f"Anti-correlation needs a two-value partner: {e}")

    if direction is Direction.IMPLIES:
        holds = quantum_implies(a, partner, psi, tol)
    else:
        holds = perfectly_correlated(a, partner, psi, tol)

    rule = CorrelationRule(a, b, psi, direction, sign, certified=holds, tol=tol)
    if not holds:
        raise CertificationError(f"Correlation {rule.label} does not hold in '{psi.label}'")
    logger.debug("Certified %s in %s", rule.label, psi.label)
    return rule
