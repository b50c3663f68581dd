"""Concrete supports: seeded measurement records and objective-value bookkeeping.

A :class:`Support` is a finite set of specimens prepared in one state. Each
specimen carries the outcomes actually obtained on it (``measured``) and the
values it objectively possesses (``objective``). Measured values are objective
values too. The strict and wide extension passes add objective values licensed
by certified perfect correlations.

Randomness is counter-based: the uniform used for specimen ``i`` under key
``k`` is the ``i``-th draw of a Philox stream keyed by ``(seed, k)``, so results
do not depend on iteration order, chunking or threads.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import linalg
from .exceptions import (
    CertificationError,
    CommutationError,
    ExtensionConflictError,
    MeasurementError,
    PolicyError,
    RealityLabError,
    SeparationError,
)
from .linalg import CMatrix, DEFAULT_TOL
from .quantum import (
    ZERO_PROBABILITY,
    CorrelationRule,
    Direction,
    Observable,
    StateVector,
    are_separated,
    spectral_projector,
)

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

Records = Tuple[Tuple[str, int], ...]
LabelOrObservable = Union[str, Observable]


def keyed_uniforms(seed: int, key: str, ids: Iterable[int]) -> np.ndarray:
    """Uniforms in [0, 1) at positions ``ids`` of the Philox stream keyed by ``(seed, key)``."""
    positions = np.asarray(list(ids), dtype=np.int64)
    if positions.size == 0:
        return np.empty(0)
    digest = int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    bit_generator = np.random.Philox(key=np.array([seed & MASK64, digest], dtype=np.uint64))
    stream = np.random.Generator(bit_generator).random(int(positions.max()) + 1)
    return stream[positions]


@dataclass(frozen=True)
class ObjectiveValue:
    """An objective value and what licensed it.

    ``via`` is the observable whose value the assignment was inferred from
    (the observable itself for measured values, ``"born"`` for values drawn
    by the wide extension).
    """

    value: int
    via: str
    rule: Optional[str] = None


@dataclass(slots=True)
class Specimen:
    """One individual system of a support."""

    id: int
    measured: Dict[str, int] = field(default_factory=dict)
    objective: Dict[str, ObjectiveValue] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "measured": dict(sorted(self.measured.items())),
            "objective": {
                label: {"value": v.value, "via": v.via}
                for label, v in sorted(self.objective.items())
            },
        }


@dataclass(frozen=True)
class Refusal:
    """An inference the locality guard refused."""

    specimen_id: int
    target: str
    blocked_by: str
    rule: str


@dataclass
class Support:
    """A finite concrete set of specimens prepared in ``state``."""

    state: StateVector
    specimens: List[Specimen]
    seed: int
    observables: Dict[str, Observable] = field(default_factory=dict)
    refusals: List[Refusal] = field(default_factory=list)
    # (history family, specimen id -> elementary index) per bound family, in binding order
    history_bindings: List[Tuple[Any, Dict[int, Tuple[int, ...]]]] = field(default_factory=list, repr=False)
    tol: float = DEFAULT_TOL
    _projectors: Dict[Tuple[str, int], CMatrix] = field(default_factory=dict, repr=False)
    _incompatible: Dict[str, FrozenSet[str]] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.specimens)

    @property
    def ids(self) -> range:
        return range(len(self.specimens))

    def specimen(self, specimen_id: int) -> Specimen:
        if not 0 <= specimen_id < len(self.specimens):
            raise MeasurementError(f"Unknown specimen id {specimen_id}")
        return self.specimens[specimen_id]

    def observable(self, item: LabelOrObservable) -> Observable:
        label = item.label if isinstance(item, Observable) else item
        if label not in self.observables:
            raise MeasurementError(f"Observable '{label}' is not registered on this support")
        return self.observables[label]

    def projector(self, label: str, outcome: int) -> CMatrix:
        key = (label, outcome)
        if key not in self._projectors:
            self._projectors[key] = spectral_projector(self.observable(label), outcome)
        return self._projectors[key]

    def incompatible_with(self, label: str) -> FrozenSet[str]:
        """Registered labels whose operators do not commute with ``label``."""
        if label not in self._incompatible:
            target = self.observable(label)
            self._incompatible[label] = frozenset(
                other for other, obs in self.observables.items()
                if linalg.commutator_norm(obs.op, target.op) > self.tol
            )
        return self._incompatible[label]

    def guard_blockers(self, label: str) -> FrozenSet[str]:
        """Labels that, once measured on a specimen, void inferences to ``label`` there."""
        site = self.observable(label).site.name
        return frozenset(
            other for other in self.incompatible_with(label)
            if self.observables[other].site.name == site
        )


def create_support(
    psi: StateVector,
    n: int,
    seed: int,
    observables: Sequence[Observable] = (),
    tol: float = DEFAULT_TOL,
) -> Support:
    """Create ``n`` unmeasured specimens of ``psi``."""
    if n < 1:
        raise MeasurementError(f"A support needs at least one specimen, got n={n}")
    support = Support(state=psi, specimens=[Specimen(i) for i in range(n)], seed=seed, tol=tol)
    register(support, *observables)
    return support


def register(support: Support, *observables: Observable) -> None:
    """Add observables to the support's label registry."""
    for obs in observables:
        if obs.dim != support.state.dim:
            raise MeasurementError(f"Observable '{obs.label}' does not act on the support's state space")
        existing = support.observables.get(obs.label)
        if existing is not None:
            if not existing.same_as(obs, support.tol):
                raise MeasurementError(f"Label '{obs.label}' already registered for a different observable")
            continue
        support.observables[obs.label] = obs
        support._incompatible.clear()


def _check_exclusion(support: Support, specimen: Specimen, labels: Sequence[str]) -> None:
    for label in labels:
        clash = support.incompatible_with(label) & specimen.measured.keys()
        if clash:
            raise MeasurementError(
                f"Specimen {specimen.id} already carries a measurement of {sorted(clash)}, "
                f"which does not commute with '{label}'"
            )


def _set_objective(specimen: Specimen, label: str, value: ObjectiveValue) -> int:
    existing = specimen.objective.get(label)
    if existing is not None:
        if existing.value != value.value:
            raise ExtensionConflictError(
                f"Specimen {specimen.id}: {label} already holds {existing.value} (via {existing.via}), "
                f"cannot assign {value.value} (via {value.via})"
            )
        return 0
    specimen.objective[label] = value
    return 1


def record_measurement(support: Support, specimen_id: int, outcomes: Mapping[str, int]) -> None:
    """
    Append revealed outcomes to a specimen, with the exclusion checks of ``measure``.

    Nothing is written unless every outcome agrees with the specimen's
    earlier records and objective values.
    """
    specimen = support.specimen(specimen_id)
    labels = list(outcomes)
    for i, label in enumerate(labels):
        obs = support.observable(label)
        if outcomes[label] not in obs.outcomes:
            raise MeasurementError(f"Outcome {outcomes[label]} not in spectrum of '{label}'")
        clash = support.incompatible_with(label) & set(labels[i + 1:])
        if clash:
            raise CommutationError(f"Cannot record '{label}' together with non-commuting {sorted(clash)}")
    _check_exclusion(support, specimen, labels)
    for label, outcome in outcomes.items():
        previous = specimen.measured.get(label)
        if previous is not None and previous != outcome:
            raise MeasurementError(f"Specimen {specimen_id}: {label} was already measured as {previous}")
        held = specimen.objective.get(label)
        if held is not None and held.value != outcome:
            raise ExtensionConflictError(
                f"Specimen {specimen_id}: {label} holds {held.value} (via {held.via}), cannot record {outcome}"
            )
    for label, outcome in outcomes.items():
        specimen.measured[label] = outcome
        _set_objective(specimen, label, ObjectiveValue(outcome, label))


def _condition(support: Support, records: Records) -> Tuple[np.ndarray, float]:
    conditioned = support.state.vec
    for label, outcome in records:
        conditioned = support.projector(label, outcome) @ conditioned
    return conditioned, float(np.vdot(conditioned, conditioned).real)


def _distribution(
    support: Support,
    targets: Sequence[Observable],
    records: Records,
) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    """
    Joint outcome distribution of ``targets`` conditioned on commuting ``records``.

    Raises:
        MeasurementError: If the records themselves have vanishing probability
    """
    conditioned, weight = _condition(support, records)
    if weight <= ZERO_PROBABILITY:
        raise MeasurementError(f"Records {dict(records)} have vanishing probability in '{support.state.label}'")

    combos = list(product(*(t.outcomes for t in targets)))
    probs = np.empty(len(combos))
    for k, combo in enumerate(combos):
        v = conditioned
        for target, outcome in zip(targets, combo):
            v = support.projector(target.label, outcome) @ v
        probs[k] = float(np.vdot(v, v).real) / weight
    probs[probs < support.tol] = 0.0
    probs /= probs.sum()
    return combos, probs


def _sample(combos: List[Tuple[int, ...]], probs: np.ndarray, uniforms: np.ndarray) -> List[Tuple[int, ...]]:
    cdf = np.cumsum(probs)
    idx = np.minimum(np.searchsorted(cdf, uniforms, side="right"), len(combos) - 1)
    return [combos[i] for i in idx]


def _possessed(specimen: Specimen, labels: Sequence[str]) -> Records:
    return tuple((label, specimen.objective[label].value) for label in labels if label in specimen.objective)


def _measure_chunk(
    support: Support,
    ids: Sequence[int],
    targets: Sequence[Observable],
    key: str,
) -> Dict[int, Tuple[int, ...]]:
    labels = [t.label for t in targets]
    groups: Dict[Tuple[Records, Records], List[int]] = {}
    for specimen_id in ids:
        specimen = support.specimens[specimen_id]
        signature = (tuple(sorted(specimen.measured.items())), _possessed(specimen, labels))
        groups.setdefault(signature, []).append(specimen_id)

    results: Dict[int, Tuple[int, ...]] = {}
    for (records, possessed), members in groups.items():
        held = dict(possessed)
        free = [t for t in targets if t.label not in held]
        try:
            combos, probs = _distribution(support, free, records + possessed)
        except MeasurementError:
            logger.debug("Held values %s rule each other out; conditioning on records only", held)
            combos, probs = _distribution(support, free, records)
        for specimen_id, combo in zip(members, _sample(combos, probs, keyed_uniforms(support.seed, key, members))):
            drawn = dict(zip((t.label for t in free), combo))
            outcome = tuple(held[label] if label in held else drawn[label] for label in labels)
            specimen = support.specimens[specimen_id]
            for label, value in zip(labels, outcome):
                specimen.measured[label] = value
                _set_objective(specimen, label, ObjectiveValue(value, label))
            results[specimen_id] = outcome
    return results


def _chunks(ids: Sequence[int], threads: int) -> List[Sequence[int]]:
    size = max(1, -(-len(ids) // max(1, threads)))
    return [ids[i:i + size] for i in range(0, len(ids), size)]


def measure(
    support: Support,
    specimen_ids: Iterable[int],
    observables: Sequence[Observable],
    threads: int = 1,
) -> Dict[int, Tuple[int, ...]]:
    """
    Jointly measure a commuting set of observables on the given specimens.

    Outcomes follow the Born distribution, conditioned on whatever the
    specimen already carries. A target that already holds an objective value
    on a specimen reveals that value. Returns specimen id -> outcome tuple in
    the order of ``observables``.
    """
    targets = list(observables)
    if not targets:
        return {}
    register(support, *targets)
    for i, a in enumerate(targets):
        for b in targets[i + 1:]:
            if linalg.commutator_norm(a.op, b.op) > support.tol:
                raise CommutationError(f"Cannot measure non-commuting '{a.label}' and '{b.label}' together")

    ids = list(specimen_ids)
    for specimen_id in ids:
        support.specimen(specimen_id)
    for specimen_id in ids:
        _check_exclusion(support, support.specimens[specimen_id], [t.label for t in targets])

    # Warm the caches before any worker thread reads them.
    for label, obs in support.observables.items():
        support.incompatible_with(label)
        for outcome in obs.outcomes:
            support.projector(label, outcome)

    key = "measure:" + "|".join(t.label for t in targets)
    if threads <= 1 or len(ids) < 2:
        results = _measure_chunk(support, ids, targets, key)
    else:
        results = {}
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(lambda chunk: _measure_chunk(support, chunk, targets, key), _chunks(ids, threads)):
                results.update(part)
    logger.info("Measured %s on %d specimens", ",".join(t.label for t in targets), len(ids))
    return results


@dataclass(frozen=True)
class PolicyGroup:
    """Observables measured jointly on a fraction of the support."""

    labels: Tuple[str, ...]
    fraction: float


@dataclass(frozen=True)
class MeasurementPolicy:
    """Partition of a support into jointly measured groups."""

    groups: Tuple[PolicyGroup, ...]

    def __post_init__(self):
        if not self.groups:
            raise PolicyError("A policy needs at least one group")
        for group in self.groups:
            if not group.labels:
                raise PolicyError("Policy groups must name at least one observable")
            if len(set(group.labels)) != len(group.labels):
                raise PolicyError(f"Duplicate label in policy group {group.labels}")
            if not 0.0 <= group.fraction <= 1.0:
                raise PolicyError(f"Fraction {group.fraction} for {group.labels} outside [0, 1]")
        total = sum(g.fraction for g in self.groups)
        if abs(total - 1.0) > 1e-9:
            raise PolicyError(f"Policy fractions sum to {total}, expected 1")

    @classmethod
    def parse(cls, spec: str) -> "MeasurementPolicy":
        """Parse ``"A,Q:0.5;P,B:0.5"``."""
        groups = []
        for chunk in filter(None, (c.strip() for c in spec.split(";"))):
            labels_part, sep, fraction_part = chunk.rpartition(":")
            if not sep:
                raise PolicyError(f"Policy group '{chunk}' lacks ':fraction'")
            try:
                fraction = float(fraction_part)
            except ValueError:
                raise PolicyError(f"Bad fraction '{fraction_part}' in policy group '{chunk}'")
            labels = tuple(label.strip() for label in labels_part.split(",") if label.strip())
            groups.append(PolicyGroup(labels, fraction))
        return cls(tuple(groups))

    def to_spec(self) -> str:
        return ";".join(f"{','.join(g.labels)}:{g.fraction:g}" for g in self.groups)

    def validate(self, observables: Mapping[str, Observable], tol: float = DEFAULT_TOL) -> None:
        """Check that every label is known and each group commutes pairwise."""
        for group in self.groups:
            for label in group.labels:
                if label not in observables:
                    raise PolicyError(f"Policy names unknown observable '{label}'")
            for i, a in enumerate(group.labels):
                for b in group.labels[i + 1:]:
                    if linalg.commutator_norm(observables[a].op, observables[b].op) > tol:
                        raise PolicyError(f"Policy group {group.labels} mixes non-commuting '{a}' and '{b}'")

    def allocate(self, n: int) -> List[int]:
        """Largest-remainder group sizes for ``n`` specimens."""
        exact = [g.fraction * n for g in self.groups]
        sizes = [int(np.floor(x)) for x in exact]
        leftover = n - sum(sizes)
        order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - sizes[i]), i))
        for i in order[:leftover]:
            sizes[i] += 1
        return sizes


def apply_policy(support: Support, policy: MeasurementPolicy, threads: int = 1) -> Dict[Tuple[str, ...], List[int]]:
    """Measure each policy group on a consecutive block of specimen ids."""
    policy.validate(support.observables, support.tol)
    allocation: Dict[Tuple[str, ...], List[int]] = {}
    start = 0
    for group, size in zip(policy.groups, policy.allocate(support.n)):
        ids = list(range(start, start + size))
        start += size
        allocation.setdefault(group.labels, []).extend(ids)
        if not ids:
            logger.warning("Policy group %s received no specimens", ",".join(group.labels))
            continue
        measure(support, ids, [support.observables[label] for label in group.labels], threads=threads)
    return allocation


def _check_rule(support: Support, rule: CorrelationRule) -> None:
    if not rule.certified:
        raise CertificationError(f"Rule {rule.label} is not certified")
    if not rule.state.same_as(support.state, support.tol):
        raise CertificationError(f"Rule {rule.label} was certified in '{rule.state.label}', not in the support's state")
    if not are_separated(rule.a, rule.b, support.tol):
        raise SeparationError(f"Rule {rule.label} relates observables at the same site {rule.a.site.name}")
    register(support, rule.a, rule.b)


def _check_measured_pair(specimen: Specimen, rule: CorrelationRule, va: int, vb: int) -> None:
    forced_b, forced_a = rule.implied_b(va), rule.implied_a(vb)
    if (forced_b is not None and forced_b != vb) or (forced_a is not None and forced_a != va):
        raise ExtensionConflictError(
            f"Specimen {specimen.id}: {rule.a.label}={va}, {rule.b.label}={vb} violate {rule.label}"
        )


def apply_strict_extension(support: Support, rule: CorrelationRule) -> int:
    """
    Strict extension of a certified correlation between separated observables.

    Only specimens that actually underwent a measurement of ``rule.a`` or
    ``rule.b`` gain values. An inference to an unmeasured observable is refused
    on specimens that carry a measurement of something co-sited with it and
    incompatible with it; refusals are kept on ``support.refusals``.

    Returns:
        Number of new objective values assigned.
    """
    _check_rule(support, rule)
    a, b = rule.a.label, rule.b.label
    blockers = {a: support.guard_blockers(a), b: support.guard_blockers(b)}
    assigned = refused = 0

    for specimen in support.specimens:
        va, vb = specimen.measured.get(a), specimen.measured.get(b)
        if va is None and vb is None:
            continue
        if va is not None and vb is not None:
            _check_measured_pair(specimen, rule, va, vb)
            continue

        if va is not None:
            source, target, value = a, b, rule.implied_b(va)
        else:
            source, target, value = b, a, rule.implied_a(vb)
        if value is None:
            continue

        blocking = blockers[target] & specimen.measured.keys()
        if blocking:
            blocked_by = min(blocking)
            support.refusals.append(Refusal(specimen.id, target, blocked_by, rule.label))
            logger.debug("Specimen %d: inference %s -> %s refused, %s was measured", specimen.id, source, target, blocked_by)
            refused += 1
            continue
        assigned += _set_objective(specimen, target, ObjectiveValue(value, source, rule.label))

    logger.info("Strict extension %s: %d assigned, %d refused by locality", rule.label, assigned, refused)
    return assigned


def _commuting_records(support: Support, specimen: Specimen, label: str) -> Records:
    incompatible = support.incompatible_with(label)
    return tuple(sorted((k, v) for k, v in specimen.measured.items() if k not in incompatible))


def apply_wide_extension(support: Support, rule: CorrelationRule) -> int:
    """
    Wide extension of a certified correlation between separated observables.

    For ``<->`` rules every specimen ends up holding consistent values of both
    observables; values with no anchor are drawn from the Born distribution
    of ``rule.a`` conditioned on the specimen's commuting records. For ``->``
    rules the implication is propagated over the objective sets.

    Returns:
        Number of new objective values assigned.
    """
    _check_rule(support, rule)
    a, b = rule.a.label, rule.b.label
    assigned = 0
    unanchored: Dict[Records, List[int]] = {}

    for specimen in support.specimens:
        oa, ob = specimen.objective.get(a), specimen.objective.get(b)
        va = oa.value if oa is not None else None
        vb = ob.value if ob is not None else None
        if va is not None and vb is not None:
            _check_measured_pair(specimen, rule, va, vb)
            continue
        if va is not None:
            value = rule.implied_b(va)
            if value is not None:
                assigned += _set_objective(specimen, b, ObjectiveValue(value, a, rule.label))
            continue
        if vb is not None:
            value = rule.implied_a(vb)
            if value is not None:
                assigned += _set_objective(specimen, a, ObjectiveValue(value, b, rule.label))
            continue
        if rule.direction is Direction.IFF:
            unanchored.setdefault(_commuting_records(support, specimen, a), []).append(specimen.id)

    key = f"wide:{rule.label}"
    for records, members in unanchored.items():
        combos, probs = _distribution(support, [rule.a], records)
        for specimen_id, (value,) in zip(members, _sample(combos, probs, keyed_uniforms(support.seed, key, members))):
            specimen = support.specimens[specimen_id]
            assigned += _set_objective(specimen, a, ObjectiveValue(value, "born", rule.label))
            assigned += _set_objective(specimen, b, ObjectiveValue(rule.implied_b(value), a, rule.label))

    logger.info("Wide extension %s: %d assigned", rule.label, assigned)
    return assigned


def _label(item: LabelOrObservable) -> str:
    return item.label if isinstance(item, Observable) else item


def measured_set(support: Support, item: LabelOrObservable, outcome: Optional[int] = None) -> FrozenSet[int]:
    """The set 𝐀 (or 𝐀± when ``outcome`` is given) of specimens measured for an observable."""
    label = _label(item)
    return frozenset(
        s.id for s in support.specimens
        if label in s.measured and (outcome is None or s.measured[label] == outcome)
    )


def objective_set(support: Support, item: LabelOrObservable, value: Optional[int] = None) -> FrozenSet[int]:
    """The set 𝒜 (or 𝒜±) of specimens possessing an objective value."""
    label = _label(item)
    return frozenset(
        s.id for s in support.specimens
        if label in s.objective and (value is None or s.objective[label].value == value)
    )


def simultaneous_reality_set(support: Support, o1: LabelOrObservable, o2: LabelOrObservable) -> FrozenSet[int]:
    """Ids of specimens holding objective values of both observables."""
    first, second = _label(o1), _label(o2)
    return frozenset(
        s.id for s in support.specimens
        if first in s.objective and second in s.objective
    )


def epr_intersection(support: Support, labels: Tuple[str, str, str, str] = ("A", "B", "P", "Q")) -> FrozenSet[int]:
    """
    (𝐀∪𝐏) ∩ (𝐁∪𝐐), checked against (𝐀∩𝐐) ∪ (𝐏∩𝐁).

    ``labels`` are the two first-site observables followed by their partners.
    """
    for label in labels:
        support.observable(label)
    a, b, p, q = (measured_set(support, label) for label in labels)
    if a & b or p & q:
        raise MeasurementError("Incompatible observables were measured on the same specimen")
    xy = (a | p) & (b | q)
    if xy != (a & q) | (p & b):
        raise RealityLabError("X∩Y decomposition failed on the bookkeeping sets")
    return frozenset(xy)


def check_record_correlation(support: Support, rule: CorrelationRule) -> bool:
    """
    The concrete-outcome form of the correlation on 𝐀∩𝐁.

    For ``a -> b`` this is (𝐚(x)+1)(𝐛(x)-1)=0, i.e. 𝐀₊∩𝐁 ⊆ 𝐁₊ and 𝐁₋∩𝐀 ⊆ 𝐀₋;
    ``<->`` rules are checked in both directions.
    """
    a, b = rule.a.label, rule.b.label
    for specimen in support.specimens:
        if a in specimen.measured and b in specimen.measured:
            va, vb = specimen.measured[a], specimen.measured[b]
            forced_b, forced_a = rule.implied_b(va), rule.implied_a(vb)
            if (forced_b is not None and forced_b != vb) or (forced_a is not None and forced_a != va):
                return False
    return True
