"""Consistent histories: chain operators, decoherence, families and their concrete supports.

A history is a time-ordered sequence of projectors. A family fixes, at each
time, a decomposition of the identity into orthogonal projectors; its
elementary histories pick one member per time. A family is consistent in a
density operator when the real part of the decoherence functional vanishes
between any two distinct elementary histories.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from . import linalg
from .ensemble import (
    Support,
    apply_strict_extension,
    create_support,
    keyed_uniforms,
    measured_set,
    objective_set,
    record_measurement,
    simultaneous_reality_set,
)
from .exceptions import DimensionError, HistoryError, InconsistentFamilyError
from .experiments import AnalysisReport, IdealSetup, build_ideal
from .linalg import CMatrix, DEFAULT_TOL
from .metrics import OutcomeTally, statistical_tolerance
from .quantum import StateVector, embed
from .utils import matrix_to_pairs

logger = logging.getLogger(__name__)

ElementaryIndex = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A positive semidefinite operator with positive trace."""

    op: CMatrix
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "op", linalg.as_matrix(self.op))
        if not linalg.is_hermitian(self.op, self.tol):
            raise HistoryError("Density operator is not self-adjoint")
        if linalg.eigenvalues_hermitian(self.op)[0] < -self.tol:
            raise HistoryError("Density operator is not positive semidefinite")
        if self.trace <= self.tol:
            raise HistoryError("Density operator has vanishing trace")

    @classmethod
    def from_state(cls, psi: StateVector, tol: float = DEFAULT_TOL) -> "DensityOperator":
        return cls(psi.density(), tol)

    @property
    def dim(self) -> int:
        return int(self.op.shape[0])

    @property
    def trace(self) -> float:
        return float(np.trace(self.op).real)

    def describes(self, psi: StateVector, tol: float = DEFAULT_TOL) -> bool:
        """True iff the normalized operator is the projector onto ``psi``."""
        return self.dim == psi.dim and linalg.allclose(self.op / self.trace, psi.density(), tol)


@dataclass(frozen=True, eq=False)
class History:
    """Time-ordered events ``(E_1, ..., E_n)``; ``E_1`` happens first."""

    events: Tuple[CMatrix, ...]
    times: Optional[Tuple[float, ...]] = None
    labels: Optional[Tuple[str, ...]] = None
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        if not self.events:
            raise HistoryError("A history needs at least one event")
        events = tuple(linalg.as_matrix(e) for e in self.events)
        times = tuple(self.times) if self.times is not None else tuple(range(1, len(events) + 1))
        labels = tuple(self.labels) if self.labels is not None else tuple(f"E_{k}" for k in range(1, len(events) + 1))
        if len(times) != len(events) or len(labels) != len(events):
            raise HistoryError("Times and labels must match the number of events")
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise HistoryError(f"Event times must be strictly increasing, got {times}")
        for label, event in zip(labels, events):
            if event.shape != events[0].shape:
                raise DimensionError(f"Event '{label}' has shape {event.shape}, expected {events[0].shape}")
            if not linalg.is_projector(event, self.tol):
                raise HistoryError(f"Event '{label}' is not a projector")
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return int(self.events[0].shape[0])

    @property
    def label(self) -> str:
        return "(" + ", ".join(self.labels) + ")"


def chain_operator(h: History) -> CMatrix:
    """``C_h = E_n ... E_1``, latest event leftmost."""
    chain = h.events[0]
    for event in h.events[1:]:
        chain = event @ chain
    return linalg.as_matrix(chain)


def _check_rho(dim: int, rho: DensityOperator) -> None:
    if rho.dim != dim:
        raise DimensionError(f"Density operator has dim {rho.dim}, histories act on dim {dim}")


def _functional(c1: CMatrix, c2: CMatrix, rho: DensityOperator) -> float:
    return float(np.trace(c1 @ rho.op @ c2.conj().T).real)


def decoherence_functional(h1: History, h2: History, rho: DensityOperator) -> float:
    """``Re Tr(C_h1 rho C_h2^dagger)``."""
    if h1.dim != h2.dim:
        raise DimensionError(f"Histories act on different spaces: {h1.dim} vs {h2.dim}")
    _check_rho(h1.dim, rho)
    return _functional(chain_operator(h1), chain_operator(h2), rho)


def _member_subset(event: CMatrix, members: Sequence[CMatrix], tol: float) -> Optional[FrozenSet[int]]:
    """Indices of decomposition members summing to ``event``, or None."""
    chosen = frozenset(
        k for k, member in enumerate(members)
        if linalg.frobenius_norm(event @ member - member) <= tol
    )
    total = sum((members[k] for k in chosen), np.zeros_like(event))
    return chosen if linalg.allclose(total, event, tol) else None


@dataclass(frozen=True, eq=False)
class HistoryFamily:
    """Per-time decompositions of the identity into orthogonal projectors."""

    times: Tuple[float, ...]
    decompositions: Tuple[Tuple[CMatrix, ...], ...]
    labels: Tuple[Tuple[str, ...], ...]
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        if not self.times:
            raise HistoryError("A family needs at least one time")
        if any(t1 >= t2 for t1, t2 in zip(self.times, self.times[1:])):
            raise HistoryError(f"Family times must be strictly increasing, got {self.times}")
        if len(self.decompositions) != len(self.times) or len(self.labels) != len(self.times):
            raise HistoryError("One decomposition and one label tuple per time are required")

        decompositions = []
        dim = None
        for time, members, names in zip(self.times, self.decompositions, self.labels):
            members = tuple(linalg.as_matrix(m) for m in members)
            if not members or len(names) != len(members):
                raise HistoryError(f"Decomposition at t={time} is empty or mislabelled")
            dim = dim or members[0].shape[0]
            for name, member in zip(names, members):
                if member.shape != (dim, dim):
                    raise DimensionError(f"Projector '{name}' at t={time} has shape {member.shape}")
                if not linalg.is_projector(member, self.tol):
                    raise HistoryError(f"'{name}' at t={time} is not a projector")
            if not linalg.allclose(sum(members, np.zeros((dim, dim), dtype=complex)), np.eye(dim), self.tol):
                raise HistoryError(f"Decomposition at t={time} does not sum to the identity")
            for j, k in ((j, k) for j in range(len(members)) for k in range(j + 1, len(members))):
                if linalg.frobenius_norm(members[j] @ members[k]) > self.tol:
                    raise HistoryError(f"'{names[j]}' and '{names[k]}' at t={time} are not orthogonal")
            decompositions.append(members)
        object.__setattr__(self, "times", tuple(self.times))
        object.__setattr__(self, "decompositions", tuple(decompositions))
        object.__setattr__(self, "labels", tuple(tuple(names) for names in self.labels))

    @classmethod
    def from_decompositions(
        cls,
        times: Sequence[float],
        decompositions: Sequence[Sequence[ArrayLike]],
        labels: Optional[Sequence[Sequence[str]]] = None,
        tol: float = DEFAULT_TOL,
    ) -> "HistoryFamily":
        if labels is None:
            labels = [[f"P_{k}" for k in range(1, len(members) + 1)] for members in decompositions]
        return cls(tuple(times), tuple(tuple(m) for m in decompositions), tuple(tuple(n) for n in labels), tol)

    @property
    def dim(self) -> int:
        return int(self.decompositions[0][0].shape[0])

    @property
    def key(self) -> str:
        """Stable identifier built from the member labels."""
        return "|".join(",".join(names) for names in self.labels)

    def elementary_indices(self) -> List[ElementaryIndex]:
        return list(product(*(range(len(members)) for members in self.decompositions)))

    def history(self, index: ElementaryIndex) -> History:
        """The elementary history selecting member ``index[k]`` at time ``k``."""
        return History(
            tuple(members[i] for members, i in zip(self.decompositions, index)),
            self.times,
            tuple(names[i] for names, i in zip(self.labels, index)),
            self.tol,
        )

    def elementary_histories(self) -> List[History]:
        return [self.history(index) for index in self.elementary_indices()]

    def member_sets(self, h: History) -> Optional[Tuple[FrozenSet[int], ...]]:
        """For each time, the members whose sum is the event of ``h``; None if ``h`` is not in the family."""
        if tuple(h.times) != self.times or h.dim != self.dim:
            return None
        sets = []
        for event, members in zip(h.events, self.decompositions):
            chosen = _member_subset(event, members, self.tol)
            if chosen is None:
                return None
            sets.append(chosen)
        return tuple(sets)

    def contains(self, h: History) -> bool:
        return self.member_sets(h) is not None


def minimal_family(h: History) -> HistoryFamily:
    """The smallest family containing ``h``: ``{E, 1-E}`` per time, ``{1}`` for identity events."""
    eye = np.eye(h.dim, dtype=complex)
    decompositions, labels = [], []
    for label, event in zip(h.labels, h.events):
        complement = eye - event
        if linalg.frobenius_norm(complement) <= h.tol:
            decompositions.append((event,))
            labels.append((label,))
        else:
            decompositions.append((event, complement))
            labels.append((label, f"1-{label}"))
    return HistoryFamily(h.times, tuple(decompositions), tuple(labels), h.tol)


def decoherence_matrix(fam: HistoryFamily, rho: DensityOperator) -> np.ndarray:
    """Real decoherence functional over all pairs of elementary histories."""
    _check_rho(fam.dim, rho)
    chains = [chain_operator(h) for h in fam.elementary_histories()]
    size = len(chains)
    matrix = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            matrix[i, j] = matrix[j, i] = _functional(chains[i], chains[j], rho)
    return matrix


def is_consistent(fam: HistoryFamily, rho: DensityOperator, tol: float = DEFAULT_TOL) -> bool:
    """Weak decoherence: every off-diagonal entry of the decoherence matrix is within ``tol`` of 0."""
    matrix = decoherence_matrix(fam, rho)
    off_diagonal = matrix - np.diag(np.diag(matrix))
    return bool(np.all(np.abs(off_diagonal) <= tol))


def history_probability(
    h: History,
    rho: DensityOperator,
    family: Optional[HistoryFamily] = None,
    tol: float = DEFAULT_TOL,
) -> float:
    """
    ``Tr(C_h rho C_h^dagger) / Tr(rho)``.

    Args:
        h: History whose probability is wanted
        rho: Density operator
        family: Family ``h`` is read in (defaults to its minimal family)
        tol: Consistency tolerance

    Raises:
        InconsistentFamilyError: If the family is not weakly decohering in ``rho``
        HistoryError: If ``h`` does not belong to ``family``
    """
    family = family or minimal_family(h)
    if not family.contains(h):
        raise HistoryError(f"History {h.label} is not in the given family")
    if not is_consistent(family, rho, tol):
        raise InconsistentFamilyError(f"Family {family.key} is not consistent; p{h.label} is undefined")
    chain = chain_operator(h)
    return _functional(chain, chain, rho) / rho.trace


def _check_times(f1: HistoryFamily, f2: HistoryFamily) -> None:
    if f1.times != f2.times:
        raise HistoryError(f"Families have different time labels: {f1.times} vs {f2.times}")


def is_refinement(coarse: HistoryFamily, fine: HistoryFamily) -> bool:
    """True iff every projector of ``coarse`` is a sum of projectors of ``fine`` at the same time."""
    _check_times(coarse, fine)
    if coarse.dim != fine.dim:
        return False
    return all(
        _member_subset(member, fine_members, fine.tol) is not None
        for coarse_members, fine_members in zip(coarse.decompositions, fine.decompositions)
        for member in coarse_members
    )


def product_family(f1: HistoryFamily, f2: HistoryFamily, tol: float = DEFAULT_TOL) -> Optional[HistoryFamily]:
    """
    Common refinement by products of commuting decompositions.

    Returns:
        Family of the nonzero products ``P Q`` at every time, or None when some
        pair of projectors at the same time does not commute
    """
    _check_times(f1, f2)
    if f1.dim != f2.dim:
        raise DimensionError(f"Families act on different spaces: {f1.dim} vs {f2.dim}")
    decompositions, labels = [], []
    for members1, names1, members2, names2 in zip(f1.decompositions, f1.labels, f2.decompositions, f2.labels):
        products, product_names = [], []
        for p, pn in zip(members1, names1):
            for q, qn in zip(members2, names2):
                if linalg.commutator_norm(p, q) > tol:
                    return None
                pq = p @ q
                if linalg.frobenius_norm(pq) <= tol:
                    continue
                products.append(pq)
                product_names.append(pn if pn == qn else f"{pn}·{qn}")
        decompositions.append(tuple(products))
        labels.append(tuple(product_names))
    return HistoryFamily(f1.times, tuple(decompositions), tuple(labels), tol)


def are_compatible(f1: HistoryFamily, f2: HistoryFamily, rho: DensityOperator, tol: float = DEFAULT_TOL) -> bool:
    """
    Compatibility decided through the product refinement.

    True iff the decompositions commute at every time and the resulting
    product family is consistent in ``rho``.
    """
    common = product_family(f1, f2, tol)
    if common is None:
        return False
    return is_consistent(common, rho, tol)


@dataclass
class FamilySupport:
    """Specimens of a support on which exactly one elementary history of ``family`` occurs."""

    family: HistoryFamily
    rho: DensityOperator
    occurrence: Dict[int, ElementaryIndex]

    def b(self) -> FrozenSet[int]:
        """All members of the binding."""
        return frozenset(self.occurrence)

    def history_of(self, specimen_id: int) -> History:
        if specimen_id not in self.occurrence:
            raise HistoryError(f"Specimen {specimen_id} is not a member of this binding")
        return self.family.history(self.occurrence[specimen_id])

    def b1(self, h: History) -> FrozenSet[int]:
        """Members on which ``h`` occurs (any history of the family, not only elementary ones)."""
        sets = self.family.member_sets(h)
        if sets is None:
            raise HistoryError(f"History {h.label} is not in family {self.family.key}")
        return frozenset(
            sid for sid, index in self.occurrence.items()
            if all(i in chosen for i, chosen in zip(index, sets))
        )

    def b0(self, h: History) -> FrozenSet[int]:
        """Members on which ``h`` does not occur."""
        return self.b() - self.b1(h)

    def coarse_grain(self, coarser: HistoryFamily) -> "FamilySupport":
        """
        Binding of a coarser family induced by this one.

        Each fine elementary history maps to the unique coarse elementary
        history containing it, so membership is shared.
        """
        if not is_refinement(coarser, self.family):
            raise HistoryError(f"Family {self.family.key} does not refine {coarser.key}")
        if not is_consistent(coarser, self.rho, self.family.tol):
            raise InconsistentFamilyError(f"Family {coarser.key} is not consistent")

        parents: List[Dict[int, int]] = []
        for coarse_members, fine_members in zip(coarser.decompositions, self.family.decompositions):
            parent = {}
            for k, member in enumerate(coarse_members):
                for j in _member_subset(member, fine_members, self.family.tol):
                    parent[j] = k
            parents.append(parent)
        occurrence = {
            sid: tuple(parent[i] for parent, i in zip(parents, index))
            for sid, index in self.occurrence.items()
        }
        return FamilySupport(coarser, self.rho, occurrence)

    def tally(self) -> Dict[str, int]:
        """Occurrence counts per elementary history label."""
        counts: Dict[str, int] = {}
        for index in sorted(self.occurrence.values()):
            label = self.family.history(index).label
            counts[label] = counts.get(label, 0) + 1
        return counts


def _same_family(f1: HistoryFamily, f2: HistoryFamily, tol: float) -> bool:
    return (
        f1.key == f2.key
        and f1.times == f2.times
        and f1.dim == f2.dim
        and all(
            linalg.allclose(p, q, tol)
            for d1, d2 in zip(f1.decompositions, f2.decompositions)
            for p, q in zip(d1, d2)
        )
    )


def _usable_priors(
    fam: HistoryFamily, priors: Sequence[HistoryFamily], tol: float
) -> List[Tuple[int, float, int]]:
    """(prior, time, slot) triples whose decomposition commutes with everything already kept at that time."""
    present: Dict[float, List[Tuple[CMatrix, ...]]] = {t: [m] for t, m in zip(fam.times, fam.decompositions)}
    kept = []
    for p, prior in enumerate(priors):
        if prior.dim != fam.dim:
            continue
        for slot, (time, members) in enumerate(zip(prior.times, prior.decompositions)):
            at_time = present.setdefault(time, [])
            if all(linalg.commutator_norm(x, y) <= tol for other in at_time for x in other for y in members):
                at_time.append(members)
                kept.append((p, time, slot))
    return kept


def _conditioned_probabilities(
    fam: HistoryFamily,
    rho: DensityOperator,
    priors: Sequence[HistoryFamily],
    kept: Sequence[Tuple[int, float, int]],
    signature: Tuple[Optional[ElementaryIndex], ...],
    tol: float,
) -> np.ndarray:
    """Elementary-history probabilities given the events already occurred on a specimen."""
    times = sorted(set(fam.times) | {time for _, time, _ in kept})
    eye = np.eye(fam.dim, dtype=complex)
    weights = []
    for index in fam.elementary_indices():
        chain = eye
        for time in times:
            event = fam.decompositions[fam.times.index(time)][index[fam.times.index(time)]] \
                if time in fam.times else eye
            for p, at, slot in kept:
                if at == time and signature[p] is not None:
                    event = priors[p].decompositions[slot][signature[p][slot]] @ event
            chain = event @ chain
        weights.append(_functional(chain, chain, rho))
    probs = np.clip(np.array(weights), 0.0, None)
    total = probs.sum()
    if total <= tol:
        raise HistoryError(f"Occurrences already recorded rule out every history of {fam.key}")
    probs /= total
    probs[probs < tol] = 0.0
    return probs / probs.sum()


def bind_support(
    fam: HistoryFamily,
    support: Support,
    rho: Optional[DensityOperator] = None,
    ids: Optional[Sequence[int]] = None,
    tol: float = DEFAULT_TOL,
) -> FamilySupport:
    """
    Assign each specimen one elementary history of a consistent family.

    Occurrence belongs to the specimen: the support keeps every binding, and a
    new family is drawn conditioned on the events already occurred on each
    specimen (at every time where the earlier decomposition commutes with the
    new one). A history shared by two families therefore occurs on the same
    specimens in both. Binding the same family again returns the recorded
    occurrences. Draws use the support's keyed generator, so a given
    (seed, binding order, specimen) always gets the same history.

    Raises:
        InconsistentFamilyError: If the family is not consistent in ``rho``
        HistoryError: If ``rho`` is not the support's state, or recorded
            occurrences leave no history of the family possible
    """
    rho = rho or DensityOperator.from_state(support.state, tol)
    if not rho.describes(support.state, tol):
        raise HistoryError("Density operator does not describe the support's state")
    if not is_consistent(fam, rho, tol):
        raise InconsistentFamilyError(f"Family {fam.key} is not consistent; its support is empty")

    ledger = support.history_bindings
    previous: Optional[Dict[int, ElementaryIndex]] = None
    priors: List[HistoryFamily] = []
    prior_occurrences: List[Dict[int, ElementaryIndex]] = []
    for bound, occurrence in ledger:
        if _same_family(bound, fam, tol):
            previous = occurrence
        else:
            priors.append(bound)
            prior_occurrences.append(occurrence)
    kept = _usable_priors(fam, priors, tol)

    members = list(support.ids if ids is None else ids)
    for specimen_id in members:
        support.specimen(specimen_id)
    groups: Dict[Tuple[Optional[ElementaryIndex], ...], List[int]] = {}
    for specimen_id in members:
        if previous is None or specimen_id not in previous:
            signature = tuple(occurrence.get(specimen_id) for occurrence in prior_occurrences)
            groups.setdefault(signature, []).append(specimen_id)

    indices = fam.elementary_indices()
    drawn: Dict[int, ElementaryIndex] = {}
    key = f"histories:{fam.key}"
    for signature, group in groups.items():
        probs = _conditioned_probabilities(fam, rho, priors, kept, signature, tol)
        uniforms = keyed_uniforms(support.seed, key, group)
        picks = np.minimum(np.searchsorted(np.cumsum(probs), uniforms, side="right"), len(indices) - 1)
        drawn.update((specimen_id, indices[k]) for specimen_id, k in zip(group, picks))

    if previous is None:
        ledger.append((fam, drawn))
        recorded = drawn
    else:
        previous.update(drawn)
        recorded = previous
    occurrence = {specimen_id: recorded[specimen_id] for specimen_id in members}
    logger.info("Bound %d specimens to family %s (%d new)", len(occurrence), fam.key, len(drawn))
    return FamilySupport(fam, rho, occurrence)


def family_to_dict(fam: HistoryFamily, rho: DensityOperator, tol: float = DEFAULT_TOL) -> dict:
    """Family dump: projectors as (re, im) pairs, elementary histories, consistency and decoherence matrix."""
    matrix = decoherence_matrix(fam, rho)
    return {
        "times": list(fam.times),
        "decompositions": [
            [{"label": name, "projector": matrix_to_pairs(member)} for name, member in zip(names, members)]
            for names, members in zip(fam.labels, fam.decompositions)
        ],
        "elementary_histories": [h.label for h in fam.elementary_histories()],
        "consistent": is_consistent(fam, rho, tol),
        "decoherence_matrix": matrix.tolist(),
    }


def _demo_histories(setup: IdealSetup, tol: float) -> Dict[str, History]:
    eye = np.eye(setup.state.dim, dtype=complex)
    times = (1, 2)
    return {
        "h_T": History((eye, setup.T.op), times, ("1", "T"), tol),
        "h_Y": History((eye, setup.Y.op), times, ("1", "Y"), tol),
        "h_E": History((setup.E.op, setup.T.op), times, ("E", "T"), tol),
        "h_G": History((setup.G.op, setup.Y.op), times, ("G", "Y"), tol),
        "h_A1": History((eye, embed(setup.a_II[0], (6, 4), 1)), times, ("1", "A_II^1"), tol),
    }


def contradiction_family_dump(tol: float = DEFAULT_TOL) -> Dict[str, dict]:
    """Family dumps of every family the contradiction demo binds, keyed by name."""
    setup = build_ideal(tol)
    rho = DensityOperator.from_state(setup.state, tol)
    histories = _demo_histories(setup, tol)
    families = {f"C({name})": minimal_family(histories[name]) for name in ("h_T", "h_Y", "h_E", "h_G")}
    families["C(h_T)xC(h_Y)"] = product_family(families["C(h_T)"], families["C(h_Y)"], tol)
    return {name: family_to_dict(fam, rho, tol) for name, fam in families.items()}


def contradiction_demo(n: int, seed: int, tol: float = DEFAULT_TOL) -> AnalysisReport:
    """
    Reproduce the clash between objectification and strict extension.

    Specimens on which both ``(1, T)`` and ``(1, Y)`` occur are witnesses.
    Revealing T and Y on them and extending through ``E <-> T`` and
    ``G <-> Y`` puts every witness in both ``b_1(E, T)`` and ``b_1(G, Y)``,
    although the families of those two histories are incompatible. The
    same happens with no measurement at all: binding C(h_E) and C(h_G) on
    the support, conditioned on the fine binding, puts the witnesses in
    both b_1(h_E) and b_1(h_G).
    """
    setup = build_ideal(tol)
    rho = DensityOperator.from_state(setup.state, tol)
    h_T, h_Y, h_E, h_G, h_A1 = _demo_histories(setup, tol).values()
    c_T, c_Y, c_E, c_G = (minimal_family(h) for h in (h_T, h_Y, h_E, h_G))

    consistent = {name: is_consistent(f, rho, tol) for name, f in (("C(h_E)", c_E), ("C(h_G)", c_G))}
    compatible = are_compatible(c_E, c_G, rho, tol)

    support = create_support(setup.state, n, seed, setup.observables, tol)
    fine = bind_support(product_family(c_T, c_Y, tol), support, rho, tol=tol)
    bound_T, bound_Y = fine.coarse_grain(c_T), fine.coarse_grain(c_Y)
    in_T, in_Y = bound_T.b1(h_T), bound_Y.b1(h_Y)
    witnesses = in_T & in_Y
    objectified = witnesses <= fine.b1(h_A1)

    tally = OutcomeTally(("T", "Y"))
    for specimen_id in support.ids:
        outcome = (int(specimen_id in in_T), int(specimen_id in in_Y))
        record_measurement(support, specimen_id, {"T": outcome[0], "Y": outcome[1]})
        tally.record(outcome)
    for rule in setup.rules:
        apply_strict_extension(support, rule)

    occurs_E = objective_set(support, setup.E, 1) & measured_set(support, setup.T, 1)
    occurs_G = objective_set(support, setup.G, 1) & measured_set(support, setup.Y, 1)
    extended = occurs_E & occurs_G
    reached = witnesses <= extended

    bound_E = bind_support(c_E, support, rho, tol=tol)
    bound_G = bind_support(c_G, support, rho, tol=tol)
    agrees = bound_E.b1(h_T) == in_T and bound_G.b1(h_Y) == in_Y
    condition_ii = bound_E.b1(h_T) <= bound_E.b1(h_E) and bound_G.b1(h_Y) <= bound_G.b1(h_G)
    objectified_EG = witnesses <= (bound_E.b1(h_E) & bound_G.b1(h_G))

    expected = float(np.vdot(setup.state.vec, h_A1.events[1] @ setup.state.vec).real)
    fraction = len(witnesses) / n
    fraction_ok = abs(fraction - expected) <= statistical_tolerance(expected, n)
    violated = bool(extended) and not compatible

    if violated:
        verdict = "condition_i_violated"
    elif not witnesses:
        logger.warning("No specimen of %d lands in b_1(h_T) ∩ b_1(h_Y)", n)
        verdict = "no_witness_in_sample"
    else:
        verdict = "condition_i_holds"

    passed = (
        all(consistent.values()) and not compatible and objectified and reached
        and agrees and condition_ii and objectified_EG and fraction_ok and not support.refusals
    )
    details = {
        "families_consistent": consistent,
        "families_compatible": compatible,
        "witness_count": len(witnesses),
        "witness_fraction": fraction,
        "expected_witness_fraction": expected,
        "witness_fraction_within_4_sigma": fraction_ok,
        "intersection_nonempty": bool(extended),
        "intersection_size": len(extended),
        "objectification_(1,A_II^1)": objectified,
        "extension_reaches_witnesses": reached,
        "occurrence_agrees_across_families": agrees,
        "condition_ii_holds": condition_ii,
        "witnesses_in_b1_hE_and_b1_hG": objectified_EG,
        "locality_refusals": len(support.refusals),
    }
    logger.info("Histories demo: %d witnesses, compatible=%s, verdict %s", len(witnesses), compatible, verdict)
    return AnalysisReport(
        "histories", n, seed, "strict", {"T,Y": tally.frequencies()},
        len(simultaneous_reality_set(support, setup.E, setup.G)), None, verdict, passed, details,
    )
