"""Builders and analyses for the Bohm-EPR singlet and the spin-5/2 ⊗ spin-3/2 experiment."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from . import linalg
from .ensemble import (
    MeasurementPolicy,
    Support,
    apply_policy,
    apply_strict_extension,
    apply_wide_extension,
    check_record_correlation,
    create_support,
    epr_intersection,
    measure,
    measured_set,
    simultaneous_reality_set,
)
from .exceptions import CertificationError, ConfigurationError, PolicyError, SetupError
from .linalg import CMatrix, DEFAULT_TOL
from .metrics import OutcomeTally, outcome_key
from .quantum import (
    CorrelationRule,
    Direction,
    Observable,
    Sign,
    Site,
    SpectrumKind,
    StateVector,
    certify_correlation,
    embed,
    joint_probability,
)

logger = logging.getLogger(__name__)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

EXTENSIONS = ("strict", "wide")

# Groups a Bohm-EPR policy may use: one or two observables, never an
# incompatible pair on the same particle.
ALLOWED_EPR_GROUPS = frozenset(
    frozenset(g) for g in (
        ("A", "P"), ("B", "Q"), ("A", "Q"), ("P", "B"),
        ("A",), ("B",), ("P",), ("Q",),
    )
)


def direction_from_angle(theta: float) -> np.ndarray:
    """Unit vector at polar angle ``theta`` in the x-z plane."""
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


def spin_component(n: ArrayLike) -> CMatrix:
    """``n·σ`` for a unit 3-vector (spin in ħ/2 units)."""
    direction = np.asarray(n, dtype=float)
    if direction.shape != (3,):
        raise SetupError(f"Direction must be a 3-vector, got shape {direction.shape}")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise SetupError(f"Direction {direction.tolist()} is not a unit vector")
    return linalg.as_matrix(direction[0] * PAULI_X + direction[1] * PAULI_Y + direction[2] * PAULI_Z)


def spin_ket(j: Fraction, m: Fraction) -> np.ndarray:
    """``|m>`` of a spin-``j`` particle; basis ordered from ``m = j`` down to ``-j``."""
    dim = int(2 * j + 1)
    return linalg.ket(dim, int(j - m))


@dataclass(frozen=True, eq=False)
class BohmEprSetup:
    """Two spin-1/2 particles in the singlet state, two directions per particle."""

    state: StateVector
    A: Observable
    B: Observable
    P: Observable
    Q: Observable
    rules: Tuple[CorrelationRule, CorrelationRule]
    n_a: np.ndarray
    n_b: np.ndarray

    @property
    def observables(self) -> Tuple[Observable, ...]:
        return (self.A, self.B, self.P, self.Q)


SITE_1 = Site("R_1", dims=(2, 2), slot=0)
SITE_2 = Site("R_2", dims=(2, 2), slot=1)


def build_singlet(
    n_a: ArrayLike = (0.0, 0.0, 1.0),
    n_b: ArrayLike = (1.0, 0.0, 0.0),
    tol: float = DEFAULT_TOL,
) -> BohmEprSetup:
    """
    Build the singlet setup with spin components along ``n_a`` and ``n_b``.

    Raises:
        SetupError: If a direction is not a unit vector or the two are parallel
    """
    spin_a, spin_b = spin_component(n_a), spin_component(n_b)
    if np.linalg.norm(np.cross(np.asarray(n_a, float), np.asarray(n_b, float))) <= 1e-9:
        raise SetupError("EPR directions must not be parallel")

    up, down = spin_ket(Fraction(1, 2), Fraction(1, 2)), spin_ket(Fraction(1, 2), Fraction(-1, 2))
    singlet = (linalg.tensor(up, down) - linalg.tensor(down, up)) / math.sqrt(2)
    state = StateVector(singlet, "singlet", tol)

    dims = (2, 2)
    A = Observable(embed(spin_a, dims, 0), SpectrumKind.TWO_VALUE, SITE_1, "A", tol)
    B = Observable(embed(spin_b, dims, 0), SpectrumKind.TWO_VALUE, SITE_1, "B", tol)
    P = Observable(embed(spin_a, dims, 1), SpectrumKind.TWO_VALUE, SITE_2, "P", tol)
    Q = Observable(embed(spin_b, dims, 1), SpectrumKind.TWO_VALUE, SITE_2, "Q", tol)

    if linalg.commutator_norm(A.op, B.op) <= tol or linalg.commutator_norm(P.op, Q.op) <= tol:
        raise SetupError("Spin components along the chosen directions commute")

    rules = (
        certify_correlation(A, P, state, Direction.IFF, Sign.MINUS, tol),
        certify_correlation(B, Q, state, Direction.IFF, Sign.MINUS, tol),
    )
    return BohmEprSetup(state, A, B, P, Q, rules, np.asarray(n_a, float), np.asarray(n_b, float))


@dataclass(frozen=True, eq=False)
class IdealSetup:
    """Spin-5/2 particle I and spin-3/2 particle II in the entangled state ψ."""

    state: StateVector
    a_I: Tuple[CMatrix, ...]
    a_II: Tuple[CMatrix, ...]
    b_I: Tuple[CMatrix, ...]
    E: Observable
    G: Observable
    T: Observable
    Y: Observable
    rules: Tuple[CorrelationRule, CorrelationRule]

    @property
    def observables(self) -> Tuple[Observable, ...]:
        return (self.E, self.G, self.T, self.Y)

    def named_projectors(self) -> Dict[str, CMatrix]:
        """Every projector the construction uses, by name."""
        named: Dict[str, CMatrix] = {}
        named.update({f"A_I^{i}": p for i, p in enumerate(self.a_I, 1)})
        named.update({f"A_II^{j}": p for j, p in enumerate(self.a_II, 1)})
        named.update({f"B_I^{i}": p for i, p in enumerate(self.b_I, 1)})
        named.update({obs.label: obs.op for obs in self.observables})
        return named


IDEAL_DIMS = (6, 4)
SITE_I = Site("R_I", dims=IDEAL_DIMS, slot=0)
SITE_II = Site("R_II", dims=IDEAL_DIMS, slot=1)
SPIN_I = Fraction(5, 2)
SPIN_II = Fraction(3, 2)


def ideal_state_vector() -> np.ndarray:
    """Amplitudes of ψ; composite index ``4·i + j``."""
    def I(m):
        return spin_ket(SPIN_I, Fraction(m))

    def II(m):
        return spin_ket(SPIN_II, Fraction(m))

    return (
        math.sqrt(3) / 4 * linalg.tensor(I("5/2") + I("3/2"), II("1/2"))
        + 1 / math.sqrt(8) * linalg.tensor(I("1/2"), II("3/2"))
        + 1 / 4 * linalg.tensor(I("-1/2") + I("-3/2"), II("-3/2"))
        + math.sqrt(3 / 8) * linalg.tensor(I("-5/2"), II("-1/2"))
    )


def build_ideal(tol: float = DEFAULT_TOL) -> IdealSetup:
    """Build the ideal experiment and certify its correlations."""
    state = StateVector(ideal_state_vector(), "psi_ideal", tol)

    a_I = tuple(linalg.outer(k, k) for k in (linalg.ket(6, i) for i in range(6)))
    a_II = tuple(linalg.outer(k, k) for k in (linalg.ket(4, j) for j in range(4)))

    psi_11 = 0.5 * (
        spin_ket(SPIN_I, Fraction(5, 2)) - spin_ket(SPIN_I, Fraction(3, 2))
        + spin_ket(SPIN_I, Fraction(-1, 2)) - spin_ket(SPIN_I, Fraction(-3, 2))
    )
    psi_12 = spin_ket(SPIN_I, Fraction(1, 2))
    psi_13 = spin_ket(SPIN_I, Fraction(-5, 2))
    b_I = tuple(linalg.outer(v, v) for v in (psi_11, psi_12, psi_13))

    E = Observable(embed(a_I[0] + a_I[1] + a_I[2], IDEAL_DIMS, 0), SpectrumKind.ZERO_ONE, SITE_I, "E", tol)
    G = Observable(embed(b_I[0] + b_I[1] + b_I[2], IDEAL_DIMS, 0), SpectrumKind.ZERO_ONE, SITE_I, "G", tol)
    T = Observable(embed(a_II[0] + a_II[1], IDEAL_DIMS, 1), SpectrumKind.ZERO_ONE, SITE_II, "T", tol)
    Y = Observable(embed(a_II[0] + a_II[2], IDEAL_DIMS, 1), SpectrumKind.ZERO_ONE, SITE_II, "Y", tol)

    if linalg.commutator_norm(T.op, Y.op) > tol:
        raise SetupError("T and Y must commute")
    if linalg.commutator_norm(E.op, G.op) <= tol:
        raise SetupError("E and G must not commute")

    rules = (
        certify_correlation(E, T, state, Direction.IFF, Sign.PLUS, tol),
        certify_correlation(G, Y, state, Direction.IFF, Sign.PLUS, tol),
    )
    return IdealSetup(state, a_I, a_II, b_I, E, G, T, Y, rules)


@dataclass(frozen=True)
class InferenceRow:
    """One row of the (t, y) -> (e, g) inference table."""

    t: int
    y: int
    e: int
    g: int


def inference_table(setup: IdealSetup) -> List[InferenceRow]:
    """Objective (E, G) inferred from measured (T, Y) through the certified rules."""
    rule_et, rule_gy = setup.rules
    for rule in setup.rules:
        if not rule.certified:
            raise CertificationError(f"Rule {rule.label} is not certified")
    rows = []
    for t, y in ((1, 1), (1, 0), (0, 1), (0, 0)):
        rows.append(InferenceRow(t, y, rule_et.implied_a(t), rule_gy.implied_a(y)))
    return rows


@dataclass
class AnalysisReport:
    """Summary of one analysis run; ``to_dict`` gives the report JSON."""

    experiment: str
    n: int
    seed: int
    extension: str
    frequencies: Dict[str, Any]
    simultaneous_set_size: int
    table_conformance: Optional[bool]
    verdict: str
    passed: bool = True
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "n": self.n,
            "seed": self.seed,
            "extension": self.extension,
            "frequencies": self.frequencies,
            "simultaneous_set_size": self.simultaneous_set_size,
            "table_conformance": self.table_conformance,
            "verdict": self.verdict,
            "passed": self.passed,
            "details": self.details,
        }


def reality_verdict(pair: str, size: int, n: int) -> str:
    """Stable verdict identifier, e.g. ``simultaneous_PQ_reality: none``."""
    if size == 0:
        amount = "none"
    elif size == n:
        amount = "all"
    else:
        amount = "partial"
    return f"simultaneous_{pair}_reality: {amount}"


class ExperimentRunner:
    """Base class for running an analysis on a seeded support."""

    def __init__(
        self,
        n: int,
        seed: int,
        extension: str = "strict",
        threads: int = 1,
        tol: float = DEFAULT_TOL,
    ):
        """
        Initialize experiment runner.

        Args:
            n: Number of specimens in the support
            seed: Seed of the keyed generator
            extension: "strict" (sEQC) or "wide" (EQC)
            threads: Workers used for ensemble sampling
            tol: Algebraic tolerance
        """
        if n < 1:
            raise ConfigurationError(f"n must be positive, got {n}")
        if extension not in EXTENSIONS:
            raise ConfigurationError(f"extension must be one of {EXTENSIONS}, got '{extension}'")
        self.n = n
        self.seed = seed
        self.extension = extension
        self.threads = threads
        self.tol = tol
        self.support: Optional[Support] = None

    def _extend(self, support: Support, rules: Sequence[CorrelationRule]) -> Dict[str, int]:
        apply = apply_strict_extension if self.extension == "strict" else apply_wide_extension
        return {rule.label: apply(support, rule) for rule in rules}

    def _refusal_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for refusal in self.support.refusals:
            counts[refusal.target] = counts.get(refusal.target, 0) + 1
        return dict(sorted(counts.items()))

    def run(self) -> AnalysisReport:
        """Run the analysis. Override in subclasses."""
        raise NotImplementedError("Subclasses must implement run()")


class EprExperiment(ExperimentRunner):
    """Bohm-EPR analysis under the strict or wide extension."""

    def __init__(
        self,
        n: int,
        seed: int,
        extension: str = "strict",
        policy: Union[MeasurementPolicy, str] = "A,Q:0.5;P,B:0.5",
        setup: Optional[BohmEprSetup] = None,
        threads: int = 1,
        tol: float = DEFAULT_TOL,
    ):
        super().__init__(n, seed, extension, threads, tol)
        self.policy = MeasurementPolicy.parse(policy) if isinstance(policy, str) else policy
        for group in self.policy.groups:
            if frozenset(group.labels) not in ALLOWED_EPR_GROUPS:
                raise PolicyError(f"Group {','.join(group.labels)} is not a valid EPR measurement group")
        self.setup = setup or build_singlet(tol=tol)

    def run(self) -> AnalysisReport:
        setup = self.setup
        self.support = support = create_support(setup.state, self.n, self.seed, setup.observables, self.tol)
        allocation = apply_policy(support, self.policy, self.threads)
        assignments = self._extend(support, setup.rules)

        frequencies: Dict[str, Any] = {}
        counts: Dict[str, Any] = {}
        for labels, ids in allocation.items():
            if not ids:
                continue
            tally = OutcomeTally(labels)
            tally.record_many(tuple(support.specimens[i].measured[label] for label in labels) for i in ids)
            frequencies[",".join(labels)] = tally.frequencies()
            counts[",".join(labels)] = tally.get_summary()["counts"]

        sets = {label: measured_set(support, label) for label in ("A", "B", "P", "Q")}
        xy = epr_intersection(support)
        simultaneous = simultaneous_reality_set(support, setup.P, setup.Q)
        record_checks = {rule.label: check_record_correlation(support, rule) for rule in setup.rules}

        expected_all = self.extension == "wide"
        expected_outcome = len(simultaneous) == (self.n if expected_all else 0)
        passed = expected_outcome and all(record_checks.values())

        details = {
            "policy": self.policy.to_spec(),
            "directions": {"n_a": setup.n_a.tolist(), "n_b": setup.n_b.tolist()},
            "measured_set_sizes": {label: len(s) for label, s in sets.items()},
            "intersections": {
                "A∩Q": len(sets["A"] & sets["Q"]),
                "P∩B": len(sets["P"] & sets["B"]),
                "X∩Y": len(xy),
            },
            "counts": counts,
            "assignments": assignments,
            "locality_refusals": self._refusal_counts(),
            "record_correlations": record_checks,
        }
        verdict = reality_verdict("PQ", len(simultaneous), self.n)
        logger.info("EPR analysis (%s): %s", self.extension, verdict)
        return AnalysisReport("epr", self.n, self.seed, self.extension, frequencies,
                              len(simultaneous), None, verdict, passed, details)


class IdealExperiment(ExperimentRunner):
    """Joint (T, Y) measurement with inference of objective (E, G)."""

    def __init__(
        self,
        n: int,
        seed: int,
        extension: str = "strict",
        setup: Optional[IdealSetup] = None,
        threads: int = 1,
        tol: float = DEFAULT_TOL,
    ):
        super().__init__(n, seed, extension, threads, tol)
        self.setup = setup or build_ideal(tol)

    def expected_frequencies(self) -> Dict[Tuple[int, int], float]:
        """Dense Born values of ``<psi|Pi_T(t) Pi_Y(y) psi>``."""
        setup = self.setup
        return {
            (t, y): joint_probability([setup.T, setup.Y], (t, y), setup.state, self.tol)
            for t in (1, 0) for y in (1, 0)
        }

    def run(self) -> AnalysisReport:
        setup = self.setup
        self.support = support = create_support(setup.state, self.n, self.seed, setup.observables, self.tol)
        outcomes = measure(support, support.ids, [setup.T, setup.Y], self.threads)
        tally = OutcomeTally(("T", "Y"))
        tally.record_many(outcomes[i] for i in support.ids)
        assignments = self._extend(support, setup.rules)

        table = {(row.t, row.y): (row.e, row.g) for row in inference_table(setup)}
        inferred = OutcomeTally(("E", "G"))
        conformance = True
        for specimen in support.specimens:
            objective = specimen.objective
            if "E" not in objective or "G" not in objective:
                conformance = False
                continue
            pair = (objective["E"].value, objective["G"].value)
            inferred.record(pair)
            if table[(specimen.measured["T"], specimen.measured["Y"])] != pair:
                conformance = False

        expected = self.expected_frequencies()
        frequencies_ok = tally.within_tolerance(expected)
        simultaneous = simultaneous_reality_set(support, setup.E, setup.G)
        refusals = self._refusal_counts()
        passed = conformance and frequencies_ok and not refusals and len(simultaneous) == self.n

        details = {
            "counts": tally.get_summary()["counts"],
            "expected_frequencies": {outcome_key(k): v for k, v in expected.items()},
            "frequencies_within_4_sigma": frequencies_ok,
            "inferred_EG": inferred.get_summary()["counts"],
            "inference_table": [[row.t, row.y, row.e, row.g] for row in inference_table(setup)],
            "assignments": assignments,
            "locality_refusals": refusals,
        }
        verdict = reality_verdict("EG", len(simultaneous), self.n)
        logger.info("Ideal analysis (%s): %s", self.extension, verdict)
        return AnalysisReport("ideal", self.n, self.seed, self.extension, {"T,Y": tally.frequencies()},
                              len(simultaneous), conformance, verdict, passed, details)


def run_epr_analysis(
    n: int,
    seed: int,
    extension: str = "strict",
    policy: Union[MeasurementPolicy, str] = "A,Q:0.5;P,B:0.5",
    setup: Optional[BohmEprSetup] = None,
    threads: int = 1,
    tol: float = DEFAULT_TOL,
) -> AnalysisReport:
    """Run the Bohm-EPR analysis and return its report."""
    return EprExperiment(n, seed, extension, policy, setup, threads, tol).run()


def run_ideal_analysis(
    n: int,
    seed: int,
    extension: str = "strict",
    setup: Optional[IdealSetup] = None,
    threads: int = 1,
    tol: float = DEFAULT_TOL,
) -> AnalysisReport:
    """Run the ideal-experiment analysis and return its report."""
    return IdealExperiment(n, seed, extension, setup, threads, tol).run()
