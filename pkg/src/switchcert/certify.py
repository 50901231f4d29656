"""Stability certificates from the per-sequence (LP1) and per-composition (LP2) programs.

Both programs maximize the average log-growth ``sum_q gamma_q rho_q`` over
occupancies consistent with the activation bounds. A strictly negative
optimum certifies almost-sure asymptotic stability; anything else is
inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .lifting import (
    MATERIALIZE_LIMIT,
    GammaTables,
    build_gamma_tables,
    gamma_of,
)
from .lpcore import LpModel, LpSolution, LpStatus, solve, verify_certificate
from .matlib import SPECTRAL, InvalidInput, NormKind, spectral_radius
from .model import ActivationBounds, SwitchedSystem

__all__ = [
    "SwitchedSystem", "ActivationBounds", "Verdict", "StabilityCertificate", "AttackPlan",
    "InternalConsistencyError", "AttackRoundingError", "build_lp1", "build_lp2", "optimal_J",
    "feasible_point_lemma2", "recover_lp1_solution", "certify", "extract_attack",
    "monodromy_check", "equivalence_suite",
]

DEFAULT_EPSILON = 1e-24
STABLE_MARGIN = 1e-9
EQUIV_TOL = 1e-9
MAX_DENOMINATOR_CAP = 10_000
ROUNDING_TOL = 1e-3


class Verdict(enum.Enum):
    CERTIFIED_STABLE = "CertifiedStable"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


class InternalConsistencyError(RuntimeError):
    """An LP that must be feasible and bounded was reported otherwise."""


class AttackRoundingError(RuntimeError):
    """No common-denominator rounding of the occupancy within tolerance."""


def _check_bounds(tables: GammaTables, bounds: ActivationBounds):
    if bounds.M != tables.M:
        raise InvalidInput(f"bounds cover {bounds.M} modes, system has {tables.M}")


def _lp(objective, counts, h, bounds):
    # counts: (vars, M); rows = [sum rho = 1] + per-mode ranged frequency rows
    n = counts.shape[0]
    a = np.vstack([np.ones((1, n)), counts.T / h])
    lo = np.concatenate([[1.0], bounds.lower])
    hi = np.concatenate([[1.0], bounds.upper])
    return LpModel(objective, a, lo, hi, np.zeros(n), np.ones(n))


def build_lp1(tables: GammaTables, bounds: ActivationBounds) -> LpModel:
    """One variable per sequence, in base-M index order (mode 1 is digit 0)."""
    _check_bounds(tables, bounds)
    if tables.per_sequence is None:
        raise InvalidInput("LP1 needs per-sequence coefficients; build tables with materialize_sequences=True")
    return _lp(tables.per_sequence, tables.sequence_counts(), tables.h, bounds)


def build_lp2(tables: GammaTables, bounds: ActivationBounds) -> LpModel:
    """One variable per composition, in ``tables.compositions`` order."""
    _check_bounds(tables, bounds)
    counts = np.array(tables.compositions, dtype=float).reshape(-1, tables.M)
    return _lp(tables.gamma_prime, counts, tables.h, bounds)


def _solve_checked(model: LpModel) -> LpSolution:
    sol = solve(model)
    if sol.status in (LpStatus.INFEASIBLE, LpStatus.UNBOUNDED):
        raise InternalConsistencyError(
            f"LP reported {sol.status} although valid activation bounds make it feasible and bounded"
        )
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"LP solver stopped with status {sol.status}")
    report = verify_certificate(model, sol)
    if not report.ok:
        raise InternalConsistencyError("optimality certificate rejected: " + "; ".join(report.violations))
    return sol


def optimal_J(
    system: SwitchedSystem,
    bounds: ActivationBounds,
    h: int,
    norm: NormKind | str = SPECTRAL,
    epsilon: float = DEFAULT_EPSILON,
    which: int = 2,
    *,
    tables: GammaTables | None = None,
    workers: int | None = None,
) -> tuple[float, LpSolution]:
    """Optimal value of LP1 (``which=1``) or LP2 (``which=2``) and the solution."""
    if which not in (1, 2):
        raise InvalidInput("which must be 1 or 2")
    if bounds.M != system.M:
        raise InvalidInput(f"bounds cover {bounds.M} modes, system has {system.M}")
    if which == 1 and system.M ** h > MATERIALIZE_LIMIT:
        raise InvalidInput(f"LP1 needs M**h <= 2**24 variables, got {system.M ** h}")
    if tables is None or (which == 1 and tables.per_sequence is None):
        tables = build_gamma_tables(system, h, norm, epsilon, materialize_sequences=(which == 1),
                                    workers=workers)
    model = build_lp1(tables, bounds) if which == 1 else build_lp2(tables, bounds)
    sol = _solve_checked(model)
    return sol.objective_value, sol


def feasible_point_lemma2(bounds: ActivationBounds, h: int, M: int | None = None) -> dict:
    """Explicit feasible point of LP1: weight ``lower_s + beta_s`` on each constant sequence."""
    M = bounds.M if M is None else M
    if M != bounds.M:
        raise InvalidInput(f"bounds cover {bounds.M} modes, M={M}")
    if h < 1:
        raise InvalidInput("h must be >= 1")
    lo = np.array(bounds.lower)
    hi = np.array(bounds.upper)
    s_lo, s_hi = lo.sum(), hi.sum()
    if s_hi == s_lo:
        beta = np.zeros(M)
    else:
        beta = (hi - lo) * (1.0 - s_lo) / (s_hi - s_lo)
    return {(s + 1,) * h: float(lo[s] + beta[s]) for s in range(M)}


def recover_lp1_solution(lp2_solution: LpSolution, tables: GammaTables) -> dict:
    """Move each composition's weight onto its witness sequence (nonzero entries only)."""
    if lp2_solution.status is not LpStatus.OPTIMAL:
        raise InvalidInput("recovery needs an optimal LP2 solution")
    x = np.asarray(lp2_solution.x)
    if x.size != len(tables.compositions):
        raise InvalidInput("solution length does not match the composition count")
    return {tables.witness(z): float(x[k]) for k, z in enumerate(tables.compositions) if x[k] != 0.0}


def sequence_point_objective(tables: GammaTables, point: dict, system: SwitchedSystem | None = None) -> float:
    """``sum gamma_q rho_q`` for a sparse per-sequence point."""
    total = 0.0
    for q, w in point.items():
        if tables.per_sequence is not None:
            g = tables.gamma_q(q)
        else:
            if system is None:
                raise InvalidInput("a system is needed when per-sequence values are not stored")
            g = gamma_of(system, q, tables.norm, tables.epsilon)
        total += g * w
    return total


def sequence_point_violation(point: dict, bounds: ActivationBounds, h: int) -> float:
    """Largest violation of the simplex row and the per-mode frequency rows."""
    M = bounds.M
    freq = np.zeros(M)
    mass = 0.0
    for q, w in point.items():
        mass += w
        for s in q:
            freq[s - 1] += w / h
    viol = abs(mass - 1.0)
    viol = max(viol, float(np.max(np.array(bounds.lower) - freq, initial=0.0)))
    viol = max(viol, float(np.max(freq - np.array(bounds.upper), initial=0.0)))
    return viol


def _norm_to_dict(norm: NormKind):
    return {"variant": norm.variant, "weight": None if norm.weight is None else [list(r) for r in norm.weight]}


def _norm_from_dict(d) -> NormKind:
    if d["weight"] is None:
        return NormKind(d["variant"])
    return NormKind(d["variant"], tuple(tuple(r) for r in d["weight"]))


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    h: int
    norm: NormKind
    epsilon: float
    J: float
    verdict: Verdict
    worst_occupancy: dict
    witness_schedule: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return self.verdict is Verdict.CERTIFIED_STABLE

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "norm": _norm_to_dict(self.norm),
            "epsilon": self.epsilon,
            "J": self.J,
            "verdict": self.verdict.value,
            "worst_occupancy": [{"composition": list(z), "weight": w} for z, w in self.worst_occupancy.items()],
            "witness_schedule": [{"sequence": list(q), "weight": w} for q, w in self.witness_schedule],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityCertificate":
        return cls(
            h=int(d["h"]),
            norm=_norm_from_dict(d["norm"]),
            epsilon=float(d["epsilon"]),
            J=float(d["J"]),
            verdict=Verdict(d["verdict"]),
            worst_occupancy={tuple(e["composition"]): float(e["weight"]) for e in d["worst_occupancy"]},
            witness_schedule=[(tuple(e["sequence"]), float(e["weight"])) for e in d["witness_schedule"]],
        )

    def __eq__(self, other):
        return isinstance(other, StabilityCertificate) and self.to_dict() == other.to_dict()


def certify(
    system: SwitchedSystem,
    bounds: ActivationBounds,
    h: int,
    norm: NormKind | str = SPECTRAL,
    epsilon: float = DEFAULT_EPSILON,
    *,
    tables: GammaTables | None = None,
    workers: int | None = None,
) -> StabilityCertificate:
    """Solve LP2 and apply the strict sign test ``J' < -1e-9``."""
    if isinstance(norm, str):
        norm = NormKind(norm)
    if tables is None:
        tables = build_gamma_tables(system, h, norm, epsilon, workers=workers)
    J, sol = optimal_J(system, bounds, h, norm, epsilon, 2, tables=tables)
    x = np.clip(np.asarray(sol.x), 0.0, 1.0)

    occupancy = {z: float(x[k]) for k, z in enumerate(tables.compositions) if x[k] > 0.0}
    schedule = [(tables.witness(z), w) for z, w in occupancy.items()]
    # implied mode frequencies must respect the bounds
    freq = np.zeros(system.M)
    for z, w in occupancy.items():
        freq += np.asarray(z) * w / h
    if np.any(freq < np.array(bounds.lower) - 1e-7) or np.any(freq > np.array(bounds.upper) + 1e-7):
        raise InternalConsistencyError(f"worst occupancy implies frequencies {freq.tolist()} outside the bounds")

    verdict = Verdict.CERTIFIED_STABLE if J < -STABLE_MARGIN else Verdict.INCONCLUSIVE
    return StabilityCertificate(h, norm, float(epsilon), float(J), verdict, occupancy, schedule)


@dataclass(frozen=True, eq=False)
class AttackPlan:
    period: int
    schedule: list
    mode_frequencies: np.ndarray
    monodromy_radius: float
    blocks: list = field(default_factory=list)
    max_deviation: float = 0.0

    @property
    def destabilizing(self) -> bool:
        return self.monodromy_radius > 1.0 + STABLE_MARGIN


def monodromy_matrix(system: SwitchedSystem, schedule) -> tuple[np.ndarray, float]:
    """Product over one period, returned as ``(scaled product, log scale)``."""
    prod = np.eye(system.n)
    log_scale = 0.0
    for s in schedule:
        prod = system[int(s)] @ prod
        mx = float(np.max(np.abs(prod)))
        if mx == 0.0:
            return prod, 0.0
        if mx > 1e100 or mx < 1e-100:
            prod = prod / mx
            log_scale += math.log(mx)
    return prod, log_scale


def monodromy_check(system: SwitchedSystem, schedule) -> tuple[float, bool]:
    """Spectral radius of the period product (last entry leftmost) and whether it exceeds 1."""
    schedule = list(schedule)
    if not schedule:
        raise InvalidInput("schedule must be nonempty")
    prod, log_scale = monodromy_matrix(system, schedule)
    rad = spectral_radius(prod)
    if rad > 0.0 and log_scale != 0.0:
        rad = math.exp(math.log(rad) + log_scale)
    return rad, rad > 1.0 + STABLE_MARGIN


def _round_common_denominator(weights: np.ndarray, max_denominator: int):
    best = None
    for D in range(1, max_denominator + 1):
        target = weights * D
        k = np.floor(target).astype(np.int64)
        short = D - int(k.sum())
        if short > 0:
            # largest remainders first, earlier index wins ties
            order = np.lexsort((np.arange(k.size), -(target - k)))
            k[order[:short]] += 1
        dev = float(np.max(np.abs(k / D - weights)))
        if best is None or dev < best[2] - 1e-12:
            best = (D, k, dev)
    return best


def extract_attack(
    system: SwitchedSystem,
    source: StabilityCertificate | LpSolution,
    tables: GammaTables,
    max_denominator: int = 100,
) -> AttackPlan:
    """Periodic schedule from a worst-case occupancy: witness of ``z`` repeated ``k_z`` times."""
    if not 1 <= max_denominator <= MAX_DENOMINATOR_CAP:
        raise InvalidInput(f"max_denominator must lie in 1..{MAX_DENOMINATOR_CAP}")
    if isinstance(source, StabilityCertificate):
        weights = np.array([source.worst_occupancy.get(z, 0.0) for z in tables.compositions])
    else:
        if source.status is not LpStatus.OPTIMAL:
            raise InvalidInput("attack extraction needs an optimal solution")
        weights = np.clip(np.asarray(source.x, dtype=float), 0.0, 1.0)
    if weights.size != len(tables.compositions):
        raise InvalidInput("occupancy does not match the tables")
    weights = weights / weights.sum()

    D, k, dev = _round_common_denominator(weights, max_denominator)
    if dev > ROUNDING_TOL:
        raise AttackRoundingError(
            f"best rounding with denominator <= {max_denominator} deviates by {dev:.3g} (> {ROUNDING_TOL})"
        )
    blocks, schedule = [], []
    for idx, z in enumerate(tables.compositions):
        if k[idx] > 0:
            w = tables.witness(z)
            blocks.append((w, int(k[idx])))
            schedule.extend(list(w) * int(k[idx]))
    counts = np.bincount(np.asarray(schedule) - 1, minlength=system.M)
    radius, _ = monodromy_check(system, schedule)
    return AttackPlan(
        period=len(schedule), schedule=schedule, mode_frequencies=counts / len(schedule),
        monodromy_radius=radius, blocks=blocks, max_deviation=dev,
    )


@dataclass
class EquivalenceEntry:
    h: int
    J: float
    J_prime: float
    recovered: float
    ok: bool
    message: str = ""


@dataclass
class EquivalenceReport:
    entries: list

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def __bool__(self):
        return self.ok


def equivalence_suite(
    system: SwitchedSystem,
    bounds: ActivationBounds,
    norm: NormKind | str = SPECTRAL,
    epsilon: float = DEFAULT_EPSILON,
    h_max: int = 6,
    *,
    tol: float = EQUIV_TOL,
) -> EquivalenceReport:
    """Compare LP1 and LP2 optima, and the recovered LP1 point, for ``h = 1..h_max``."""
    if isinstance(norm, str):
        norm = NormKind(norm)
    entries = []
    for h in range(1, h_max + 1):
        if system.M ** h > MATERIALIZE_LIMIT:
            raise InvalidInput(f"h={h}: M**h exceeds 2**24, LP1 is out of range")
        tables = build_gamma_tables(system, h, norm, epsilon, materialize_sequences=True)
        J1, _ = optimal_J(system, bounds, h, norm, epsilon, 1, tables=tables)
        J2, sol2 = optimal_J(system, bounds, h, norm, epsilon, 2, tables=tables)
        point = recover_lp1_solution(sol2, tables)
        rec = sequence_point_objective(tables, point)
        scale = tol * (1.0 + abs(J1))
        msgs = []
        if abs(J1 - J2) > scale:
            msgs.append(f"|J - J'| = {abs(J1 - J2):.3g}")
        if abs(rec - J1) > scale:
            msgs.append(f"recovered objective off by {abs(rec - J1):.3g}")
        if sequence_point_violation(point, bounds, h) > 1e-9:
            msgs.append("recovered point violates the constraints")
        entries.append(EquivalenceEntry(h, J1, J2, rec, not msgs, "; ".join(msgs)))
    return EquivalenceReport(entries)

