"""Heights along the diagonal flow and finite-horizon certification.

Sign convention: the module vector built from the pair (p, q) becomes small
along the flow near the point x = iota(-p/q).  To target a fraction r use
``LatticePoint.aiming_at(r)``, which is the pair (-numerator, denominator).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import mpmath as mp

from .lattice import FlowedModule
from .numberfield import (
    AlgebraicNumber,
    DomainError,
    NumberFieldSpec,
    SNumber,
    vector_height,
)

DEFAULT_BUDGET = 10_000_000

__all__ = [
    "InvariantViolation",
    "LatticePoint",
    "FlowState",
    "MinHeightResult",
    "SandwichResult",
    "FlowCheckReport",
    "BACertificate",
    "TraceRow",
    "flow_vector",
    "flow_height",
    "forward_derivative",
    "kink_places",
    "min_height",
    "find_small_fraction",
    "sandwich_check",
    "ba_flow_check",
    "certify_ba",
    "flow_trace",
    "write_trace_csv",
    "DEFAULT_BUDGET",
]


class InvariantViolation(RuntimeError):
    """A mathematically guaranteed property failed; indicates a bug or
    insufficient precision, not a property of the input."""


@dataclass(frozen=True)
class LatticePoint:
    """A pair (p, q) of algebraic integers indexing a module vector."""

    p: AlgebraicNumber
    q: AlgebraicNumber

    def __post_init__(self):
        if self.p.field is not self.q.field:
            raise ValueError("p and q belong to different fields")
        if not self.p and not self.q:
            raise ValueError("(0, 0) is not a lattice point")
        if not (self.p.is_integral() and self.q.is_integral()):
            raise ValueError("lattice points require algebraic integers")

    @property
    def field(self) -> NumberFieldSpec:
        return self.p.field

    @classmethod
    def from_integral_coords(cls, field: NumberFieldSpec, p_coords, q_coords) -> "LatticePoint":
        return cls(field.from_integral_coords(p_coords), field.from_integral_coords(q_coords))

    @classmethod
    def aiming_at(cls, fraction: AlgebraicNumber) -> "LatticePoint":
        """The pair whose vector vanishes along the flow at iota(fraction)."""
        m = fraction.denominator()
        return cls(-(fraction * m), fraction.field.rational(m))

    def target_fraction(self) -> AlgebraicNumber:
        """The point -p/q near which this vector is small."""
        if not self.q:
            raise DomainError("pair with q = 0 has no target fraction")
        return -(self.p / self.q)

    def fraction_key(self) -> tuple:
        return (self.p / self.q).coords

    def integral_coords(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (
            tuple(int(c) for c in self.p.integral_coords()),
            tuple(int(c) for c in self.q.integral_coords()),
        )

    def __repr__(self):
        pc, qc = self.integral_coords()
        return f"LatticePoint(p={list(pc)}, q={list(qc)})"


@dataclass(frozen=True)
class FlowState:
    """The module g_t u_x iota(O^2), parametrized by (x, t)."""

    x: SNumber
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("flow time must be nonnegative")

    @property
    def field(self) -> NumberFieldSpec:
        return self.x.field


def _work_bits(state: FlowState, pt: Optional[LatticePoint] = None) -> int:
    coord_bits = 1
    if pt is not None:
        pc, qc = pt.integral_coords()
        coord_bits = max(abs(c).bit_length() for c in pc + qc) or 1
    return max(96, state.x.precision_bits + 16, int(2.9 * state.t) + coord_bits + 64)


def flow_vector(state: FlowState, pt: LatticePoint) -> tuple[SNumber, SNumber]:
    """Per place (e^t (p_v + x_v q_v), e^-t q_v)."""
    fld = state.field
    bits = _work_bits(state, pt)
    with mp.workprec(bits):
        pe = fld.embed(pt.p, bits)
        qe = fld.embed(pt.q, bits)
        et = mp.e ** mp.mpf(state.t)
        first = tuple(et * (pv + xv * qv) for pv, xv, qv in zip(pe.values, state.x.values, qe.values))
        second = tuple(qv / et for qv in qe.values)
    return SNumber(fld, first, bits), SNumber(fld, second, bits)


def flow_height(state: FlowState, pt: LatticePoint):
    """Height of the flowed vector: prod of max(e^-t |q_v|, e^t |p_v + x_v q_v|)^(d_v)."""
    return vector_height(flow_vector(state, pt))


def _closeness_sets(state: FlowState, pt: LatticePoint):
    """Per-place |x_v + iota_v(p/q)| and the threshold e^(-2t)."""
    fld = state.field
    fraction = pt.p / pt.q
    bits = _work_bits(state, pt)
    with mp.workprec(bits):
        fe = fld.embed(fraction, bits)
        threshold = mp.e ** (-2 * mp.mpf(state.t))
        diffs = [abs(xv + fv) for xv, fv in zip(state.x.values, fe.values)]
    return diffs, threshold


def forward_derivative(state: FlowState, pt: LatticePoint) -> int:
    """One-sided slope of log height at time t: sum over places outside the
    closeness set minus the sum inside, weighted by local degrees."""
    if not pt.q:
        raise DomainError("forward derivative requires q != 0")
    diffs, threshold = _closeness_sets(state, pt)
    value = 0
    for place, diff in zip(state.field.places, diffs):
        value += -place.local_degree if diff < threshold else place.local_degree
    return value


def kink_places(state: FlowState, pt: LatticePoint, rel_tol: Optional[float] = None) -> tuple[int, ...]:
    """Places where the closeness comparison is a tie at working precision."""
    if not pt.q:
        return ()
    if rel_tol is None:
        rel_tol = 2.0 ** (-(state.x.precision_bits // 2))
    diffs, threshold = _closeness_sets(state, pt)
    return tuple(
        place.index
        for place, diff in zip(state.field.places, diffs)
        if abs(diff - threshold) <= rel_tol * threshold
    )


@dataclass(frozen=True)
class MinHeightResult:
    value: float
    witness: Optional[LatticePoint]
    complete: bool


def _canonical_sign(pc: Sequence[int], qc: Sequence[int]):
    joined = tuple(pc) + tuple(qc)
    lead = next((c for c in joined if c), 1)
    if lead < 0:
        return tuple(-c for c in pc), tuple(-c for c in qc)
    return tuple(pc), tuple(qc)


def _min_height_from_module(module: FlowedModule, cutoff: float, budget: int) -> MinHeightResult:
    fld = module.field
    state = FlowState(module.x, module.t)
    radius = fld.balance_constant() * cutoff ** (1.0 / fld.degree) * 1.01
    pts, complete = module.enumerate_sup_ball(radius, budget)
    best = None
    for pc, qc in pts:
        pc, qc = _canonical_sign(pc, qc)
        pt = LatticePoint.from_integral_coords(fld, pc, qc)
        h = flow_height(state, pt)
        key = (h, pc, qc)
        if best is None or key < best:
            best = key
    if best is None or best[0] > cutoff:
        return MinHeightResult(float(cutoff), None, complete)
    return MinHeightResult(
        float(min(mp.mpf(cutoff), best[0])),
        LatticePoint.from_integral_coords(fld, best[1], best[2]),
        complete,
    )


def min_height(state: FlowState, cutoff: float = 1.0, budget: int = DEFAULT_BUDGET,
               transform=None) -> MinHeightResult:
    """Minimal height over nonzero module vectors, capped at the cutoff.

    The enumeration is complete below the cutoff: every vector of height at
    most the cutoff has a unit multiple inside the searched sup-norm ball,
    and the height is unit invariant.  An exceeded budget is reported via
    ``complete=False``.
    """
    module = FlowedModule(state.field, state.x, state.t, transform)
    return _min_height_from_module(module, cutoff, budget)


def find_small_fraction(field: NumberFieldSpec, center: SNumber, radius, t: float,
                        epsilon: float, budget: int = DEFAULT_BUDGET) -> Optional[LatticePoint]:
    """The unique fraction whose vector drops below epsilon somewhere on the ball.

    Requires epsilon <= 2^-d (1 + 2 e^(2t) radius)^-d, which makes the
    fraction class unique; finding two distinct classes is reported as an
    internal error.  Returns None when no vector gets that small on the ball.
    """
    d = field.degree
    bits = max(96, center.precision_bits + 16, int(2.9 * t) + 64)
    with mp.workprec(bits):
        radius = mp.mpf(radius)
        e2t = mp.e ** (2 * mp.mpf(t))
        unique_bound = mp.mpf(2) ** (-d) * (1 + 2 * e2t * radius) ** (-d)
        if mp.mpf(epsilon) > unique_bound * (1 + mp.mpf("1e-9")):
            raise ValueError(
                f"epsilon {epsilon} exceeds the uniqueness bound {float(unique_bound)}"
            )
        center_cutoff = float(mp.mpf(epsilon) * (1 + e2t * radius) ** d)

    module = FlowedModule(field, center, t)
    sup_radius = field.balance_constant() * center_cutoff ** (1.0 / d) * 1.01
    pts, complete = module.enumerate_sup_ball(sup_radius, budget)
    if not complete:
        raise InvariantViolation("enumeration budget exceeded while locating small fractions")

    state = FlowState(center, t)
    by_fraction: dict[tuple, tuple] = {}
    with mp.workprec(bits):
        et = mp.e ** mp.mpf(t)
        for pc, qc in pts:
            pc, qc = _canonical_sign(pc, qc)
            pt = LatticePoint.from_integral_coords(field, pc, qc)
            if not pt.q:
                continue
            fe = field.embed(pt.p / pt.q, bits)
            qe = field.embed(pt.q, bits)
            h_min = mp.mpf(1)
            for place, xv, fv, qv in zip(field.places, center.values, fe.values, qe.values):
                gap = abs(xv + fv) - radius
                if gap < 0:
                    gap = mp.mpf(0)
                h_min *= max(abs(qv) / et, et * abs(qv) * gap) ** place.local_degree
            if h_min <= epsilon:
                key = pt.fraction_key()
                cand = (h_min, pc, qc)
                if key not in by_fraction or cand < by_fraction[key]:
                    by_fraction[key] = cand

    if not by_fraction:
        return None
    if len(by_fraction) > 1:
        raise InvariantViolation(
            f"{len(by_fraction)} distinct fractions below the uniqueness threshold; "
            "enumeration or precision bug"
        )
    (_, pc, qc), = by_fraction.values()
    return LatticePoint.from_integral_coords(field, pc, qc)


@dataclass(frozen=True)
class SandwichResult:
    ratio: float
    bound: float


def sandwich_check(x: SNumber, y: SNumber, pt: LatticePoint, t: float) -> SandwichResult:
    """Height ratio between nearby base points against the bound (1+e^(2t) rho)^d."""
    hx = flow_height(FlowState(x, t), pt)
    hy = flow_height(FlowState(y, t), pt)
    if hx == 0 or hy == 0:
        raise DomainError("sandwich comparison requires nonzero heights")
    d = x.field.degree
    with mp.workprec(max(x.precision_bits, y.precision_bits, 96)):
        rho = x.dist(y)
        bound = (1 + mp.e ** (2 * mp.mpf(t)) * rho) ** d
        ratio = hy / hx
        slack = 1 + mp.mpf("1e-9")
        if ratio > bound * slack or ratio < 1 / (bound * slack):
            raise InvariantViolation(
                f"height ratio {float(ratio)} escapes the sandwich bound {float(bound)}"
            )
        return SandwichResult(float(ratio), float(bound))


# ---------------------------------------------------------------------------
# finite-horizon certification


@dataclass(frozen=True)
class FlowCheckReport:
    ok: bool
    witness: Optional[LatticePoint]
    witness_time: Optional[float]
    incomplete_times: tuple[float, ...]
    kink_times: tuple[float, ...]


def _violation_at_time(module: FlowedModule, epsilon: float, budget: int):
    """A module vector with height < epsilon and negative slope, if any.

    Returns (violation, complete, kink_seen); vectors with q = 0 have slope
    +d and height >= 1, so they can never violate.
    """
    fld = module.field
    state = FlowState(module.x, module.t)
    radius = fld.balance_constant() * epsilon ** (1.0 / fld.degree) * 1.01
    pts, complete = module.enumerate_sup_ball(radius, budget)
    kink_seen = False
    candidates = []
    for pc, qc in pts:
        pc, qc = _canonical_sign(pc, qc)
        pt = LatticePoint.from_integral_coords(fld, pc, qc)
        h = flow_height(state, pt)
        if h >= epsilon:
            continue
        if not pt.q:
            continue
        if kink_places(state, pt):
            kink_seen = True
        if forward_derivative(state, pt) < 0:
            candidates.append((h, pc, qc, pt))
    if not candidates:
        return None, complete, kink_seen
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    return candidates[0][3], complete, kink_seen


def ba_flow_check(x: SNumber, times: Sequence[float], epsilon: float,
                  budget: int = DEFAULT_BUDGET) -> FlowCheckReport:
    """Check, at each listed time, that every enumerated module vector has
    height >= epsilon or nonnegative forward slope."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    times = sorted(float(t) for t in times)
    if times and times[0] < 0:
        raise ValueError("times must be nonnegative")
    module = FlowedModule(x.field, x, times[0] if times else 0.0)
    incomplete: list[float] = []
    kinks: list[float] = []
    for t in times:
        module.advance_to(t)
        violation, complete, kink_seen = _violation_at_time(module, epsilon, budget)
        if kink_seen:
            kinks.append(t)
        if not complete:
            incomplete.append(t)
        if violation is not None:
            return FlowCheckReport(False, violation, t, tuple(incomplete), tuple(kinks))
    return FlowCheckReport(True, None, None, tuple(incomplete), tuple(kinks))


@dataclass(frozen=True)
class BACertificate:
    """Finite-horizon verdict on badly-approximable behaviour.

    A refutation is specific to the (epsilon, horizon) pair; the derived
    lower bound applies to heights at all times up to the horizon when the
    verdict is certified-to-horizon.
    """

    horizon: float
    epsilon: float
    spacing: float
    times: tuple[float, ...]
    verdict: str  # "certified-to-horizon" | "refuted" | "inconclusive"
    witness: Optional[LatticePoint] = None
    witness_time: Optional[float] = None
    lower_bound: Optional[float] = None
    incomplete_times: tuple[float, ...] = ()
    kink_times: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "horizon": self.horizon,
            "epsilon": self.epsilon,
            "spacing": self.spacing,
            "times_checked": len(self.times),
            "verdict": self.verdict,
            "lower_bound": self.lower_bound,
            "witness": None,
            "witness_time": self.witness_time,
            "incomplete_times": list(self.incomplete_times),
            "kink_times": list(self.kink_times),
        }
        if self.witness is not None:
            pc, qc = self.witness.integral_coords()
            out["witness"] = {"p": list(pc), "q": list(qc)}
        return out


def certify_ba(x: SNumber, horizon: float, epsilon: float, spacing: float,
               budget: int = DEFAULT_BUDGET) -> BACertificate:
    """Scan equally spaced times up to the horizon for vectors that are both
    small and shrinking; certified when none exist at any checked time."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if spacing <= 0 or horizon <= 0:
        raise ValueError("spacing and horizon must be positive")
    n_times = int(math.floor(horizon / spacing + 1e-12))
    times = tuple(spacing * n for n in range(1, n_times + 1))

    module = FlowedModule(x.field, x, times[0] if times else 0.0)
    incomplete: list[float] = []
    kinks: list[float] = []
    d = x.field.degree
    for t in times:
        module.advance_to(t)
        violation, complete, kink_seen = _violation_at_time(module, epsilon, budget)
        if kink_seen:
            kinks.append(t)
        if not complete:
            incomplete.append(t)
        if violation is not None:
            return BACertificate(
                horizon, epsilon, spacing, times, "refuted",
                witness=violation, witness_time=t,
                incomplete_times=tuple(incomplete), kink_times=tuple(kinks),
            )
    verdict = "inconclusive" if incomplete else "certified-to-horizon"
    lower = None
    if verdict == "certified-to-horizon" and times:
        lower = float(min(math.exp(-d * times[0]), epsilon * math.exp(-d * spacing)))
    return BACertificate(
        horizon, epsilon, spacing, times, verdict,
        lower_bound=lower, incomplete_times=tuple(incomplete), kink_times=tuple(kinks),
    )


# ---------------------------------------------------------------------------
# flow traces


@dataclass(frozen=True)
class TraceRow:
    t: float
    delta_h: float
    witness: Optional[LatticePoint]
    derivative: Optional[int]


def flow_trace(x: SNumber, times: Sequence[float], cutoff: float = 1.0,
               budget: int = DEFAULT_BUDGET) -> list[TraceRow]:
    """Minimal heights (capped at the cutoff) along a time grid, with witnesses."""
    times = sorted(float(t) for t in times)
    module = FlowedModule(x.field, x, times[0] if times else 0.0)
    rows = []
    for t in times:
        module.advance_to(t)
        result = _min_height_from_module(module, cutoff, budget)
        deriv = None
        if result.witness is not None:
            state = FlowState(x, t)
            deriv = (
                x.field.degree
                if not result.witness.q
                else forward_derivative(state, result.witness)
            )
        rows.append(TraceRow(t, result.value, result.witness, deriv))
    return rows


def write_trace_csv(rows: Sequence[TraceRow], fp) -> None:
    writer = csv.writer(fp)
    writer.writerow(["t", "delta_H", "witness_p", "witness_q", "derivative_at_witness"])
    for row in rows:
        if row.witness is None:
            writer.writerow([f"{row.t:.6f}", repr(row.delta_h), "", "", ""])
        else:
            pc, qc = row.witness.integral_coords()
            writer.writerow(
                [
                    f"{row.t:.6f}",
                    repr(row.delta_h),
                    ";".join(str(c) for c in pc),
                    ";".join(str(c) for c in qc),
                    row.derivative,
                ]
            )
