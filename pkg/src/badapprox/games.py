"""Engines for the absolute game on a set family and for the classical
alternating-ball game, with move validation, replayable transcripts, and
strategy transformers.

Absolute-game rules enforced here: Bob plays balls with centers in the
playground; Alice deletes a neighborhood of a family set of radius at most
beta times Bob's radius; Bob's next ball shrinks by a factor in
[beta, 1], nests formally, and stays strictly clear of the deleted
neighborhood.  When Bob has no legal move he wins and the play stops.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Optional, Sequence

import mpmath as mp

from .diffuse import EscapeFailure, diffuse_escape
from .flow import DEFAULT_BUDGET, LatticePoint, find_small_fraction
from .numberfield import (
    AlgebraicNumber,
    AnchoredSubspace,
    NumberFieldSpec,
    SNumber,
    qualifying_subsets,
)
from .playgrounds import KSpace, Playground, PointSet, UnitInterval

__all__ = [
    "FormalBall",
    "ball_order_leq",
    "AliceChoice",
    "BallMove",
    "DeletionMove",
    "SingletonFamily",
    "FractionSubspaceFamily",
    "UnionFamily",
    "AbsoluteGameConfig",
    "SchmidtGameConfig",
    "MoveCheck",
    "validate_move",
    "play",
    "schmidt_play",
    "Transcript",
    "AliceMainStrategy",
    "alice_main_strategy",
    "AliceDummy",
    "BobRandom",
    "BobTargetSeeking",
    "BobHugger",
    "SchmidtBobRandom",
    "absolute_to_schmidt",
    "intersect_strategies",
    "intersect_schedule",
    "intersect_schedule_inverse",
    "split_union_strategy",
    "avoid_points",
    "translated_strategy",
]


# ---------------------------------------------------------------------------
# formal balls and moves


@dataclass(frozen=True)
class FormalBall:
    """A (center, radius) pair; radius must be positive in game play."""

    center: Any
    radius: Any

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")


def ball_order_leq(inner: FormalBall, outer: FormalBall, playground: Playground,
                   tolerance=0) -> bool:
    """The formal-ball partial order: dist of centers <= radius difference."""
    gap = (mp.mpf(outer.radius) - mp.mpf(inner.radius)) - playground.dist(inner.center, outer.center)
    return gap >= -tolerance * mp.mpf(outer.radius)


@dataclass(frozen=True)
class AliceChoice:
    """Alice's deletion: a tuple of family sets and the neighborhood radius.

    An empty tuple is the dummy move (nothing is deleted)."""

    sets: tuple
    rho: Any
    info: dict = dc_field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class BallMove:
    player: str
    ball: FormalBall


@dataclass(frozen=True)
class DeletionMove:
    player: str
    choice: AliceChoice


# ---------------------------------------------------------------------------
# set families


@dataclass(frozen=True)
class SingletonFamily:
    """All one-point subsets of the space."""

    def admits(self, closed_set) -> bool:
        return isinstance(closed_set, PointSet)


@dataclass(frozen=True)
class FractionSubspaceFamily:
    """Affine subspaces anchored at field points whose fixed coordinate set
    is heavy (weight above half the degree)."""

    field: NumberFieldSpec

    def admits(self, closed_set) -> bool:
        return (
            isinstance(closed_set, AnchoredSubspace)
            and closed_set.field is self.field
            and closed_set.is_valid
        )


@dataclass(frozen=True)
class UnionFamily:
    """Unions of at most ``arity`` sets from a base family, per move."""

    base: Any
    arity: int

    def admits(self, closed_set) -> bool:
        return self.base.admits(closed_set)


def _family_check(family, choice: AliceChoice) -> list[str]:
    sets = choice.sets
    base = family.base if isinstance(family, UnionFamily) else family
    arity = family.arity if isinstance(family, UnionFamily) else 1
    problems = []
    if len(sets) > arity:
        problems.append(f"family allows at most {arity} sets per move, got {len(sets)}")
    for s in sets:
        if not base.admits(s):
            problems.append(f"set {s!r} is not in the configured family")
    return problems


# ---------------------------------------------------------------------------
# configs


@dataclass
class AbsoluteGameConfig:
    beta: float
    playground: Playground
    family: Any
    initial_ball: FormalBall
    max_rounds: int
    target_certifier: Optional[Callable[[Any, "Transcript"], Any]] = None
    validate: bool = True
    tolerance: float = 0.0  # live play is strict; replay adds round-trip slack
    radius_underflow: float = 0.0

    def summary(self) -> dict:
        return {
            "game": "absolute",
            "beta": float(self.beta),
            "playground": self.playground.name,
            "max_rounds": self.max_rounds,
        }


@dataclass
class SchmidtGameConfig:
    alpha: float
    beta: float
    playground: Playground
    initial_ball: FormalBall
    max_rounds: int
    target_certifier: Optional[Callable[[Any, "Transcript"], Any]] = None
    validate: bool = True
    tolerance: float = 1e-12

    def summary(self) -> dict:
        return {
            "game": "schmidt",
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "playground": self.playground.name,
            "max_rounds": self.max_rounds,
        }


@dataclass(frozen=True)
class MoveCheck:
    ok: bool
    violations: tuple[str, ...]


def _validate_alice_absolute(config: AbsoluteGameConfig, bob_ball: FormalBall,
                             choice: AliceChoice) -> list[str]:
    with mp.workprec(_bits_for_radius(choice.rho) + 64):
        problems = []
        rho, r = mp.mpf(choice.rho), mp.mpf(bob_ball.radius)
        tol = mp.mpf(config.tolerance)
        if not rho > 0:
            problems.append("H2: deletion radius must be positive")
        if rho > mp.mpf(config.beta) * r * (1 + tol):
            problems.append(f"H2: rho {float(rho)} exceeds beta * r = {float(config.beta * r)}")
        problems.extend(_family_check(config.family, choice))
        return problems


def _validate_bob_absolute(config: AbsoluteGameConfig, prev_ball: FormalBall,
                           choice: Optional[AliceChoice], new_ball: FormalBall) -> list[str]:
    with mp.workprec(_bits_for_radius(new_ball.radius) + 64):
        problems = []
        pg = config.playground
        tol = mp.mpf(config.tolerance)
        r_prev, r_new = mp.mpf(prev_ball.radius), mp.mpf(new_ball.radius)
        if not pg.contains(new_ball.center):
            problems.append("H1: center is outside the playground")
        if not r_new > 0:
            problems.append("H1: radius must be positive")
        if r_new < mp.mpf(config.beta) * r_prev * (1 - tol):
            problems.append(
                f"H3: radius {float(r_new)} below beta * r = {float(config.beta * r_prev)}"
            )
        if r_new > r_prev * (1 + tol):
            problems.append("H3: radius may not grow")
        if not ball_order_leq(new_ball, prev_ball, pg, tol):
            problems.append("H3: ball is not formally nested in the previous one")
        if choice is not None and choice.sets:
            d = pg.sets_distance(new_ball.center, choice.sets)
            slack = tol * r_prev
            if not d > mp.mpf(choice.rho) + r_new - slack:
                problems.append(
                    f"H4: center distance {float(d)} is not strictly above rho + r = "
                    f"{float(mp.mpf(choice.rho) + r_new)}"
                )
        return problems


def _validate_alice_schmidt(config: SchmidtGameConfig, bob_ball: FormalBall,
                            alice_ball: FormalBall) -> list[str]:
    with mp.workprec(_bits_for_radius(alice_ball.radius) + 64):
        problems = []
        pg = config.playground
        tol = mp.mpf(config.tolerance)
        r_bob, r_alice = mp.mpf(bob_ball.radius), mp.mpf(alice_ball.radius)
        expected = mp.mpf(config.alpha) * r_bob
        if abs(r_alice - expected) > tol * r_bob + mp.mpf("1e-300"):
            problems.append(f"S2: radius must equal alpha * r(B) = {float(expected)}")
        if not ball_order_leq(alice_ball, bob_ball, pg, tol):
            problems.append("S2: ball is not formally nested in Bob's")
        return problems


def _validate_bob_schmidt(config: SchmidtGameConfig, alice_ball: FormalBall,
                          bob_ball: FormalBall) -> list[str]:
    with mp.workprec(_bits_for_radius(bob_ball.radius) + 64):
        problems = []
        pg = config.playground
        tol = mp.mpf(config.tolerance)
        r_alice, r_bob = mp.mpf(alice_ball.radius), mp.mpf(bob_ball.radius)
        expected = mp.mpf(config.beta) * r_alice
        if abs(r_bob - expected) > tol * r_alice + mp.mpf("1e-300"):
            problems.append(f"S3: radius must equal beta * r(A) = {float(expected)}")
        if not ball_order_leq(bob_ball, alice_ball, pg, tol):
            problems.append("S3: ball is not formally nested in Alice's")
        return problems


def validate_move(history: Sequence, next_move, config) -> MoveCheck:
    """Validate the next move against the tail of the move history.

    For the absolute game the history alternates BallMove/DeletionMove; for
    the alternating-ball game it is all BallMove.  Violations are returned
    as values naming the broken rule, never raised.
    """
    if isinstance(config, AbsoluteGameConfig):
        if isinstance(next_move, DeletionMove):
            prev = history[-1]
            problems = _validate_alice_absolute(config, prev.ball, next_move.choice)
        else:
            choice = history[-1].choice if history and isinstance(history[-1], DeletionMove) else None
            prev_ball = next(m.ball for m in reversed(history) if isinstance(m, BallMove))
            problems = _validate_bob_absolute(config, prev_ball, choice, next_move.ball)
    else:
        prev = history[-1]
        if next_move.player == "alice":
            problems = _validate_alice_schmidt(config, prev.ball, next_move.ball)
        else:
            problems = _validate_bob_schmidt(config, prev.ball, next_move.ball)
    return MoveCheck(not problems, tuple(problems))


# ---------------------------------------------------------------------------
# transcripts


def _bits_for_radius(radius) -> int:
    r = float(radius) if radius else 1.0
    if r <= 0:
        return 256
    return max(128, int(-math.log2(r)) + 96)


def _num_to_str(v, bits: int) -> str:
    digits = max(25, int(bits * 0.302) + 6)
    return mp.nstr(mp.mpf(v), digits, strip_zeros=True)


def _point_to_json(point, bits: int):
    if isinstance(point, SNumber):
        out = []
        for place, v in zip(point.field.places, point.values):
            if place.kind == "R":
                out.append(_num_to_str(v, bits))
            else:
                out.append([_num_to_str(mp.re(v), bits), _num_to_str(mp.im(v), bits)])
        return out
    return _num_to_str(point, bits)


def _point_from_json(data, playground: Playground, bits: int):
    with mp.workprec(bits):
        if isinstance(playground, KSpace):
            values = []
            for place, item in zip(playground.field.places, data):
                if place.kind == "R":
                    values.append(mp.mpf(item))
                else:
                    values.append(mp.mpc(mp.mpf(item[0]), mp.mpf(item[1])))
            return SNumber(playground.field, tuple(values), bits)
        return mp.mpf(data)


def _set_to_json(closed_set, bits: int) -> dict:
    if isinstance(closed_set, AnchoredSubspace):
        return {
            "anchor_p": [str(c) for c in closed_set.anchor_p.coords],
            "anchor_q": [str(c) for c in closed_set.anchor_q.coords],
            "T": sorted(closed_set.coord_set),
        }
    if isinstance(closed_set, PointSet):
        return {"point": _point_to_json(closed_set.point, bits)}
    raise TypeError(f"cannot serialize {type(closed_set).__name__}")


def _set_from_json(data: dict, playground: Playground, bits: int):
    if "T" in data:
        fld = playground.field
        return AnchoredSubspace(
            fld.element(data["anchor_p"]), fld.element(data["anchor_q"]),
            frozenset(data["T"]),
        )
    return PointSet(_point_from_json(data["point"], playground, bits))


@dataclass
class Transcript:
    """Full record of one play, replayable and serializable as JSON lines."""

    config_summary: dict
    moves: list
    terminated_reason: str
    limit_estimate: Optional[FormalBall]
    certifier_verdict: Any = None
    forfeit: Optional[dict] = None

    @property
    def bob_balls(self) -> list[FormalBall]:
        return [m.ball for m in self.moves if isinstance(m, BallMove) and m.player == "bob"]

    @property
    def alice_choices(self) -> list[AliceChoice]:
        return [m.choice for m in self.moves if isinstance(m, DeletionMove)]

    def validate(self, config) -> list[tuple[int, str]]:
        """Re-check every recorded move; returns (move index, violation) pairs.

        Uses a small relative tolerance so that serialization round trips of
        exact-ratio radii do not read as violations."""
        import copy

        replay_config = copy.copy(config)
        replay_config.tolerance = max(config.tolerance, 2.0**-40)
        problems = []
        for i in range(1, len(self.moves)):
            check = validate_move(self.moves[:i], self.moves[i], replay_config)
            for v in check.violations:
                problems.append((i, v))
        return problems

    def to_jsonl(self, fp) -> None:
        header = dict(self.config_summary)
        header["type"] = "header"
        fp.write(json.dumps(header, sort_keys=True) + "\n")
        round_no = 0
        for move in self.moves:
            if isinstance(move, BallMove):
                if move.player == "bob":
                    round_no += 1
                bits = _bits_for_radius(move.ball.radius)
                line = {
                    "round": round_no,
                    "player": move.player,
                    "center": _point_to_json(move.ball.center, bits),
                    "radius": _num_to_str(move.ball.radius, bits),
                    "prec": bits,
                }
            else:
                choice = move.choice
                bits = _bits_for_radius(choice.rho)
                line = {
                    "round": round_no,
                    "player": move.player,
                    "deleted": [_set_to_json(s, bits) for s in choice.sets],
                    "rho": _num_to_str(choice.rho, bits),
                    "prec": bits,
                }
            fp.write(json.dumps(line, sort_keys=True) + "\n")
        tail = {"type": "result", "terminated": self.terminated_reason}
        if self.limit_estimate is not None:
            bits = _bits_for_radius(self.limit_estimate.radius)
            tail["limit_center"] = _point_to_json(self.limit_estimate.center, bits)
            tail["limit_radius"] = _num_to_str(self.limit_estimate.radius, bits)
            tail["prec"] = bits
        if self.certifier_verdict is not None:
            tail["verdict"] = self.certifier_verdict
        if self.forfeit:
            tail["forfeit"] = self.forfeit
        fp.write(json.dumps(tail, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, fp, playground: Playground) -> "Transcript":
        header = None
        moves = []
        tail: dict = {}
        for raw in fp:
            raw = raw.strip()
            if not raw:
                continue
            data = json.loads(raw)
            if data.get("type") == "header":
                header = data
            elif data.get("type") == "result":
                tail = data
            elif "deleted" in data:
                bits = data.get("prec", 128)
                sets = tuple(_set_from_json(s, playground, bits) for s in data["deleted"])
                with mp.workprec(bits):
                    rho = mp.mpf(data["rho"])
                moves.append(DeletionMove(data["player"], AliceChoice(sets, rho)))
            else:
                bits = data.get("prec", 128)
                center = _point_from_json(data["center"], playground, bits)
                with mp.workprec(bits):
                    radius = mp.mpf(data["radius"])
                moves.append(BallMove(data["player"], FormalBall(center, radius)))
        limit = None
        if "limit_center" in tail:
            bits = tail.get("prec", 128)
            with mp.workprec(bits):
                limit = FormalBall(
                    _point_from_json(tail["limit_center"], playground, bits),
                    mp.mpf(tail["limit_radius"]),
                )
        return cls(
            config_summary=header or {},
            moves=moves,
            terminated_reason=tail.get("terminated", "unknown"),
            limit_estimate=limit,
            certifier_verdict=tail.get("verdict"),
            forfeit=tail.get("forfeit"),
        )


# ---------------------------------------------------------------------------
# engines


def play(config: AbsoluteGameConfig, alice, bob) -> Transcript:
    """Run the absolute game; strategies are callables of (ball|choice, config)."""
    ball = config.initial_ball
    moves: list = [BallMove("bob", ball)]
    reason = "max-rounds"
    forfeit = None

    for _round in range(1, config.max_rounds + 1):
        bits = _bits_for_radius(ball.radius)
        with mp.workprec(bits):
            choice = alice(ball, config)
            if config.validate:
                problems = _validate_alice_absolute(config, ball, choice)
                if problems:
                    moves.append(DeletionMove("alice", choice))
                    reason, forfeit = "alice-forfeit", {"round": _round, "player": "alice",
                                                        "violations": problems}
                    break
            moves.append(DeletionMove("alice", choice))

            nxt = bob(ball, choice, config)
            if nxt is None:
                reason = "bob-stuck"
                break
            if config.validate:
                problems = _validate_bob_absolute(config, ball, choice, nxt)
                if problems:
                    moves.append(BallMove("bob", nxt))
                    reason, forfeit = "bob-forfeit", {"round": _round, "player": "bob",
                                                      "violations": problems}
                    break
            moves.append(BallMove("bob", nxt))
            ball = nxt
        if config.radius_underflow and ball.radius < config.radius_underflow:
            reason = "radius-underflow"
            break

    transcript = Transcript(config.summary(), moves, reason, ball, forfeit=forfeit)
    if config.target_certifier is not None:
        transcript.certifier_verdict = config.target_certifier(ball.center, transcript)
    return transcript


def schmidt_play(config: SchmidtGameConfig, alice, bob) -> Transcript:
    """Run the alternating-ball game with fixed radius ratios."""
    ball = config.initial_ball
    moves: list = [BallMove("bob", ball)]
    reason = "max-rounds"
    forfeit = None

    for _round in range(1, config.max_rounds + 1):
        bits = _bits_for_radius(ball.radius)
        with mp.workprec(bits):
            alice_ball = alice(ball, config)
            if config.validate:
                problems = _validate_alice_schmidt(config, ball, alice_ball)
                if problems:
                    moves.append(BallMove("alice", alice_ball))
                    reason, forfeit = "alice-forfeit", {"round": _round, "player": "alice",
                                                        "violations": problems}
                    break
            moves.append(BallMove("alice", alice_ball))

            nxt = bob(alice_ball, config)
            if nxt is None:
                reason = "bob-stuck"
                break
            if config.validate:
                problems = _validate_bob_schmidt(config, alice_ball, nxt)
                if problems:
                    moves.append(BallMove("bob", nxt))
                    reason, forfeit = "bob-forfeit", {"round": _round, "player": "bob",
                                                      "violations": problems}
                    break
            moves.append(BallMove("bob", nxt))
            ball = nxt

    transcript = Transcript(config.summary(), moves, reason, ball, forfeit=forfeit)
    if config.target_certifier is not None:
        transcript.certifier_verdict = config.target_certifier(ball.center, transcript)
    return transcript


# ---------------------------------------------------------------------------
# Alice strategies


class AliceDummy:
    """Always deletes nothing (legal in every family)."""

    name = "dummy"

    def __call__(self, ball: FormalBall, config=None) -> AliceChoice:
        beta = config.beta if config is not None else 0.5
        return AliceChoice((), mp.mpf(beta) * mp.mpf(ball.radius))


class AliceMainStrategy:
    """Deletes neighborhoods of every heavy subspace through the unique
    dangerous fraction on Bob's ball, when one exists.

    At a ball of radius rho the strategy looks at flow time
    t = -log(beta * rho) / 2 with threshold 2^-d (1 + 2/beta)^-d; the
    deleted neighborhoods have radius beta * rho, which equals e^(-2t).
    """

    name = "main"

    def __init__(self, field: NumberFieldSpec, beta: float, budget: int = DEFAULT_BUDGET):
        self.field = field
        self.beta = float(beta)
        d = field.degree
        self.epsilon = 2.0 ** (-d) * (1 + 2.0 / self.beta) ** (-d)
        self._subsets = qualifying_subsets(field)
        self.budget = budget

    def __call__(self, ball: FormalBall, config=None) -> AliceChoice:
        rho_ball = mp.mpf(ball.radius)
        rho = mp.mpf(self.beta) * rho_ball
        t = float(-mp.log(rho) / 2)
        info: dict = {"epsilon": self.epsilon, "t": max(t, 0.0)}
        if t <= 0:
            return AliceChoice((), rho, info)
        pt = find_small_fraction(
            self.field, ball.center, rho_ball, t, self.epsilon, self.budget
        )
        if pt is None:
            return AliceChoice((), rho, info)
        fraction = pt.target_fraction()
        m = fraction.denominator()
        anchor_p, anchor_q = fraction * m, self.field.rational(m)
        sets = tuple(AnchoredSubspace(anchor_p, anchor_q, T) for T in self._subsets)
        info["fraction"] = fraction
        return AliceChoice(sets, rho, info)


def alice_main_strategy(bob_ball: FormalBall, beta: float) -> AliceChoice:
    """One-shot form of the main strategy for a ball in some Minkowski space."""
    field = bob_ball.center.field
    return AliceMainStrategy(field, beta)(bob_ball)


# ---------------------------------------------------------------------------
# Bob strategies


def _legal_bob_ball(pg: Playground, prev: FormalBall, choice: AliceChoice, beta,
                    rng: random.Random, attempts: int):
    """Rejection-sample a legal next ball with radius beta * r."""
    r_new = mp.mpf(beta) * mp.mpf(prev.radius)
    max_shift = mp.mpf(prev.radius) - r_new
    threshold = mp.mpf(choice.rho) + r_new if choice.sets else None
    for _ in range(attempts):
        center = pg.sample_in_ball(prev.center, max_shift, rng)
        if center is None:
            continue
        if threshold is None or pg.sets_distance(center, choice.sets) > threshold:
            return FormalBall(center, r_new)
    return None


class BobRandom:
    """Uniformly sampled legal balls with the maximal shrink factor."""

    name = "random"

    def __init__(self, seed: int = 0, attempts: int = 10_000):
        self.rng = random.Random(seed)
        self.attempts = attempts

    def __call__(self, prev: FormalBall, choice: AliceChoice, config) -> Optional[FormalBall]:
        return _legal_bob_ball(config.playground, prev, choice, config.beta, self.rng,
                               self.attempts)


class BobTargetSeeking:
    """Moves toward a fixed target point as far as legality allows."""

    name = "target"

    def __init__(self, target, seed: int = 0, samples: int = 256):
        self.target = target
        self.rng = random.Random(seed)
        self.samples = samples

    def _toward_target(self, pg, prev, r_new):
        gap = pg.dist(self.target, prev.center)
        max_shift = mp.mpf(prev.radius) - r_new
        if gap <= max_shift:
            return self.target if pg.contains(self.target) else None
        if isinstance(prev.center, SNumber):
            scale = max_shift / gap
            deltas = [(tv - cv) * scale for tv, cv in zip(self.target.values, prev.center.values)]
            return prev.center.shift(deltas)
        cand = float(prev.center) + float(max_shift) * (1 if self.target > prev.center else -1)
        return cand if pg.contains(cand) else None

    def __call__(self, prev: FormalBall, choice: AliceChoice, config) -> Optional[FormalBall]:
        pg = config.playground
        r_new = mp.mpf(config.beta) * mp.mpf(prev.radius)
        threshold = mp.mpf(choice.rho) + r_new if choice.sets else None
        candidates = []
        direct = self._toward_target(pg, prev, r_new)
        if direct is not None:
            candidates.append(direct)
        max_shift = mp.mpf(prev.radius) - r_new
        candidates.extend(
            c for c in (pg.sample_in_ball(prev.center, max_shift, self.rng)
                        for _ in range(self.samples)) if c is not None
        )
        best = None
        for c in candidates:
            if threshold is not None and not pg.sets_distance(c, choice.sets) > threshold:
                continue
            gap = pg.dist(c, self.target)
            if best is None or gap < best[0]:
                best = (gap, c)
        return FormalBall(best[1], r_new) if best else None


class BobHugger:
    """Centers as close to Alice's deleted set as the strict rule permits."""

    name = "hugger"

    def __init__(self, seed: int = 0, samples: int = 512, margin: float = 1e-3):
        self.rng = random.Random(seed)
        self.samples = samples
        self.margin = margin

    def _boundary_candidates(self, pg, prev, choice, threshold):
        out = []
        target_dist = threshold * (1 + self.margin)
        for closed_set in choice.sets:
            if isinstance(closed_set, AnchoredSubspace) and isinstance(prev.center, SNumber):
                anchor = closed_set.anchor_point(prev.center.precision_bits)
                current = pg.set_distance(prev.center, closed_set)
                values = list(prev.center.values)
                if current > 0:
                    scale = target_dist / current
                    for i in sorted(closed_set.coord_set):
                        values[i] = anchor.values[i] + (values[i] - anchor.values[i]) * scale
                else:
                    values[min(closed_set.coord_set)] += target_dist
                out.append(SNumber(prev.center.field, tuple(values), prev.center.precision_bits))
            elif isinstance(closed_set, PointSet) and not isinstance(prev.center, SNumber):
                z = mp.mpf(closed_set.point)
                for cand in (z + target_dist, z - target_dist):
                    if pg.contains(cand):
                        out.append(cand)
        return out

    def __call__(self, prev: FormalBall, choice: AliceChoice, config) -> Optional[FormalBall]:
        pg = config.playground
        if not choice.sets:
            return _legal_bob_ball(pg, prev, choice, config.beta, self.rng, self.samples)
        r_new = mp.mpf(config.beta) * mp.mpf(prev.radius)
        threshold = mp.mpf(choice.rho) + r_new
        max_shift = mp.mpf(prev.radius) - r_new
        candidates = self._boundary_candidates(pg, prev, choice, threshold)
        candidates.extend(
            c for c in (pg.sample_in_ball(prev.center, max_shift, self.rng)
                        for _ in range(self.samples)) if c is not None
        )
        best = None
        for c in candidates:
            if pg.dist(c, prev.center) > max_shift:
                continue
            gap = pg.sets_distance(c, choice.sets)
            if gap > threshold and (best is None or gap < best[0]):
                best = (gap, c)
        return FormalBall(best[1], r_new) if best else None


class SchmidtBobRandom:
    """Random nested ball with the exact required radius ratio."""

    name = "random"

    def __init__(self, seed: int = 0, attempts: int = 100):
        self.rng = random.Random(seed)
        self.attempts = attempts

    def __call__(self, alice_ball: FormalBall, config) -> Optional[FormalBall]:
        pg = config.playground
        r_new = mp.mpf(config.beta) * mp.mpf(alice_ball.radius)
        max_shift = mp.mpf(alice_ball.radius) - r_new
        for _ in range(self.attempts):
            center = pg.sample_in_ball(alice_ball.center, max_shift, self.rng)
            if center is not None:
                return FormalBall(center, r_new)
        return None


# ---------------------------------------------------------------------------
# strategy transformers


class _AbsoluteToSchmidt:
    def __init__(self, sigma, beta_diffuse: float, seed: int = 0, samples: int = 4000):
        self.sigma = sigma
        self.beta_diffuse = float(beta_diffuse)
        self.alpha = self.beta_diffuse / (2 + self.beta_diffuse)
        self.rng = random.Random(seed)
        self.samples = samples
        self.name = f"schmidt({getattr(sigma, 'name', 'sigma')})"

    def __call__(self, bob_ball: FormalBall, config) -> FormalBall:
        pg = config.playground
        choice = self.sigma(bob_ball, None)
        r_alice = mp.mpf(self.alpha) * mp.mpf(bob_ball.radius)
        if not choice.sets:
            return FormalBall(bob_ball.center, r_alice)
        try:
            z = diffuse_escape(
                bob_ball.center, bob_ball.radius, choice.sets, self.alpha, pg,
                self.rng, samples=self.samples,
            )
        except EscapeFailure:
            # shrink first and wait for radii small enough for an escape
            return FormalBall(bob_ball.center, r_alice)
        return FormalBall(z, r_alice)


def absolute_to_schmidt(sigma, beta_diffuse: float, seed: int = 0):
    """Wrap an absolute-game strategy into an alternating-ball strategy with
    Alice ratio beta/(2+beta), using the diffuse escape point selection."""
    return _AbsoluteToSchmidt(sigma, beta_diffuse, seed)


def intersect_schedule(i: int, n: int) -> int:
    """Global round at which constituent i makes its n-th move."""
    return 2 ** (i - 1) + (n - 1) * 2**i


def intersect_schedule_inverse(m: int) -> tuple[int, int]:
    """Inverse of the interleaving schedule; bijective on positive integers."""
    if m <= 0:
        raise ValueError("rounds are numbered from 1")
    v = (m & -m).bit_length() - 1  # 2-adic valuation
    odd = m >> v
    return v + 1, (odd + 1) // 2


class _InterleavedStrategy:
    """Round-robin interleaving of strategies on the dyadic schedule.

    Not positional: the move depends on how many rounds have been played.
    """

    def __init__(self, sigmas: Sequence):
        self.sigmas = list(sigmas)
        self.round = 0
        self.name = "interleave(" + ",".join(getattr(s, "name", "sigma") for s in sigmas) + ")"

    def __call__(self, ball: FormalBall, config) -> AliceChoice:
        self.round += 1
        i, _n = intersect_schedule_inverse(self.round)
        if i <= len(self.sigmas):
            return self.sigmas[i - 1](ball, config)
        beta = config.beta if config is not None else 0.5
        return AliceChoice((), mp.mpf(beta) * mp.mpf(ball.radius))


def intersect_strategies(sigmas: Sequence) -> _InterleavedStrategy:
    """Pursue several targets at once: constituent i plays at global rounds
    2^(i-1) + (n-1) 2^i.  Constituent i must win its game at shrink rate
    gamma^(2^i) when the combined game runs at rate gamma."""
    return _InterleavedStrategy(sigmas)


class _SplitUnionStrategy:
    """Replays union deletions as consecutive single-set deletions.

    The wrapped strategy is queried every ``arity`` rounds on the then-current
    ball; its union choice is then dealt out one set per round."""

    def __init__(self, sigma_star, arity: int):
        if arity < 1:
            raise ValueError("arity must be at least 1")
        self.sigma_star = sigma_star
        self.arity = arity
        self.round = 0
        self._pending: list = []
        self._rho = None
        self.name = f"split{arity}({getattr(sigma_star, 'name', 'sigma')})"

    def __call__(self, ball: FormalBall, config) -> AliceChoice:
        idx = self.round % self.arity
        self.round += 1
        if idx == 0:
            choice = self.sigma_star(ball, config)
            self._pending = list(choice.sets)
            self._rho = choice.rho
        sets = (self._pending[idx],) if idx < len(self._pending) else ()
        return AliceChoice(sets, self._rho)


def split_union_strategy(sigma_star, arity: int):
    """Turn a union-of-N strategy into a one-set-per-move strategy; the
    identity transformer when arity is 1."""
    return _SplitUnionStrategy(sigma_star, arity)


class _AvoidPoints:
    """Spends the first moves deleting neighborhoods of listed points, then
    defers to the wrapped strategy."""

    def __init__(self, sigma, points: Sequence, family):
        self.sigma = sigma
        self.points = list(points)
        self.family = family
        self.round = 0
        self.name = f"avoid({getattr(sigma, 'name', 'sigma')})"

    def _set_for_point(self, z, config):
        if isinstance(self.family, SingletonFamily):
            if not config.playground.contains(z if not isinstance(z, SNumber) else z):
                raise ValueError(f"point {z!r} is not in the playground closure")
            return PointSet(z)
        base = self.family.base if isinstance(self.family, UnionFamily) else self.family
        if isinstance(base, FractionSubspaceFamily):
            if not isinstance(z, AlgebraicNumber):
                raise ValueError("subspace families need field elements to cover points")
            m = z.denominator()
            all_places = frozenset(p.index for p in base.field.places)
            return AnchoredSubspace(z * m, base.field.rational(m), all_places)
        raise ValueError("no family set covers the point")

    def __call__(self, ball: FormalBall, config) -> AliceChoice:
        idx = self.round
        self.round += 1
        if idx < len(self.points):
            beta = config.beta if config is not None else 0.5
            rho = mp.mpf(beta) * mp.mpf(ball.radius)
            return AliceChoice((self._set_for_point(self.points[idx], config),), rho)
        return self.sigma(ball, config)


def avoid_points(sigma, points: Sequence, family):
    """Exclude finitely many removable points from the target set."""
    return _AvoidPoints(sigma, points, family)


class _TranslatedStrategy:
    """Conjugates a Minkowski-space strategy by a field translation."""

    def __init__(self, sigma, shift: AlgebraicNumber):
        self.sigma = sigma
        self.shift = shift
        self.name = f"translate({getattr(sigma, 'name', 'sigma')})"

    def __call__(self, ball: FormalBall, config) -> AliceChoice:
        center = ball.center
        shift_emb = center.field.embed(self.shift, center.precision_bits)
        moved = center.shift([-v for v in shift_emb.values])
        choice = self.sigma(FormalBall(moved, ball.radius), config)
        sets = tuple(
            s.translate(self.shift) if isinstance(s, AnchoredSubspace) else s
            for s in choice.sets
        )
        return AliceChoice(sets, choice.rho, dict(choice.info))


def translated_strategy(sigma, shift: AlgebraicNumber):
    """Strategy targeting the translate of the original target set."""
    return _TranslatedStrategy(sigma, shift)
