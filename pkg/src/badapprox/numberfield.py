"""Exact number field arithmetic and Archimedean (Minkowski) embeddings.

A field is described by a monic irreducible integer polynomial together with
an integral basis, a fundamental system of units and its discriminant; the
data is supplied (config file or preset), not computed.  Elements are exact
vectors of rationals over the power basis; embeddings into the product of
completions are evaluated with mpmath at a configurable bit precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from itertools import product as iter_product
from typing import Iterable, Sequence

import mpmath as mp

DEFAULT_PRECISION = 128

__all__ = [
    "ConfigurationError",
    "DomainError",
    "Place",
    "NumberFieldSpec",
    "AlgebraicNumber",
    "SNumber",
    "AnchoredSubspace",
    "UnitBalance",
    "embed",
    "field_norm",
    "height",
    "vector_height",
    "unit_balance",
    "is_qualifying_subset",
    "qualifying_subsets",
    "subspace_distance",
    "snumber",
    "field_from_dict",
    "load_field",
    "preset_field",
    "DEFAULT_PRECISION",
]


class ConfigurationError(ValueError):
    """Field description is inconsistent or unsupported."""


class DomainError(ValueError):
    """Operation applied outside its mathematical domain."""


# ---------------------------------------------------------------------------
# Exact polynomial helpers over Fraction (coefficient lists, low -> high).

def _poly_trim(c: list[Fraction]) -> list[Fraction]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _poly_trim(out)


def _poly_divmod(a: Sequence[Fraction], b: Sequence[Fraction]):
    a = list(a)
    b = _poly_trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(_poly_trim(a)) >= len(b):
        a = _poly_trim(a)
        shift = len(a) - len(b)
        coeff = a[-1] / b[-1]
        q[shift] = coeff
        for i, bi in enumerate(b):
            a[shift + i] -= coeff * bi
    return _poly_trim(q), _poly_trim(a)


def _poly_gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while b:
        _, r = _poly_divmod(a, b)
        a, b = b, r
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _poly_deriv(a: Sequence[Fraction]) -> list[Fraction]:
    return _poly_trim([a[i] * i for i in range(1, len(a))])


def _poly_eval_sign(a: Sequence[Fraction], x: Fraction) -> int:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return (acc > 0) - (acc < 0)


def _sturm_chain(p: Sequence[Fraction]) -> list[list[Fraction]]:
    chain = [_poly_trim(list(p)), _poly_deriv(p)]
    while chain[-1]:
        _, r = _poly_divmod(chain[-2], chain[-1])
        chain.append([-c for c in r])
    chain.pop()
    return chain


def _sturm_sign_changes(chain, x: Fraction) -> int:
    signs = [s for s in (_poly_eval_sign(p, x) for p in chain) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _count_real_roots(p: Sequence[Fraction]) -> int:
    """Number of real roots of a squarefree polynomial, by Sturm's theorem."""
    bound = Fraction(1) + max(abs(c) for c in p[:-1]) / abs(p[-1]) if len(p) > 1 else Fraction(1)
    chain = _sturm_chain(p)
    return _sturm_sign_changes(chain, -bound) - _sturm_sign_changes(chain, bound)


def _is_irreducible(int_coeffs: Sequence[int]) -> bool:
    from sympy import Poly, Symbol

    x = Symbol("x")
    return Poly(list(reversed(int_coeffs)), x, domain="QQ").is_irreducible


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        raise ConfigurationError(f"rational expected, got float {value!r}; use 'num/den' strings")
    raise ConfigurationError(f"cannot interpret {value!r} as a rational")


def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    n = len(m)
    m = [row[:] for row in m]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor:
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return det


def _invert_fraction_matrix(m: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ConfigurationError("integral basis matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [c * inv for c in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Place:
    """A normalized non-conjugate Archimedean valuation."""

    index: int
    kind: str  # "R" or "C"

    @property
    def local_degree(self) -> int:
        return 1 if self.kind == "R" else 2


class NumberFieldSpec:
    """A number field with verified auxiliary data.

    Treat instances as immutable after construction; they are safe to share
    across threads and processes (all cached data is derived).
    """

    def __init__(
        self,
        min_poly: Sequence,
        integral_basis: Sequence[Sequence],
        fundamental_units: Sequence[Sequence],
        roots_of_unity: Sequence[Sequence],
        disc: int,
        name: str = "",
        validate: bool = True,
    ):
        self.min_poly = tuple(_frac(c) for c in min_poly)
        self.degree = len(self.min_poly) - 1
        self.name = name or f"deg{self.degree}"
        self.integral_basis = tuple(tuple(_frac(c) for c in row) for row in integral_basis)
        self.unit_coords = tuple(tuple(_frac(c) for c in row) for row in fundamental_units)
        self.root_of_unity_coords = tuple(tuple(_frac(c) for c in row) for row in roots_of_unity)
        self.disc = int(disc)

        if self.degree < 1:
            raise ConfigurationError("minimal polynomial must have degree >= 1")
        if self.min_poly[-1] != 1:
            raise ConfigurationError("minimal polynomial must be monic")
        if any(c.denominator != 1 for c in self.min_poly):
            raise ConfigurationError("minimal polynomial must have integer coefficients")
        if len(self.integral_basis) != self.degree or any(
            len(row) != self.degree for row in self.integral_basis
        ):
            raise ConfigurationError("integral basis must be a d x d matrix")

        # x^k mod min_poly for k = d .. 2d-2, used by multiplication.
        self._reduction_rows: list[tuple[Fraction, ...]] = []
        rem = [-c for c in self.min_poly[:-1]]
        for _ in range(self.degree - 1):
            self._reduction_rows.append(tuple(rem) + (Fraction(0),) * (self.degree - len(rem)))
            rem = [Fraction(0)] + rem
            if len(rem) > self.degree:
                lead = rem.pop()
                rem = [c - lead * mc for c, mc in zip(rem, self.min_poly[:-1])]

        self._basis_inv = _invert_fraction_matrix([list(r) for r in self.integral_basis])
        self._root_cache: dict[int, tuple] = {}
        self._c_balance: float | None = None

        n_real = _count_real_roots(self.min_poly)
        n_complex = (self.degree - n_real) // 2
        kinds = ["R"] * n_real + ["C"] * n_complex
        self.places = tuple(Place(i, k) for i, k in enumerate(kinds))

        if validate:
            self._validate()

    # -- construction of elements ------------------------------------------

    def element(self, coords: Sequence) -> "AlgebraicNumber":
        coords = tuple(_frac(c) for c in coords)
        if len(coords) != self.degree:
            raise ValueError(f"expected {self.degree} coordinates, got {len(coords)}")
        return AlgebraicNumber(self, coords)

    def rational(self, value) -> "AlgebraicNumber":
        return self.element((_frac(value),) + (Fraction(0),) * (self.degree - 1))

    def zero(self) -> "AlgebraicNumber":
        return self.rational(0)

    def one(self) -> "AlgebraicNumber":
        return self.rational(1)

    def gen(self) -> "AlgebraicNumber":
        if self.degree == 1:
            return self.rational(-self.min_poly[0])
        return self.element((0, 1) + (0,) * (self.degree - 2))

    def from_integral_coords(self, coords: Sequence[int]) -> "AlgebraicNumber":
        """Element sum(coords[i] * beta_i) for integer coordinates."""
        power = [Fraction(0)] * self.degree
        for c, row in zip(coords, self.integral_basis):
            if c:
                for i, r in enumerate(row):
                    power[i] += c * r
        return AlgebraicNumber(self, tuple(power))

    @property
    def fundamental_units(self) -> tuple["AlgebraicNumber", ...]:
        return tuple(self.element(c) for c in self.unit_coords)

    @property
    def roots_of_unity(self) -> tuple["AlgebraicNumber", ...]:
        return tuple(self.element(c) for c in self.root_of_unity_coords)

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        sq = _poly_gcd(self.min_poly, _poly_deriv(self.min_poly))
        if len(sq) != 1:
            raise ConfigurationError("minimal polynomial is not squarefree")
        if not _is_irreducible([int(c) for c in self.min_poly]):
            raise ConfigurationError("minimal polynomial is reducible over Q")

        n_real = sum(1 for p in self.places if p.kind == "R")
        n_complex = sum(1 for p in self.places if p.kind == "C")
        if n_real + 2 * n_complex != self.degree:
            raise ConfigurationError("place signature does not match the degree")

        if _det_fraction([list(r) for r in self.integral_basis]) == 0:
            raise ConfigurationError("integral basis matrix is singular")

        # Discriminant of the claimed basis via the trace form.
        basis = [self.element(row) for row in self.integral_basis]
        gram = [[(bi * bj).trace() for bj in basis] for bi in basis]
        if _det_fraction(gram) != self.disc:
            raise ConfigurationError(
                f"declared discriminant {self.disc} does not match the integral basis"
            )

        expected_rank = len(self.places) - 1
        if len(self.unit_coords) != expected_rank:
            raise ConfigurationError(
                f"expected {expected_rank} fundamental units, got {len(self.unit_coords)}"
            )
        for u in self.fundamental_units:
            if abs(u.norm()) != 1:
                raise ConfigurationError(f"declared unit {u} has |norm| != 1")
            if not u.is_integral():
                raise ConfigurationError(f"declared unit {u} is not an algebraic integer")
        for z in self.roots_of_unity:
            if not z.is_integral() or not _has_finite_order(z, 2 * self.degree**2 + 4):
                raise ConfigurationError(f"declared root of unity {z} has infinite order")

    # -- embeddings ---------------------------------------------------------

    def place_roots(self, precision_bits: int = DEFAULT_PRECISION) -> tuple:
        """Roots of the minimal polynomial, one per place, at the given precision.

        Real roots come first in ascending order; complex places are
        represented by the root with positive imaginary part, ordered by
        real part.
        """
        cached = self._root_cache.get(precision_bits)
        if cached is not None:
            return cached
        n_real = sum(1 for p in self.places if p.kind == "R")
        with mp.workprec(precision_bits + 32):
            coeffs = [mp.mpf(c.numerator) / c.denominator for c in reversed(self.min_poly)]
            roots = mp.polyroots(coeffs, maxsteps=200, extraprec=precision_bits)
            roots = sorted(roots, key=lambda r: abs(mp.im(r)))
            real = sorted((mp.re(r) for r in roots[:n_real]), key=float)
            complex_part = [r for r in roots[n_real:] if mp.im(r) > 0]
            complex_part.sort(key=lambda r: (float(mp.re(r)), float(mp.im(r))))
            out = tuple(real) + tuple(complex_part)
        if len(out) != len(self.places):
            raise ConfigurationError("could not classify the roots into places")
        self._root_cache[precision_bits] = out
        return out

    def basis_embeddings(self, precision_bits: int = DEFAULT_PRECISION) -> list[list]:
        """Per-place embedded values of the integral basis: E[v][i] = iota_v(beta_i)."""
        roots = self.place_roots(precision_bits)
        out = []
        with mp.workprec(precision_bits + 32):
            for root in roots:
                powers = [mp.mpf(1)]
                for _ in range(self.degree - 1):
                    powers.append(powers[-1] * root)
                out.append(
                    [
                        mp.fsum(
                            (powers[i] * mp.mpf(c.numerator) / c.denominator)
                            for i, c in enumerate(row)
                            if c
                        )
                        if any(row)
                        else mp.mpf(0)
                        for row in self.integral_basis
                    ]
                )
        return out

    def embed(self, a: "AlgebraicNumber", precision_bits: int = DEFAULT_PRECISION) -> "SNumber":
        roots = self.place_roots(precision_bits)
        values = []
        with mp.workprec(precision_bits + 32):
            for place, root in zip(self.places, roots):
                acc = mp.mpf(0) if place.kind == "R" else mp.mpc(0)
                for c in reversed(a.coords):
                    acc = acc * root + mp.mpf(c.numerator) / c.denominator
                values.append(acc if place.kind == "C" else mp.mpf(acc))
        return SNumber(self, tuple(values), precision_bits)

    # -- derived constants ---------------------------------------------------

    def balance_constant(self) -> float:
        """Upper bound C such that every nonzero pair has a unit multiple with
        all place norms within [C^-1 H^(1/d), C H^(1/d)].

        Computed from the log embeddings of the fundamental units; 1.0 when
        there is a single place.
        """
        if self._c_balance is None:
            if len(self.places) == 1:
                self._c_balance = 1.0
            else:
                total = 0.0
                for u in self.fundamental_units:
                    emb = self.embed(u, 64)
                    total += max(abs(math.log(abs(complex(v)))) for v in emb.values)
                self._c_balance = math.exp(0.5 * total)
        return self._c_balance

    def dirichlet_constant(self) -> float:
        n_complex = sum(1 for p in self.places if p.kind == "C")
        return float(((2.0 / math.pi) ** (2 * n_complex) * abs(self.disc)) ** (1.0 / self.degree))

    # -- misc ----------------------------------------------------------------

    def subset_weight(self, places: Iterable[int]) -> int:
        return sum(self.places[i].local_degree for i in set(places))

    def __repr__(self) -> str:
        return f"NumberFieldSpec({self.name}, degree={self.degree})"


def _has_finite_order(z: "AlgebraicNumber", cap: int) -> bool:
    acc = z
    one = z.field.one()
    for _ in range(cap):
        if acc == one:
            return True
        acc = acc * z
    return False


class AlgebraicNumber:
    """Element of a number field as exact rational coordinates over the power basis."""

    __slots__ = ("field", "coords")

    def __init__(self, field: NumberFieldSpec, coords: tuple[Fraction, ...]):
        self.field = field
        self.coords = coords

    def _check(self, other: "AlgebraicNumber") -> None:
        if self.field is not other.field:
            raise ValueError("elements belong to different fields")

    def __add__(self, other):
        other = self._coerce(other)
        return AlgebraicNumber(self.field, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        other = self._coerce(other)
        return AlgebraicNumber(self.field, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return AlgebraicNumber(self.field, tuple(-a for a in self.coords))

    def __mul__(self, other):
        other = self._coerce(other)
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(other.coords):
                    if b:
                        prod[i + j] += a * b
        out = list(prod[:d])
        for k in range(d, 2 * d - 1):
            c = prod[k]
            if c:
                row = self.field._reduction_rows[k - d]
                for i in range(d):
                    out[i] += c * row[i]
        return AlgebraicNumber(self.field, tuple(out))

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _coerce(self, other):
        if isinstance(other, AlgebraicNumber):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.rational(other)
        return NotImplemented

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.rational(other)
        return (
            isinstance(other, AlgebraicNumber)
            and self.field is other.field
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((id(self.field), self.coords))

    def __bool__(self):
        return any(self.coords)

    def inverse(self) -> "AlgebraicNumber":
        """Multiplicative inverse via the extended Euclidean algorithm in Q[x]."""
        if not self:
            raise ZeroDivisionError("inverse of zero field element")
        # Maintain r = s * self (mod min_poly); stop when r is a constant.
        r0, r1 = list(self.field.min_poly), _poly_trim(list(self.coords))
        s0, s1 = [], [Fraction(1)]
        while len(r1) > 1:
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_trim(
                [
                    a - b
                    for a, b in zip(
                        s0 + [Fraction(0)] * max(0, len(_poly_mul(q, s1)) - len(s0)),
                        _poly_mul(q, s1) + [Fraction(0)] * max(0, len(s0) - len(_poly_mul(q, s1))),
                    )
                ]
            )
        if not r1:
            raise ZeroDivisionError("element is a zero divisor; minimal polynomial reducible?")
        inv_coeffs = [c / r1[0] for c in s1]
        _, red = _poly_divmod(inv_coeffs, self.field.min_poly)
        red = red + [Fraction(0)] * (self.field.degree - len(red))
        return AlgebraicNumber(self.field, tuple(red[: self.field.degree]))

    def multiplication_matrix(self) -> list[list[Fraction]]:
        """Matrix of multiplication by self on the power basis (columns are images)."""
        d = self.field.degree
        cols = []
        current = self
        basis_elt = self.field.one()
        gen = self.field.gen() if d > 1 else None
        for j in range(d):
            cols.append(current.coords)
            if j + 1 < d:
                basis_elt = basis_elt * gen
                current = self * basis_elt
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    def norm(self) -> Fraction:
        """Field norm N(a) (signed), the determinant of multiplication by a."""
        return _det_fraction(self.multiplication_matrix())

    def trace(self) -> Fraction:
        m = self.multiplication_matrix()
        return sum(m[i][i] for i in range(len(m)))

    def integral_coords(self) -> tuple[Fraction, ...]:
        """Coordinates over the integral basis."""
        inv = self.field._basis_inv
        d = self.field.degree
        return tuple(
            sum(inv[j][i] * self.coords[j] for j in range(d)) for i in range(d)
        )

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.integral_coords())

    def denominator(self) -> int:
        """Smallest positive integer m with m * self an algebraic integer."""
        return math.lcm(*(c.denominator for c in self.integral_coords()))

    def __repr__(self):
        return f"<{self.field.name}: {list(self.coords)}>"


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SNumber:
    """A point of the Minkowski space: one value per place.

    Real places carry mpf values, complex places mpc; ``precision_bits``
    records the precision the values were produced at.
    """

    field: NumberFieldSpec
    values: tuple
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if len(self.values) != len(self.field.places):
            raise ValueError("one value per place expected")

    def sup_norm(self):
        with mp.workprec(self.precision_bits):
            return max(abs(v) for v in self.values)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def dist(self, other: "SNumber"):
        with mp.workprec(max(self.precision_bits, other.precision_bits)):
            return max(abs(a - b) for a, b in zip(self.values, other.values))

    def shift(self, deltas: Sequence) -> "SNumber":
        with mp.workprec(self.precision_bits):
            return SNumber(
                self.field,
                tuple(v + d for v, d in zip(self.values, deltas)),
                self.precision_bits,
            )

    def at_precision(self, precision_bits: int) -> "SNumber":
        if precision_bits <= self.precision_bits:
            return self
        return SNumber(self.field, self.values, precision_bits)

    def __iter__(self):
        return iter(self.values)


def snumber(field: NumberFieldSpec, values: Sequence, precision_bits: int = DEFAULT_PRECISION) -> SNumber:
    """Build an SNumber from raw numbers, coercing to mpf/mpc per place kind."""
    coerced = []
    with mp.workprec(precision_bits):
        for place, v in zip(field.places, values):
            if place.kind == "R":
                if isinstance(v, complex) or isinstance(v, mp.mpc):
                    raise ValueError(f"place {place.index} is real, got complex value")
                coerced.append(mp.mpf(v))
            else:
                coerced.append(mp.mpc(v))
    return SNumber(field, tuple(coerced), precision_bits)


def embed(a: AlgebraicNumber, precision_bits: int = DEFAULT_PRECISION) -> SNumber:
    """Diagonal embedding of a field element, one value per place."""
    if precision_bits < 32:
        raise ValueError("precision_bits must be at least 32")
    return a.field.embed(a, precision_bits)


def field_norm(a: AlgebraicNumber) -> Fraction:
    """Absolute field norm |N(a)|, computed exactly."""
    return abs(a.norm())


def height(x: SNumber):
    """Product over places of |x_v|^(d_v)."""
    with mp.workprec(x.precision_bits):
        out = mp.mpf(1)
        for place, v in zip(x.field.places, x.values):
            out *= abs(v) ** place.local_degree
        return out


def vector_height(z: tuple[SNumber, SNumber]):
    """Height of a pair: product over places of max(|z1_v|, |z2_v|)^(d_v)."""
    z1, z2 = z
    if z1.field is not z2.field:
        raise ValueError("pair components belong to different fields")
    with mp.workprec(max(z1.precision_bits, z2.precision_bits)):
        out = mp.mpf(1)
        for place, a, b in zip(z1.field.places, z1.values, z2.values):
            out *= max(abs(a), abs(b)) ** place.local_degree
        return out


@dataclass(frozen=True)
class UnitBalance:
    unit: AlgebraicNumber
    reduced: tuple[SNumber, SNumber]
    achieved_c: float
    exhausted: bool  # best unit sat on the search boundary


def unit_balance(z: tuple[SNumber, SNumber], exponent_bound: int = 8) -> UnitBalance:
    """Search unit powers for a multiplier evening out the place norms of a pair.

    Returns the best unit found together with the achieved constant C with
    C^-1 H^(1/d) <= ||unit * z_v|| <= C H^(1/d) at every place.  Roots of
    unity do not change the norms, so only fundamental-unit powers are tried.
    """
    z1, z2 = z
    fld = z1.field
    h = vector_height(z)
    if h == 0:
        raise DomainError("cannot balance a pair of zero height")
    prec = max(z1.precision_bits, z2.precision_bits)
    with mp.workprec(prec):
        target = h ** (mp.mpf(1) / fld.degree)
        place_norms = [max(abs(a), abs(b)) for a, b in zip(z1.values, z2.values)]
        units = fld.fundamental_units
        unit_embeddings = [fld.embed(u, prec).values for u in units]

        best = None
        exponent_range = range(-exponent_bound, exponent_bound + 1)
        for exps in iter_product(exponent_range, repeat=len(units)):
            c_cand = mp.mpf(0)
            for v in range(len(fld.places)):
                scale = mp.mpf(1)
                for e, emb in zip(exps, unit_embeddings):
                    if e:
                        scale *= abs(emb[v]) ** e
                nv = place_norms[v] * scale
                c_cand = max(c_cand, nv / target, target / nv)
            if best is None or c_cand < best[0]:
                best = (c_cand, exps)

        c_value, exps = best
        unit = fld.one()
        for e, u in zip(exps, units):
            unit = unit * u**e
        unit_emb = fld.embed(unit, prec)
        reduced = (
            SNumber(fld, tuple(a * u for a, u in zip(z1.values, unit_emb.values)), prec),
            SNumber(fld, tuple(a * u for a, u in zip(z2.values, unit_emb.values)), prec),
        )
        exhausted = bool(units) and any(abs(e) == exponent_bound for e in exps)
        return UnitBalance(unit, reduced, float(c_value), exhausted)


def is_qualifying_subset(field: NumberFieldSpec, places: Iterable[int]) -> bool:
    """Whether the coordinate subset is heavy: #T_R + 2 #T_C > d/2."""
    return 2 * field.subset_weight(places) > field.degree


def qualifying_subsets(field: NumberFieldSpec) -> list[frozenset[int]]:
    """All heavy place subsets, smallest weight first."""
    indices = [p.index for p in field.places]
    out = []
    for mask in range(1, 1 << len(indices)):
        subset = frozenset(indices[i] for i in range(len(indices)) if mask >> i & 1)
        if is_qualifying_subset(field, subset):
            out.append(subset)
    out.sort(key=lambda s: (field.subset_weight(s), sorted(s)))
    return out


@dataclass(frozen=True)
class AnchoredSubspace:
    """Affine subspace of the Minkowski space through a field point.

    The subspace fixes the coordinates in ``coord_set`` at the embedding of
    anchor_p / anchor_q and leaves the others free.
    """

    anchor_p: AlgebraicNumber
    anchor_q: AlgebraicNumber
    coord_set: frozenset[int]

    def __post_init__(self):
        if not self.anchor_q:
            raise DomainError("subspace anchor has zero denominator")

    @property
    def field(self) -> NumberFieldSpec:
        return self.anchor_p.field

    @property
    def is_valid(self) -> bool:
        return is_qualifying_subset(self.field, self.coord_set)

    @property
    def real_dimension(self) -> int:
        return self.field.degree - self.field.subset_weight(self.coord_set)

    def anchor_fraction(self) -> AlgebraicNumber:
        return self.anchor_p / self.anchor_q

    def anchor_point(self, precision_bits: int = DEFAULT_PRECISION) -> SNumber:
        return embed(self.anchor_fraction(), precision_bits)

    def distance(self, x: SNumber):
        return subspace_distance(x, self)

    def translate(self, shift: AlgebraicNumber) -> "AnchoredSubspace":
        new_anchor = self.anchor_fraction() + shift
        m = new_anchor.denominator()
        return AnchoredSubspace(
            new_anchor * m, self.field.rational(m), self.coord_set
        )


def subspace_distance(x: SNumber, subspace: AnchoredSubspace):
    """Sup-norm distance from x to the subspace: max over fixed coordinates."""
    anchor = subspace.anchor_point(x.precision_bits)
    with mp.workprec(x.precision_bits):
        return max(abs(x.values[i] - anchor.values[i]) for i in sorted(subspace.coord_set))


# ---------------------------------------------------------------------------
# Configuration files and presets.


def field_from_dict(data: dict, name: str = "", validate: bool = True) -> NumberFieldSpec:
    try:
        return NumberFieldSpec(
            min_poly=data["min_poly"],
            integral_basis=data["integral_basis"],
            fundamental_units=data.get("fundamental_units", []),
            roots_of_unity=data.get("roots_of_unity", []),
            disc=data["disc"],
            name=name or data.get("name", ""),
            validate=validate,
        )
    except KeyError as exc:
        raise ConfigurationError(f"field config missing key {exc}") from exc


def load_field(path, validate: bool = True) -> NumberFieldSpec:
    """Load a field description from a JSON or TOML file."""
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        data = tomllib.loads(text.decode())
    else:
        data = json.loads(text)
    return field_from_dict(data, validate=validate)


_PRESET_FILES = {
    "rationals": "rationals.json",
    "q": "rationals.json",
    "sqrt2": "sqrt2.json",
    "gaussian": "gaussian.json",
    "qi": "gaussian.json",
    "sqrt2-sqrt3": "sqrt2_sqrt3.json",
}
_PRESET_CACHE: dict[str, NumberFieldSpec] = {}


def preset_field(name: str) -> NumberFieldSpec:
    """A shipped, verified field preset: rationals, sqrt2, gaussian, sqrt2-sqrt3."""
    key = name.lower()
    if key not in _PRESET_FILES:
        raise ConfigurationError(f"unknown field preset {name!r}")
    fname = _PRESET_FILES[key]
    if fname not in _PRESET_CACHE:
        data = json.loads(resources.files("badapprox.fields").joinpath(fname).read_text())
        _PRESET_CACHE[fname] = field_from_dict(data)
    return _PRESET_CACHE[fname]
