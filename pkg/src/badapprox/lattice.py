"""Bounded enumeration of module points along the diagonal flow.

The rank-2 module over the ring of integers, sheared by an S-number and
stretched by the diagonal flow, is treated as a Z-lattice of rank 2d in
R^(2d).  A float LLL reduction is maintained incrementally along the flow
(re-deriving the float basis from exact integer coordinates at every step,
so reduction errors never accumulate), and candidate points inside a
sup-norm ball are produced by a pruned coefficient search.  Callers are
expected to re-verify candidates with exact or high-precision arithmetic.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

from .numberfield import AlgebraicNumber, NumberFieldSpec, SNumber

_DEGENERATE = 1e-250


def lll_reduce(basis: np.ndarray, transform: list[list[int]], delta: float = 0.99,
               max_rounds: int = 4000) -> tuple[np.ndarray, list[list[int]]]:
    """LLL-reduce the columns of a float basis, mirroring column operations
    on an exact integer transform (a list of columns)."""
    basis = basis.copy()
    n = basis.shape[1]
    cols = [list(c) for c in transform]

    def gram_schmidt():
        star = np.zeros_like(basis)
        mu = np.zeros((n, n))
        norms = np.zeros(n)
        for i in range(n):
            v = basis[:, i].copy()
            for j in range(i):
                if norms[j] > _DEGENERATE:
                    mu[i, j] = float(np.dot(basis[:, i], star[:, j]) / norms[j])
                v -= mu[i, j] * star[:, j]
            star[:, i] = v
            norms[i] = float(np.dot(v, v))
        return mu, norms

    mu, norms = gram_schmidt()
    k = 1
    rounds = 0
    while k < n and rounds < max_rounds:
        rounds += 1
        changed = False
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                basis[:, k] -= q * basis[:, j]
                cols[k] = [a - q * b for a, b in zip(cols[k], cols[j])]
                changed = True
        if changed:
            mu, norms = gram_schmidt()
        if norms[k - 1] <= _DEGENERATE or norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
            cols[k - 1], cols[k] = cols[k], cols[k - 1]
            mu, norms = gram_schmidt()
            k = max(k - 1, 1)
    return basis, cols


def enumerate_l2_ball(basis: np.ndarray, radius: float, budget: int) -> tuple[list[list[int]], bool]:
    """Integer coefficient vectors u != 0 with ||basis @ u||_2 <= radius.

    One representative per +-u pair is produced (the highest-index nonzero
    coefficient is positive).  Returns (vectors, complete).
    """
    n = basis.shape[1]
    _, r_mat = np.linalg.qr(basis)
    signs = np.sign(np.diag(r_mat))
    signs[signs == 0] = 1.0
    r_mat = r_mat * signs[:, None]

    r2sq = radius * radius
    found: list[list[int]] = []
    u = [0] * n
    state = {"nodes": 0, "complete": True}

    def descend(level: int, y: np.ndarray, rho: float, zero_prefix: bool) -> None:
        state["nodes"] += 1
        if state["nodes"] > budget:
            state["complete"] = False
            return
        slack = r2sq - rho
        if slack < 0:
            return
        s = math.sqrt(slack)
        diag = r_mat[level, level]
        if diag < _DEGENERATE:
            state["complete"] = False
            return
        span = s / diag
        if span > 1e7:
            span = 1e7
            state["complete"] = False
        center = -y[level] / diag
        lo = math.ceil(center - span - 1e-12)
        hi = math.floor(center + span + 1e-12)
        if zero_prefix:
            lo = max(lo, 0)
        for coeff in range(lo, hi + 1):
            state["nodes"] += 1
            if state["nodes"] > budget:
                state["complete"] = False
                u[level] = 0
                return
            contrib = (diag * coeff + y[level]) ** 2
            if contrib > slack + 1e-9 * (1 + slack):
                continue
            u[level] = coeff
            still_zero = zero_prefix and coeff == 0
            if level == 0:
                if not still_zero:
                    found.append(u.copy())
            else:
                descend(level - 1, y + r_mat[:, level] * coeff, rho + contrib, still_zero)
            if not state["complete"]:
                u[level] = 0
                return
        u[level] = 0

    descend(n - 1, np.zeros(n), 0.0, True)
    return found, state["complete"]


def multiplication_transform(field: NumberFieldSpec, entries) -> list[list[int]]:
    """Integer transform of the rank-2 module basis by a 2x2 matrix over the
    ring of integers; columns of the result are generator coordinates."""
    (a, b), (c, d) = entries
    deg = field.degree

    def int_columns(e: AlgebraicNumber) -> list[list[int]]:
        cols = []
        for j in range(deg):
            beta = field.from_integral_coords([int(i == j) for i in range(deg)])
            coords = (e * beta).integral_coords()
            if any(x.denominator != 1 for x in coords):
                raise ValueError("transform entries must be algebraic integers")
            cols.append([int(x) for x in coords])
        return cols

    ca, cb, cc, cd = int_columns(a), int_columns(b), int_columns(c), int_columns(d)
    out = []
    for j in range(deg):
        out.append(ca[j] + cc[j])
    for j in range(deg):
        out.append(cb[j] + cd[j])
    return out


class FlowedModule:
    """The module g_t u_x iota(O^2) with an incrementally reduced basis.

    The integer transform tracks which O^2 combination each reduced
    generator is; float bases are always re-derived from it with mpmath at
    a precision that grows with t, so walking far along the flow stays
    numerically sound.
    """

    def __init__(self, field: NumberFieldSpec, x: SNumber, t: float = 0.0,
                 transform: list[list[int]] | None = None):
        self.field = field
        self.x = x
        self.dim = 2 * field.degree
        if transform is None:
            transform = [[int(i == j) for i in range(self.dim)] for j in range(self.dim)]
        self.transform = [list(c) for c in transform]
        self.t = 0.0
        self._reduce_here()
        if t:
            self.advance_to(t)

    # -- numerics -----------------------------------------------------------

    def _work_bits(self) -> int:
        coord_bits = max(
            (abs(e).bit_length() for col in self.transform for e in col), default=1
        )
        return max(96, int(2.9 * abs(self.t)) + coord_bits + 64, self.x.precision_bits + 16)

    def float_basis(self) -> np.ndarray:
        """Float64 matrix of the current generators, rows = real coordinates."""
        fld = self.field
        d = fld.degree
        bits = self._work_bits()
        with mp.workprec(bits):
            emb = fld.basis_embeddings(bits)
            et = mp.e ** mp.mpf(self.t)
            eti = 1 / et
            cols = []
            for col in self.transform:
                pc, qc = col[:d], col[d:]
                first, second = [], []
                for v, place in enumerate(fld.places):
                    sp = mp.fsum(emb[v][i] * pc[i] for i in range(d) if pc[i]) if any(pc) else mp.mpf(0)
                    sq = mp.fsum(emb[v][i] * qc[i] for i in range(d) if qc[i]) if any(qc) else mp.mpf(0)
                    z1 = et * (sp + self.x.values[v] * sq)
                    z2 = eti * sq
                    if place.kind == "R":
                        first.append(float(z1))
                        second.append(float(z2))
                    else:
                        first.extend([float(mp.re(z1)), float(mp.im(z1))])
                        second.extend([float(mp.re(z2)), float(mp.im(z2))])
                cols.append(first + second)
        return np.array(cols, dtype=float).T

    def _row_groups(self) -> list[list[int]]:
        """Row indices forming one complex/real modulus each (z1 then z2 blocks)."""
        groups = []
        row = 0
        for _component in range(2):
            for place in self.field.places:
                if place.kind == "R":
                    groups.append([row])
                    row += 1
                else:
                    groups.append([row, row + 1])
                    row += 2
        return groups

    def _reduce_here(self) -> None:
        basis = self.float_basis()
        _, self.transform = lll_reduce(basis, self.transform)

    def advance_to(self, t_new: float) -> None:
        """Walk the flow to t_new in unit steps, re-reducing at each step."""
        delta = t_new - self.t
        steps = max(1, math.ceil(abs(delta)))
        t0 = self.t
        for i in range(1, steps + 1):
            self.t = t0 + delta * i / steps
            self._reduce_here()

    # -- queries ------------------------------------------------------------

    def enumerate_sup_ball(self, radius: float, budget: int = 10_000_000):
        """Module points (p, q integral coordinates) whose flowed image has
        sup norm <= radius, up to sign.  Returns (points, complete)."""
        basis = self.float_basis()
        groups = self._row_groups()
        r2 = radius * math.sqrt(basis.shape[0]) * (1 + 1e-9)
        coeffs, complete = enumerate_l2_ball(basis, r2, budget)
        pts = []
        sup_cap = radius * (1 + 1e-6) + 1e-280
        d = self.field.degree
        for u in coeffs:
            w = basis @ np.array(u, dtype=float)
            ok = True
            for g in groups:
                m = abs(w[g[0]]) if len(g) == 1 else math.hypot(w[g[0]], w[g[1]])
                if m > sup_cap:
                    ok = False
                    break
            if ok:
                coords = [
                    sum(self.transform[j][i] * u[j] for j in range(self.dim))
                    for i in range(self.dim)
                ]
                pts.append((coords[:d], coords[d:]))
        return pts, complete
