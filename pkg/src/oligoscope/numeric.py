"""Finite-rank models: self-couplings of a uniform n-point space and matrix contractions.

A coupling of the uniform measure on ``n`` points is an ``n x n`` nonnegative
matrix whose rows and columns all sum to ``1/n``.  Couplings compose by
``C = n * (a @ b)`` and the involution is the transpose.  Exact mode stores
``Fraction`` entries in object arrays; float mode takes a tolerance.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .structures import CapExceeded, set_partitions

COUPLING_CAP = 8
FLOAT_TOL = 1e-12


class NumericError(ValueError):
    pass


class MarginalError(NumericError):
    pass


class NotIdempotent(NumericError):
    pass


class NotAContraction(NumericError):
    def __init__(self, norm: float, tol: float):
        super().__init__(f"operator norm {norm:.12g} exceeds 1 (tol {tol:g})")
        self.norm = norm


class ConvergenceError(NumericError):
    pass


# -- couplings ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    entries: np.ndarray
    exact: bool = True
    tol: float = FLOAT_TOL

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NumericError("coupling must be a square matrix")
        n = m.shape[0]
        if self.exact:
            target = Fraction(1, n) if n else Fraction(0)
            if any(v < 0 for v in m.flat):
                raise MarginalError("negative entry")
            if any(sum(row) != target for row in m) or any(sum(col) != target for col in m.T):
                raise MarginalError("row or column sum differs from 1/n")
        else:
            target = 1.0 / n if n else 0.0
            slack = n * self.tol
            if (m < -slack).any():
                raise MarginalError("negative entry")
            if (np.abs(m.sum(axis=1) - target) > slack).any() or (np.abs(m.sum(axis=0) - target) > slack).any():
                raise MarginalError("row or column sum differs from 1/n beyond tolerance")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CouplingMatrix) or other.n != self.n:
            return NotImplemented
        if self.exact and other.exact:
            return bool((self.entries == other.entries).all())
        tol = max(self.tol, other.tol)
        return bool(np.allclose(self.entries.astype(float), other.entries.astype(float), atol=tol, rtol=0))

    def __hash__(self):
        return hash(tuple(self.entries.flat)) if self.exact else id(self)

    def to_float(self) -> "CouplingMatrix":
        return CouplingMatrix(self.entries.astype(float), exact=False)

    def __repr__(self):
        return f"CouplingMatrix({self.entries.tolist()!r}, exact={self.exact})"


def _fraction_array(rows) -> np.ndarray:
    rows = [[Fraction(v) for v in row] for row in rows]
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = v
    return out


def coupling(rows, exact: bool = True, tol: float = FLOAT_TOL) -> CouplingMatrix:
    if exact:
        return CouplingMatrix(_fraction_array(rows), True)
    return CouplingMatrix(np.asarray(rows, dtype=float), False, tol)


def from_doubly_stochastic(d, exact: bool = True) -> CouplingMatrix:
    d = np.asarray(d, dtype=object if exact else float)
    n = d.shape[0]
    if exact:
        return coupling([[Fraction(v) / n for v in row] for row in d.tolist()])
    return coupling(d / n, exact=False)


def identity_coupling(n: int, exact: bool = True) -> CouplingMatrix:
    return permutation_coupling(range(n), exact)


def independent_coupling(n: int, exact: bool = True) -> CouplingMatrix:
    v = Fraction(1, n * n) if exact else 1.0 / (n * n)
    return coupling([[v] * n for _ in range(n)], exact)


def permutation_coupling(perm: Sequence[int], exact: bool = True) -> CouplingMatrix:
    """Mass ``1/n`` on the pairs ``(i, perm[i])``."""
    perm = list(perm)
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise NumericError(f"{perm} is not a permutation")
    zero, v = (Fraction(0), Fraction(1, n)) if exact else (0.0, 1.0 / n)
    return coupling([[v if perm[i] == j else zero for j in range(n)] for i in range(n)], exact)


def _check_pair(a: CouplingMatrix, b: CouplingMatrix):
    if a.n != b.n:
        raise NumericError(f"rank mismatch {a.n} vs {b.n}")


def coupling_compose(a: CouplingMatrix, b: CouplingMatrix) -> CouplingMatrix:
    _check_pair(a, b)
    exact = a.exact and b.exact
    if exact:
        return CouplingMatrix(np.dot(a.entries, b.entries) * a.n, True)
    prod = a.n * (a.entries.astype(float) @ b.entries.astype(float))
    return CouplingMatrix(prod, False, max(a.tol, b.tol))


def coupling_involution(a: CouplingMatrix) -> CouplingMatrix:
    return CouplingMatrix(a.entries.T.copy(), a.exact, a.tol)


def random_coupling(n: int, rng: np.random.Generator, terms: int = 3, exact: bool = True) -> CouplingMatrix:
    """A rational mixture of ``terms`` random permutation couplings."""
    weights = [int(w) for w in rng.integers(1, 10, size=terms)]
    total = sum(weights)
    acc = [[Fraction(0)] * n for _ in range(n)]
    for w in weights:
        perm = rng.permutation(n)
        for i in range(n):
            acc[i][int(perm[i])] += Fraction(w, total * n)
    c = coupling(acc)
    return c if exact else c.to_float()


# -- partition idempotents -------------------------------------------------------


@dataclass(frozen=True)
class PartitionIdempotent:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks if b))
        object.__setattr__(self, "blocks", blocks)
        pts = [x for b in blocks for x in b]
        if sorted(pts) != list(range(len(pts))):
            raise NumericError("blocks must partition range(n)")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "PartitionIdempotent":
        groups: dict = {}
        for i, g in enumerate(labels):
            groups.setdefault(g, []).append(i)
        return cls(tuple(groups.values()))

    def coupling(self, exact: bool = True) -> CouplingMatrix:
        """Entry ``1/(n |B|)`` on each block square ``B x B``, zero elsewhere."""
        n = self.n
        zero = Fraction(0) if exact else 0.0
        rows = [[zero] * n for _ in range(n)]
        for b in self.blocks:
            v = Fraction(1, n * len(b)) if exact else 1.0 / (n * len(b))
            for i in b:
                for j in b:
                    rows[i][j] = v
        return coupling(rows, exact)


def all_partitions(n: int) -> list[PartitionIdempotent]:
    return [PartitionIdempotent.from_labels(rgs) for rgs in set_partitions(n)]


def partition_join(p: PartitionIdempotent, q: PartitionIdempotent) -> PartitionIdempotent:
    """Finest common coarsening of two partitions."""
    n = p.n
    if q.n != n:
        raise NumericError("partitions of different sets")
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for b in p.blocks + q.blocks:
        for u in b[1:]:
            parent[find(u)] = find(b[0])
    return PartitionIdempotent.from_labels([find(u) for u in range(n)])


def partitions_commute(p: PartitionIdempotent, q: PartitionIdempotent) -> bool:
    ep, eq = p.coupling(), q.coupling()
    return coupling_compose(ep, eq) == coupling_compose(eq, ep)


def is_coupling_idempotent(c: CouplingMatrix) -> bool:
    return coupling_compose(c, c) == c


def coupling_idempotent_scan(n: int, candidates: Iterable[CouplingMatrix] | str = "partitions",
                             cap: int = COUPLING_CAP) -> list[CouplingMatrix]:
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds cap {cap}")
    if candidates == "partitions":
        out = []
        for part in all_partitions(n):
            e = part.coupling()
            if not is_coupling_idempotent(e):
                raise AssertionError(f"partition coupling {part.blocks} is not idempotent")
            out.append(e)
    else:
        out = []
        for c in candidates:
            if c.n != n:
                raise NumericError("candidate of wrong rank")
            if is_coupling_idempotent(c):
                out.append(c)
    for e in out:
        if coupling_involution(e) != e:
            raise AssertionError("idempotent coupling is not self-adjoint")
    return out


def coupling_central_idempotents(n: int, cap: int = COUPLING_CAP) -> list[CouplingMatrix]:
    """Partition idempotents commuting with every permutation coupling."""
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds cap {cap}")
    perms = [permutation_coupling(g) for g in itertools.permutations(range(n))]
    out: list[CouplingMatrix] = []
    for part in sorted(all_partitions(n), key=lambda p: -len(p.blocks)):
        e = part.coupling()
        if all(coupling_compose(g, e) == coupling_compose(e, g) for g in perms) and e not in out:
            out.append(e)
    return out


# -- contractions ----------------------------------------------------------------


def _as_array(a) -> np.ndarray:
    if isinstance(a, ContractionMatrix):
        return a.entries
    return np.asarray(a, dtype=complex)


def norm_bounds(a, tol: float = FLOAT_TOL, max_iter: int = 80) -> tuple[float, float]:
    """Two-sided bounds on the largest singular value of ``a``.

    With ``C = a* a / tr(a* a)``: the Rayleigh quotient of ``C`` at a column of
    ``C^(2^k)`` bounds ``lambda_max`` below and ``tr(C^(2^k))^(2^-k)`` bounds it
    above.  Squaring continues until the bounds on the norm are ``tol`` apart.
    """
    m = _as_array(a)
    b = m.conj().T @ m
    scale = float(np.trace(b).real)
    if scale <= 0.0:
        return 0.0, 0.0
    c = b / scale
    d = c.copy()
    log_tr = 0.0  # log tr(C^(2^k)); tr(C) = 1
    lo, hi = 0.0, math.inf
    for k in range(max_iter):
        t = float(np.trace(d).real)
        d = d / t
        col = d[:, int(np.argmax(np.linalg.norm(d, axis=0)))]
        lam_lo = float((col.conj() @ c @ col).real / (col.conj() @ col).real)
        lam_hi = math.exp(log_tr / 2**k)
        lo = max(lo, math.sqrt(scale * max(lam_lo, 0.0)))
        hi = min(hi, math.sqrt(scale * lam_hi))
        if hi - lo <= tol:
            return lo, max(hi, lo)
        log_tr = 2 * log_tr + math.log(float(np.trace(d @ d).real))
        d = d @ d
    raise ConvergenceError(f"norm bounds {lo}..{hi} not within {tol} after {max_iter} squarings")


def operator_norm(a, tol: float = FLOAT_TOL, max_iter: int = 80) -> float:
    lo, hi = norm_bounds(a, tol, max_iter)
    return (lo + hi) / 2


@dataclass(frozen=True, eq=False)
class ContractionMatrix:
    entries: np.ndarray
    tol: float = 1e-9

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NumericError("contraction must be a square matrix")
        object.__setattr__(self, "entries", m)
        norm = operator_norm(m)
        if norm > 1 + self.tol:
            raise NotAContraction(norm, self.tol)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def contraction(a, tol: float = 1e-9) -> ContractionMatrix:
    return ContractionMatrix(np.asarray(a, dtype=complex), tol)


def contraction_compose(a, b, tol: float = 1e-9) -> ContractionMatrix:
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise NumericError(f"rank mismatch {x.shape} vs {y.shape}")
    prod = x @ y
    if operator_norm(prod) > operator_norm(x) * operator_norm(y) + tol:
        raise AssertionError("submultiplicativity of the operator norm failed")
    return ContractionMatrix(prod, tol)


def contraction_adjoint(a, tol: float = 1e-9) -> ContractionMatrix:
    return ContractionMatrix(_as_array(a).conj().T.copy(), tol)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projection(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """``U P U*`` for a Haar-like unitary ``U`` and a coordinate projection of the given rank."""
    if not 0 <= rank <= n:
        raise NumericError(f"rank {rank} outside 0..{n}")
    u = random_unitary(n, rng)
    p = np.diag([1.0] * rank + [0.0] * (n - rank)).astype(complex)
    return u @ p @ u.conj().T


def random_contraction(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return z / (operator_norm(z) * (1 + 1e-9))


def check_projection_lemma(e, tol: float = 1e-9) -> bool:
    """An idempotent contraction must be self-adjoint.

    Raises :class:`NotIdempotent` if ``e @ e`` differs from ``e`` by more than
    ``tol`` and :class:`NotAContraction` (carrying ``.norm``) if ``e`` lies
    outside the unit ball.
    """
    m = _as_array(e)
    if np.abs(m @ m - m).max(initial=0.0) > tol:
        raise NotIdempotent("input is not idempotent within tolerance")
    norm = operator_norm(m)
    if norm > 1 + tol:
        raise NotAContraction(norm, tol)
    self_adjoint = bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol)
    if not self_adjoint:
        raise AssertionError(f"non-self-adjoint idempotent with norm {norm} <= 1")
    return self_adjoint
