"""Block-graded matrices over a Grassmann algebra.

A :class:`SuperMatrix` of dimension (p|q) indexes the first p rows/columns
as even and the last q as odd.  The supertranspose convention is

    (X^sT)_{ij} = (-1)^{(|i| + |X|) (|i| + |j|)} X_{ji}

for homogeneous X, which satisfies (XY)^sT = (-1)^{|X||Y|} Y^sT X^sT; this
is validated by the test suite rather than assumed.
"""

from __future__ import annotations

from typing import Callable, List, Optional, Sequence

from . import scalars
from .errors import DimensionError, ParityError
from .grassmann import GeneratorSet, GrassmannNumber, grassmann_from_json


class SuperMatrix:
    """Matrix with GrassmannNumber entries and (p|q) block grading."""

    def __init__(self, dims, entries: Sequence[Sequence[GrassmannNumber]],
                 algebra: Optional[GeneratorSet] = None):
        self.p, self.q = dims
        n = self.p + self.q
        if len(entries) != n or any(len(r) != n for r in entries):
            raise DimensionError(f"need a {n}x{n} entry grid for dims {dims}")
        self.entries = [list(r) for r in entries]
        if algebra is None:
            algebra = entries[0][0].algebra
        self.algebra = algebra

    # -- constructors --------------------------------------------------------
    @classmethod
    def zeros(cls, dims, algebra: GeneratorSet) -> "SuperMatrix":
        n = dims[0] + dims[1]
        return cls(dims, [[algebra.zero() for _ in range(n)] for _ in range(n)],
                   algebra)

    @classmethod
    def identity(cls, dims, algebra: GeneratorSet) -> "SuperMatrix":
        out = cls.zeros(dims, algebra)
        for i in range(dims[0] + dims[1]):
            out.entries[i][i] = algebra.one()
        return out

    @classmethod
    def from_scalars(cls, dims, grid, algebra: GeneratorSet) -> "SuperMatrix":
        n = dims[0] + dims[1]
        ent = [[algebra.scalar(grid[i][j]) for j in range(n)] for i in range(n)]
        return cls(dims, ent, algebra)

    def copy(self) -> "SuperMatrix":
        return SuperMatrix((self.p, self.q),
                           [row[:] for row in self.entries], self.algebra)

    # -- grading ---------------------------------------------------------------
    @property
    def dims(self):
        return (self.p, self.q)

    @property
    def size(self) -> int:
        return self.p + self.q

    def index_parity(self, i: int) -> int:
        return 0 if i < self.p else 1

    def parity(self) -> Optional[int]:
        """Matrix parity: |X| with X_ij of Grassmann parity |i|+|j|+|X|."""
        found = set()
        for i in range(self.size):
            for j in range(self.size):
                g = self.entries[i][j]
                if g.is_zero():
                    continue
                gp = g.parity()
                if gp is None:
                    return None
                found.add((gp + self.index_parity(i) + self.index_parity(j)) % 2)
        if not found:
            return 0
        return found.pop() if len(found) == 1 else None

    def assert_parity(self, p: int, what: str = "matrix"):
        if self.parity() != p and not self.is_zero():
            raise ParityError(f"{what} is not parity-{p} homogeneous")

    def is_zero(self) -> bool:
        return all(g.is_zero() for row in self.entries for g in row)

    # -- arithmetic --------------------------------------------------------------
    def _check(self, other: "SuperMatrix"):
        if self.dims != other.dims:
            raise DimensionError(f"dims {self.dims} vs {other.dims}")

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        n = self.size
        return SuperMatrix(self.dims,
                           [[self.entries[i][j] + other.entries[i][j]
                             for j in range(n)] for i in range(n)], self.algebra)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        n = self.size
        return SuperMatrix(self.dims,
                           [[self.entries[i][j] - other.entries[i][j]
                             for j in range(n)] for i in range(n)], self.algebra)

    def __neg__(self) -> "SuperMatrix":
        return SuperMatrix(self.dims,
                           [[-g for g in row] for row in self.entries],
                           self.algebra)

    def __mul__(self, c) -> "SuperMatrix":
        return SuperMatrix(self.dims,
                           [[g * c for g in row] for row in self.entries],
                           self.algebra)

    __rmul__ = __mul__

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        n = self.size
        out = SuperMatrix.zeros(self.dims, self.algebra)
        for i in range(n):
            row = self.entries[i]
            for k in range(n):
                a = row[k]
                if a.is_zero():
                    continue
                ok = other.entries[k]
                orow = out.entries[i]
                for j in range(n):
                    b = ok[j]
                    if not b.is_zero():
                        orow[j] = orow[j] + a * b
        return out

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return self.dims == other.dims and (self - other).is_zero()

    def __hash__(self):
        raise TypeError("SuperMatrix is unhashable")

    # -- super operations -----------------------------------------------------------
    def parity_part(self, p: int) -> "SuperMatrix":
        out = SuperMatrix.zeros(self.dims, self.algebra)
        for i in range(self.size):
            for j in range(self.size):
                gp = (self.index_parity(i) + self.index_parity(j) + p) % 2
                out.entries[i][j] = self.entries[i][j].parity_part(gp)
        return out

    def str_trace(self) -> GrassmannNumber:
        """Supertrace: tr X_00 - tr X_11 on the even part of X.

        The odd part takes the plain trace, the grading that makes
        str([X, Y]) vanish identically for homogeneous X, Y.
        """
        out = self.algebra.zero()
        for p in (0, 1):
            part = self.parity_part(p)
            for i in range(self.size):
                t = part.entries[i][i]
                out = out + (-t if (self.index_parity(i) and p == 0) else t)
        return out

    def stranspose(self, parity: Optional[int] = None) -> "SuperMatrix":
        x = self.parity() if parity is None else parity
        if x is None:
            raise ParityError("supertranspose needs a homogeneous matrix "
                              "or an explicit parity")
        n = self.size
        out = SuperMatrix.zeros(self.dims, self.algebra)
        for i in range(n):
            pi = self.index_parity(i)
            for j in range(n):
                pj = self.index_parity(j)
                sgn = -1 if ((pi + x) * (pi + pj)) & 1 else 1
                g = self.entries[j][i]
                out.entries[i][j] = g * sgn if sgn < 0 else g
        return out

    def graded_comm(self, other: "SuperMatrix") -> "SuperMatrix":
        """[X, Y] = XY - (-1)^{|X||Y|} YX for homogeneous X, Y."""
        px, py = self.parity(), other.parity()
        if px is None or py is None:
            raise ParityError("graded commutator needs homogeneous matrices")
        yx = other @ self
        return (self @ other) + (yx if (px and py) else -yx)

    def body_matrix(self) -> List[List[object]]:
        return [[g.body() for g in row] for row in self.entries]

    def soul(self) -> "SuperMatrix":
        return SuperMatrix(self.dims,
                           [[g.soul() for g in row] for row in self.entries],
                           self.algebra)

    def max_abs(self) -> float:
        return max((g.max_abs() for row in self.entries for g in row),
                   default=0.0)

    def map(self, fn: Callable[[GrassmannNumber], GrassmannNumber]) -> "SuperMatrix":
        return SuperMatrix(self.dims,
                           [[fn(g) for g in row] for row in self.entries],
                           self.algebra)

    def inv(self) -> "SuperMatrix":
        """Exact inverse: body by Gaussian elimination, soul by Neumann series."""
        body = SuperMatrix(self.dims, [[self.algebra.scalar(b) for b in row]
                                       for row in self.body_matrix()], self.algebra)
        binv_scalars = _invert_scalar_matrix(self.body_matrix(), self.algebra.backend)
        binv = SuperMatrix(self.dims, [[self.algebra.scalar(c) for c in row]
                                       for row in binv_scalars], self.algebra)
        n_mat = binv @ (self - body)  # nilpotent
        out = SuperMatrix.identity(self.dims, self.algebra)
        power = SuperMatrix.identity(self.dims, self.algebra)
        sign = -1
        for _ in range(self.algebra.n_generators + 1):
            power = power @ n_mat
            if power.is_zero():
                break
            out = out + power * sign
            sign = -sign
        return out @ binv

    def mexp(self, order: int = 16) -> "SuperMatrix":
        """Matrix exponential of an even matrix.

        Float backend: scaling and squaring with a Taylor kernel; exact
        backend: plain Taylor series to ``order`` (exact when the matrix is
        nilpotent, a jet otherwise).
        """
        if self.parity() not in (0,):
            raise ParityError("mexp needs an even matrix")
        if self.algebra.backend == "float":
            norm = self.max_abs()
            k = 0
            while norm > 0.5 and k < 40:
                norm /= 2.0
                k += 1
            x = self * (0.5 ** k)
            out = _exp_taylor(x, order)
            for _ in range(k):
                out = out @ out
            return out
        return _exp_taylor(self, order)

    def to_json(self) -> dict:
        p = self.parity()
        return {"dims": [self.p, self.q],
                "parity": {0: "even", 1: "odd", None: "none"}[p],
                "entries": [[g.to_json() for g in row] for row in self.entries]}

    def __repr__(self):
        rows = "\n  ".join("[" + ", ".join(repr(g) for g in row) + "]"
                           for row in self.entries)
        return f"SuperMatrix({self.p}|{self.q},\n  {rows})"


def supermatrix_from_json(data: dict, algebra: GeneratorSet) -> SuperMatrix:
    dims = tuple(data["dims"])
    ent = [[grassmann_from_json(e, algebra) for e in row]
           for row in data["entries"]]
    return SuperMatrix(dims, ent, algebra)


def _exp_taylor(x: SuperMatrix, order: int) -> SuperMatrix:
    out = SuperMatrix.identity(x.dims, x.algebra)
    term = SuperMatrix.identity(x.dims, x.algebra)
    for k in range(1, order + 1):
        term = term @ x
        term = term * (scalars.coerce(1, x.algebra.backend) /
                       (k if x.algebra.backend == "float" else scalars.coerce(k, "exact")))
        if term.is_zero():
            break
        out = out + term
    return out


def _invert_scalar_matrix(grid, backend: str):
    """Gauss-Jordan inverse of a scalar matrix, exact or float."""
    n = len(grid)
    one = scalars.coerce(1, backend)
    a = [[grid[i][j] * one for j in range(n)] for i in range(n)]
    inv = [[one if i == j else one * 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        best = 0.0
        for r in range(col, n):
            v = scalars.abs_val(a[r][col])
            if v > best:
                best, piv = v, r
        if piv is None or best == 0.0:
            raise DimensionError("body matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        d = scalars.recip(a[col][col])
        a[col] = [v * d for v in a[col]]
        inv[col] = [v * d for v in inv[col]]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            if scalars.is_zero(f):
                continue
            a[r] = [va - f * vc for va, vc in zip(a[r], a[col])]
            inv[r] = [va - f * vc for va, vc in zip(inv[r], inv[col])]
    return inv


# -- small generic matrix helpers (entries: anything with + and a product) ----

def mat_mul(a, b, mul):
    n, m, k = len(a), len(b[0]), len(b)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = None
            for t in range(k):
                term = mul(a[i][t], b[t][j])
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_map(a, fn):
    return [[fn(x) for x in row] for row in a]


class SuperBilinearForm:
    """Graded-symmetric scalar bilinear form on a homogeneous basis.

    ``matrix[i][j]`` holds S(e_i, e_j); entries are plain scalars (no
    nilpotents), and graded symmetry S_ij = (-1)^{|i||j|} S_ji is checked on
    construction.
    """

    def __init__(self, matrix, parities: Sequence[int], parity: int = 0,
                 require_nondegenerate: bool = False):
        self.matrix = [list(r) for r in matrix]
        self.parities = tuple(parities)
        self.parity = parity
        n = len(self.parities)
        for i in range(n):
            for j in range(n):
                sgn = -1 if (self.parities[i] * self.parities[j]) & 1 else 1
                if not scalars.is_zero(self.matrix[i][j] - sgn * self.matrix[j][i]):
                    raise ValueError("form is not graded symmetric")
                if (self.parities[i] + self.parities[j] + parity) % 2 == 1 \
                        and not scalars.is_zero(self.matrix[i][j]):
                    raise ParityError("form entry violates its declared parity")
        if require_nondegenerate:
            _invert_scalar_matrix(self.matrix, "float")

    def __call__(self, i: int, j: int):
        return self.matrix[i][j]
