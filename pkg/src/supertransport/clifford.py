"""D=4 Clifford algebra, signature (-+++), with exact rational entries.

The representation is pinned by the required symmetry properties of the
charge conjugation matrix C = i g3 g1:

    C^T = -C,   (C gI)^T = C gI,   (C gIJ)^T = C gIJ

which force g0, g2 antisymmetric and g1, g3 symmetric; g2 is then purely
imaginary and the rest real.  All entries are Gaussian rationals, so every
identity below is checked exactly.

The chirality matrix is fixed as g* = s * i*g0*g1*g2*g3 with the sign s
calibrated once against g* g_{IJK} = i eps_{IJKL} g^L and recorded.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import List, Sequence

from .errors import CalibrationError, ParityError
from .scalars import QI

Mat4 = List[List[QI]]


def _q(x) -> QI:
    return x if isinstance(x, QI) else QI(x)


def m4(rows) -> Mat4:
    return [[_q(x) for x in row] for row in rows]


def m4_zero() -> Mat4:
    return [[QI(0)] * 4 for _ in range(4)]


def m4_id() -> Mat4:
    return [[QI(1 if i == j else 0) for j in range(4)] for i in range(4)]


def m4_mul(a: Mat4, b: Mat4) -> Mat4:
    out = m4_zero()
    for i in range(4):
        for k in range(4):
            aik = a[i][k]
            if not aik:
                continue
            for j in range(4):
                if b[k][j]:
                    out[i][j] = out[i][j] + aik * b[k][j]
    return out


def m4_add(a: Mat4, b: Mat4) -> Mat4:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def m4_sub(a: Mat4, b: Mat4) -> Mat4:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def m4_scale(a: Mat4, c) -> Mat4:
    c = _q(c)
    return [[x * c for x in row] for row in a]


def m4_T(a: Mat4) -> Mat4:
    return [[a[j][i] for j in range(4)] for i in range(4)]


def m4_is_zero(a: Mat4) -> bool:
    return all(not x for row in a for x in row)


def _kron(a, b) -> Mat4:
    out = m4_zero()
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    out[2 * i + k][2 * j + l] = _q(a[i][j]) * _q(b[k][l])
    return out


_EPS2 = [[0, 1], [-1, 0]]
_S1 = [[0, 1], [1, 0]]
_S3 = [[1, 0], [0, -1]]
_I2 = [[1, 0], [0, 1]]


class GammaBasis:
    """Gamma matrices, charge conjugation, chirality and epsilon symbol."""

    def __init__(self, gammas: Sequence[Mat4], eta: Sequence[int]):
        self.gamma = list(gammas)
        self.eta = tuple(eta)
        self.C = m4_scale(m4_mul(self.gamma[3], self.gamma[1]), QI(0, 1))
        self._validate_clifford()
        self.gamma_star, self.star_sign = self._calibrate_star()

    # -- structure ----------------------------------------------------------
    def _validate_clifford(self):
        for i in range(4):
            for j in range(4):
                anti = m4_add(m4_mul(self.gamma[i], self.gamma[j]),
                              m4_mul(self.gamma[j], self.gamma[i]))
                want = m4_scale(m4_id(), 2 * self.eta[i] if i == j else 0)
                if not m4_is_zero(m4_sub(anti, want)):
                    raise CalibrationError(f"Clifford relation fails at ({i},{j})")
        if not m4_is_zero(m4_add(m4_T(self.C), self.C)):
            raise CalibrationError("C is not antisymmetric")
        for i in range(4):
            cg = m4_mul(self.C, self.gamma[i])
            if not m4_is_zero(m4_sub(m4_T(cg), cg)):
                raise CalibrationError(f"C g{i} is not symmetric")

    def _calibrate_star(self):
        prod = m4_id()
        for g in self.gamma:
            prod = m4_mul(prod, g)
        for sign in (1, -1):
            star = m4_scale(prod, QI(0, sign))
            ok = True
            for i, j, k in itertools.permutations(range(4), 3):
                lhs = m4_mul(star, self.gamma_asym((i, j, k)))
                rhs = m4_zero()
                for l in range(4):
                    e = self.eps_lower(i, j, k, l)
                    if e:
                        rhs = m4_add(rhs, m4_scale(self.gamma_upper(l), QI(0, e)))
                if not m4_is_zero(m4_sub(lhs, rhs)):
                    ok = False
                    break
            if ok:
                return star, sign
        raise CalibrationError("no chirality sign satisfies g* g_IJK = i eps g^L")

    # -- symbols ----------------------------------------------------------------
    def eps_upper(self, i, j, k, l) -> int:
        """Totally antisymmetric symbol with eps^{0123} = 1."""
        idx = (i, j, k, l)
        if len(set(idx)) != 4:
            return 0
        sign = 1
        seq = list(idx)
        for a in range(4):
            for b in range(3 - a):
                if seq[b] > seq[b + 1]:
                    seq[b], seq[b + 1] = seq[b + 1], seq[b]
                    sign = -sign
        return sign

    def eps_lower(self, i, j, k, l) -> int:
        return -self.eps_upper(i, j, k, l)

    def gamma_upper(self, i: int) -> Mat4:
        return m4_scale(self.gamma[i], self.eta[i])

    def gamma_asym(self, idx: Sequence[int]) -> Mat4:
        """Antisymmetrized product g_[I1 ... Ik] with weight 1/k!."""
        idx = tuple(idx)
        k = len(idx)
        out = m4_zero()
        for perm in itertools.permutations(range(k)):
            sign = _perm_sign(perm)
            prod = m4_id()
            for p in perm:
                prod = m4_mul(prod, self.gamma[idx[p]])
            out = m4_add(out, m4_scale(prod, sign))
        return m4_scale(out, Fraction(1, _factorial(k)))

    def c_gamma(self, idx: Sequence[int]) -> Mat4:
        return m4_mul(self.C, self.gamma_asym(idx))

    def to_json(self) -> dict:
        def dump(m):
            return [[{"re": str(x.re), "im": str(x.im)} for x in row] for row in m]
        return {
            "representation": "majorana",
            "signature": list(self.eta),
            "gamma": [dump(g) for g in self.gamma],
            "C": dump(self.C),
            "gamma_star": dump(self.gamma_star),
            "gamma_star_sign": self.star_sign,
            "epsilon_upper_0123": 1,
            "spinor_contraction": "psi-bar_a = psi^b C_{ba}",
        }


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def _factorial(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


_BASIS_CACHE: dict = {}


def build_gammas(representation: str = "majorana") -> GammaBasis:
    """Construct a gamma basis for the named representation (cached)."""
    if representation != "majorana":
        raise ValueError(f"unknown representation {representation!r}")
    hit = _BASIS_CACHE.get(representation)
    if hit is not None:
        return hit
    g0 = _kron(_EPS2, _S1)
    g1 = _kron(_S1, _S1)
    g2 = m4_scale(_kron(_I2, _EPS2), QI(0, 1))
    g3 = _kron(_S3, _S1)
    basis = GammaBasis([g0, g1, g2, g3], eta=(-1, 1, 1, 1))
    _BASIS_CACHE[representation] = basis
    return basis


# -- spinor bilinears ---------------------------------------------------------

def spinor_apply(mat: Mat4, psi, i_unit):
    """(M psi)^a for a spinor with components in any commutative-ish ring.

    ``i_unit`` supplies the imaginary unit of the component ring so QI
    matrix entries can act on rational Grassmann coefficients.
    """
    out = []
    for a in range(4):
        acc = None
        for b in range(4):
            c = mat[a][b]
            if not c:
                continue
            term = psi[b] * c.re if c.im == 0 else psi[b] * c.re + (psi[b] * i_unit) * c.im
            acc = term if acc is None else acc + term
        out.append(acc if acc is not None else psi[0] * 0)
    return out


def bilinear(psi, mat: Mat4, chi, i_unit, mul=None):
    """psi-bar M chi = psi^a (C-absorbed M)_{ab} chi^b.

    ``mat`` must already include the C factor (use :meth:`GammaBasis.c_gamma`
    or pass ``m4_mul(basis.C, M)``).  ``mul`` overrides the component
    product, e.g. a wedge for form-valued spinors.
    """
    if mul is None:
        mul = lambda a, b: a * b
    acc = None
    for a in range(4):
        for b in range(4):
            c = mat[a][b]
            if not c:
                continue
            term = mul(psi[a], chi[b])
            term = term * c.re if c.im == 0 else term * c.re + (term * i_unit) * c.im
            acc = term if acc is None else acc + term
    return acc if acc is not None else mul(psi[0], chi[0]) * 0


def fierz_residual(basis: GammaBasis, psi, i_unit, mul=None):
    """Components of g_I psi (psi-bar g^I psi); zero for odd psi."""
    if mul is None:
        mul = lambda a, b: a * b
    out = None
    for i in range(4):
        b = bilinear(psi, m4_mul(basis.C, basis.gamma_upper(i)), psi, i_unit, mul)
        gpsi = spinor_apply(basis.gamma[i], psi, i_unit)
        comp = [mul(g, b) for g in gpsi]
        out = comp if out is None else [x + y for x, y in zip(out, comp)]
    return out


def check_odd_spinor(psi):
    for c in psi:
        p = c.parity()
        if p not in (1,) and not c.is_zero():
            raise ParityError("spinor components must be odd")
