"""Structure-constant super Lie algebras and the concrete algebras used here.

Provides graded Jacobi checking, adjoint data, matrix realizations, the
super translation algebra t^{1,3|4}, the super Poincare algebra
iso(R^{1,3|4}), the orthosymplectic algebra osp(1|4) with its supertrace
form, the closed-form super translation group chart with its invariant
frames and Maurer-Cartan coframe, and exponential-chart jets of matrix
super Lie groups.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import scalars
from .clifford import GammaBasis, Mat4, m4_mul, m4_scale
from .errors import CalibrationError, DimensionError, ParityError
from .forms import LieValuedForm, SuperForm, VectorFieldExpr, dual_coframe
from .grassmann import GeneratorSet
from .scalars import QI
from .superfield import Chart, Superfield
from .supermatrix import SuperMatrix, _invert_scalar_matrix


class SuperLieAlgebra:
    """Homogeneous basis with parity tags and structure constants.

    ``structure[(i, j)]`` maps target labels to the coefficient of that
    basis element in [e_i, e_j]; both orders are stored.
    """

    def __init__(self, labels: Sequence[str], parities: Sequence[int],
                 realization: Optional[Mapping[str, SuperMatrix]] = None):
        self.labels = tuple(labels)
        self.index = {l: i for i, l in enumerate(self.labels)}
        self._par = dict(zip(self.labels, parities))
        self.structure: Dict[Tuple[str, str], Dict[str, object]] = {}
        self.realization = dict(realization) if realization else None
        self.meta: Dict[str, object] = {}

    def parity_of(self, label: str) -> int:
        return self._par[label]

    def set_bracket(self, i: str, j: str, targets: Mapping[str, object]):
        """Set [e_i, e_j]; the reversed order follows by graded antisymmetry."""
        targets = {k: v for k, v in targets.items() if not scalars.is_zero(v)}
        if targets:
            self.structure[(i, j)] = dict(targets)
        else:
            self.structure.pop((i, j), None)
        if i != j:
            sgn = -1 if (self._par[i] * self._par[j]) & 1 else 1
            rev = {k: (v if sgn < 0 else -v) for k, v in targets.items()}
            if rev:
                self.structure[(j, i)] = rev
            else:
                self.structure.pop((j, i), None)

    def bracket_labels(self, i: str, j: str) -> Dict[str, object]:
        return dict(self.structure.get((i, j), {}))

    def bracket_value(self, v: Mapping[str, object], w: Mapping[str, object],
                      signed: bool = True):
        """[v, w] for coefficient dicts, [a e_i, b e_j] = +-(ab)[e_i, e_j].

        Coefficients may be scalars or superfields; homogeneous coefficient
        parities are read off per part when superfields are involved.  The
        sign (-1)^{|e_i||b|} of the module bracket is dropped when
        ``signed`` is false (the plain-commutator convention).
        """
        out: Dict[str, object] = {}
        for i, a in v.items():
            pi = self._par[i] if signed else 0
            for j, b in w.items():
                targets = self.structure.get((i, j))
                if not targets:
                    continue
                for pb, bpart in _parity_parts(b):
                    sgn = -1 if (pi * pb) & 1 else 1
                    ab = a * bpart
                    for k, c in targets.items():
                        term = ab * (c if sgn > 0 else -c)
                        out[k] = out[k] + term if k in out else term
        return {k: t for k, t in out.items() if not _is_zero(t)}

    def jacobi_residual(self) -> float:
        """Max-norm graded Jacobi residual over all homogeneous basis triples."""
        worst = 0.0
        for a, b, c in itertools.product(self.labels, repeat=3):
            pa, pb, pc = self._par[a], self._par[b], self._par[c]
            acc: Dict[str, object] = {}
            for term, sgn in (( (a, (b, c)), 1),
                              ( (b, (c, a)), -1 if (pa * (pb + pc)) & 1 else 1),
                              ( (c, (a, b)), -1 if (pc * (pa + pb)) & 1 else 1)):
                outer, (u, vv) = term
                inner = self.structure.get((u, vv), {})
                for mid, cm in inner.items():
                    for k, ck in self.structure.get((outer, mid), {}).items():
                        val = cm * ck * sgn
                        acc[k] = acc[k] + val if k in acc else val
            res = max((scalars.abs_val(x) for x in acc.values()), default=0.0)
            worst = max(worst, res)
        return worst

    def parity_consistency_residual(self) -> int:
        bad = 0
        for (i, j), targets in self.structure.items():
            want = (self._par[i] + self._par[j]) % 2
            for k in targets:
                if self._par[k] != want:
                    bad += 1
        return bad

    def ad_matrices(self) -> Dict[str, List[List[object]]]:
        """Adjoint action matrices ad(e_i)[a][b] = f^a_{i b}."""
        n = len(self.labels)
        out = {}
        for i in self.labels:
            mat = [[Fraction(0)] * n for _ in range(n)]
            for bpos, b in enumerate(self.labels):
                for k, c in self.structure.get((i, b), {}).items():
                    mat[self.index[k]][bpos] = c
            out[i] = mat
        return out

    def invariant_form_residual(self, form: Mapping[Tuple[str, str], object],
                                acting: Sequence[str],
                                on: Sequence[str]) -> float:
        """Residual of S([z,x],y) + (-1)^{|z||x|} S(x,[z,y]) over basis triples."""
        worst = 0.0
        for z in acting:
            pz = self._par[z]
            for x in on:
                px = self._par[x]
                for y in on:
                    acc = Fraction(0)
                    for k, c in self.structure.get((z, x), {}).items():
                        v = form.get((k, y))
                        if v is not None:
                            acc = acc + c * v
                    sgn = -1 if (pz * px) & 1 else 1
                    for k, c in self.structure.get((z, y), {}).items():
                        v = form.get((x, k))
                        if v is not None:
                            acc = acc + sgn * c * v
                    worst = max(worst, scalars.abs_val(acc))
        return worst


def _parity_parts(b):
    if isinstance(b, Superfield):
        return list(b.parity_parts())
    return [(0, b)]


def _is_zero(t):
    if isinstance(t, Superfield):
        return t.is_zero()
    return scalars.is_zero(t)


# -- concrete algebras -----------------------------------------------------------

P_LABELS = tuple(f"P{i}" for i in range(4))
Q_LABELS = tuple(f"Q{a}" for a in range(1, 5))
M_LABELS = tuple(f"M{i}{j}" for i in range(4) for j in range(4) if i < j)


def _m_label(i: int, j: int) -> Tuple[str, int]:
    if i < j:
        return f"M{i}{j}", 1
    return f"M{j}{i}", -1


_ALG_CACHE: dict = {}


def build_t134(gammas: GammaBasis) -> SuperLieAlgebra:
    """Super translation algebra: [Q_a, Q_b] = 1/2 (C g^I)_{ab} P_I."""
    key = ("t134", id(gammas))
    hit = _ALG_CACHE.get(key)
    if hit is not None:
        return hit
    labels = P_LABELS + Q_LABELS
    alg = SuperLieAlgebra(labels, [0] * 4 + [1] * 4)
    half = Fraction(1, 2)
    for a in range(4):
        for b in range(a, 4):
            targets = {}
            for i in range(4):
                cg = m4_mul(gammas.C, gammas.gamma_upper(i))
                c = cg[a][b] * QI(half)
                if c:
                    targets[f"P{i}"] = scalars.simplify(c)
            alg.set_bracket(f"Q{a + 1}", f"Q{b + 1}", targets)
    alg.meta["name"] = "t134"
    _ALG_CACHE[key] = alg
    return alg


def build_iso13_4(gammas: GammaBasis) -> SuperLieAlgebra:
    """Super Poincare algebra with the standard so(1,3) sector."""
    key = ("iso134", id(gammas))
    hit = _ALG_CACHE.get(key)
    if hit is not None:
        return hit
    labels = P_LABELS + M_LABELS + Q_LABELS
    alg = SuperLieAlgebra(labels, [0] * 4 + [0] * 6 + [1] * 4)
    eta = gammas.eta
    # [M_IJ, M_KL]
    for (i, j) in itertools.combinations(range(4), 2):
        for (k, l) in itertools.combinations(range(4), 2):
            if (i, j) > (k, l):
                continue
            targets: Dict[str, object] = {}

            def add(a, b, coef):
                if a == b or scalars.is_zero(coef):
                    return
                lbl, sgn = _m_label(a, b)
                c = coef * sgn
                targets[lbl] = targets.get(lbl, Fraction(0)) + c

            add(i, l, Fraction(eta[j]) if j == k else Fraction(0))
            add(j, l, -Fraction(eta[i]) if i == k else Fraction(0))
            add(i, k, -Fraction(eta[j]) if j == l else Fraction(0))
            add(j, k, Fraction(eta[i]) if i == l else Fraction(0))
            targets = {kk: v for kk, v in targets.items() if not scalars.is_zero(v)}
            alg.set_bracket(f"M{i}{j}", f"M{k}{l}", targets)
    # [M_IJ, P_K] = eta_JK P_I - eta_IK P_J
    for (i, j) in itertools.combinations(range(4), 2):
        for k in range(4):
            targets = {}
            if j == k:
                targets[f"P{i}"] = Fraction(eta[j])
            if i == k:
                targets[f"P{j}"] = targets.get(f"P{j}", Fraction(0)) - Fraction(eta[i])
            targets = {kk: v for kk, v in targets.items() if not scalars.is_zero(v)}
            alg.set_bracket(f"M{i}{j}", f"P{k}", targets)
    # [M_IJ, Q_a] = 1/2 Q_b (g_IJ)^b_a
    for (i, j) in itertools.combinations(range(4), 2):
        gij = gammas.gamma_asym((i, j))
        for a in range(4):
            targets = {}
            for b in range(4):
                c = gij[b][a] * QI(Fraction(1, 2))
                if c:
                    targets[f"Q{b + 1}"] = scalars.simplify(c)
            alg.set_bracket(f"M{i}{j}", f"Q{a + 1}", targets)
    # [Q, Q] as in the translation algebra
    t = build_t134(gammas)
    for a in range(4):
        for b in range(a, 4):
            alg.set_bracket(f"Q{a + 1}", f"Q{b + 1}",
                            t.bracket_labels(f"Q{a + 1}", f"Q{b + 1}"))
    alg.meta["name"] = "iso134"
    _ALG_CACHE[key] = alg
    return alg


# -- osp(1|4) -----------------------------------------------------------------------

def _scalar_supermatrix(grid, algebra: GeneratorSet) -> SuperMatrix:
    return SuperMatrix((1, 4), [[algebra.scalar(scalars.simplify(c)) for c in row]
                                for row in grid], algebra)


def osp_generator_matrices(gammas: GammaBasis, L) -> Dict[str, List[List[QI]]]:
    """Mat(1|4) realization: P_I = -g_I/2L, M_IJ = g_IJ/2 in the Sp block,
    Q_a with row weight 1/2L; calibrated to hit the supertrace targets."""
    L = Fraction(L)
    out: Dict[str, List[List[QI]]] = {}

    def embed_sp(m: Mat4) -> List[List[QI]]:
        grid = [[QI(0)] * 5 for _ in range(5)]
        for a in range(4):
            for b in range(4):
                grid[a + 1][b + 1] = m[a][b]
        return grid

    for i in range(4):
        out[f"P{i}"] = embed_sp(m4_scale(gammas.gamma[i], -Fraction(1, 2) / L))
    for (i, j) in itertools.combinations(range(4), 2):
        out[f"M{i}{j}"] = embed_sp(m4_scale(gammas.gamma_asym((i, j)),
                                            Fraction(1, 2)))
    lam = Fraction(1, 2) / L
    for a in range(4):
        grid = [[QI(0)] * 5 for _ in range(5)]
        for b in range(4):
            grid[0][b + 1] = gammas.C[b][a] * QI(lam)   # lam (C e_a)^T
        grid[a + 1][0] = QI(1)
        out[f"Q{a + 1}"] = grid
    return out


def build_osp14(gammas: GammaBasis, L=1) -> SuperLieAlgebra:
    """osp(1|4) from its Mat(1|4) realization, with the supertrace form.

    The invariant form is S(X, Y) = -str(X Y); generator normalizations are
    fixed so that S(P_I, P_J) = eta_IJ / L^2 and S(Q_a, Q_b) = C_{ab} / L
    hold exactly, with the derived bracket
    [Q_a, Q_b] = 1/2 (C g^I)_{ab} P_I + 1/(4L) (C g^{IJ})_{ab} M_IJ.
    """
    L = Fraction(L)
    if L <= 0:
        raise ValueError("the scale L must be positive")
    key = ("osp14", id(gammas), L)
    hit = _ALG_CACHE.get(key)
    if hit is not None:
        return hit
    grids = osp_generator_matrices(gammas, L)
    alg0 = GeneratorSet([], backend="exact")
    mats = {k: _scalar_supermatrix(g, alg0) for k, g in grids.items()}
    labels = P_LABELS + M_LABELS + Q_LABELS
    parities = [0] * 10 + [1] * 4
    alg = SuperLieAlgebra(labels, parities, realization=mats)
    # structure constants from the realization
    basis_vecs = {k: _vec25(grids[k]) for k in labels}
    for i in labels:
        for j in labels:
            if labels.index(j) < labels.index(i):
                continue
            br = mats[i].graded_comm(mats[j])
            coeffs = _solve_in_span(basis_vecs, labels,
                                    _vec25([[e.body() for e in row]
                                            for row in br.entries]))
            alg.set_bracket(i, j, {k: scalars.simplify(c)
                                   for k, c in coeffs.items()
                                   if not scalars.is_zero(c)})
    # supertrace form and its calibration targets
    form: Dict[Tuple[str, str], object] = {}
    for i in labels:
        for j in labels:
            v = -(mats[i] @ mats[j]).str_trace().body()
            if not scalars.is_zero(v):
                form[(i, j)] = scalars.simplify(v)
    alg.meta["name"] = "osp14"
    alg.meta["L"] = L
    alg.meta["form"] = form
    residual = 0.0
    for i in range(4):
        for j in range(4):
            want = Fraction(gammas.eta[i]) / L ** 2 if i == j else Fraction(0)
            got = form.get((f"P{i}", f"P{j}"), Fraction(0))
            residual = max(residual, scalars.abs_val(got - want))
    for a in range(4):
        for b in range(4):
            want = gammas.C[a][b] * QI(Fraction(1) / L)
            got = form.get((f"Q{a + 1}", f"Q{b + 1}"), Fraction(0))
            residual = max(residual, scalars.abs_val(got - want))
    if residual != 0.0:
        raise CalibrationError(
            f"osp(1|4) normalization misses the supertrace targets by {residual}")
    _ALG_CACHE[key] = alg
    return alg


def _vec25(grid) -> List[QI]:
    return [QI(0) + c if not isinstance(c, QI) else c
            for row in grid for c in row]


def _solve_in_span(basis_vecs: Mapping[str, List[QI]], labels: Sequence[str],
                   target: List[QI]) -> Dict[str, object]:
    """Exact coordinates of ``target`` in the span of the basis vectors."""
    cols = [basis_vecs[l] for l in labels]
    n = len(target)
    m = len(cols)
    aug = [[cols[j][i] for j in range(m)] + [target[i]] for i in range(n)]
    piv_rows = []
    row = 0
    for col in range(m):
        piv = None
        for r in range(row, n):
            if aug[r][col]:
                piv = r
                break
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        d = aug[row][col]
        aug[row] = [v / d for v in aug[row]]
        for r in range(n):
            if r != row and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[row])]
        piv_rows.append((row, col))
        row += 1
    coeffs: Dict[str, object] = {}
    for r, c in piv_rows:
        coeffs[labels[c]] = aug[r][m]
    for r in range(n):
        if all(not aug[r][j] for j in range(m)) and aug[r][m]:
            raise DimensionError("target is not in the span of the basis")
    return coeffs


def osp_contraction_residual(gammas: GammaBasis,
                             Ls=(1, 2, 3, 5)) -> float:
    """Check lim 1/L -> 0 of the osp structure constants against iso(13|4).

    Structure constants are rational in u = 1/L of degree <= 2; they are
    interpolated exactly through the sampled L values and the constant term
    is compared with the super Poincare constants.
    """
    iso = build_iso13_4(gammas)
    tables = []
    for L in Ls:
        tables.append(build_osp14(gammas, L).structure)
    us = [Fraction(1, L) for L in Ls]
    keys = set()
    for t in tables:
        for ij, targets in t.items():
            for k in targets:
                keys.add((ij, k))
    worst = 0.0
    for (ij, k) in keys:
        vals = [QI(0) + t.get(ij, {}).get(k, 0) for t in tables]
        c0 = _lagrange_at_zero(us, vals)
        want = QI(0) + iso.structure.get(ij, {}).get(k, 0)
        worst = max(worst, scalars.abs_val(c0 - want))
    return worst


def _lagrange_at_zero(xs: Sequence[Fraction], ys: Sequence[QI]) -> QI:
    acc = QI(0)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        w = Fraction(1)
        for j, xj in enumerate(xs):
            if i != j:
                w = w * (Fraction(0) - xj) / (xi - xj)
        acc = acc + yi * QI(w)
    return acc


# -- the super translation group chart ---------------------------------------------

class TranslationGroupChart:
    """Closed-form chart of the super translation group on R^{1,3|4}."""

    def __init__(self, gammas: GammaBasis, chart: Chart,
                 x_names: Sequence[str], th_names: Sequence[str]):
        self.gammas = gammas
        self.chart = chart
        self.x_names = tuple(x_names)
        self.th_names = tuple(th_names)
        self.algebra = build_t134(gammas)

    @classmethod
    def standard(cls, gammas: GammaBasis, sigmas: Sequence[str] = (),
                 backend: str = "exact", prefix: str = "") -> "TranslationGroupChart":
        x = tuple(f"{prefix}x{i}" for i in range(4))
        th = tuple(f"{prefix}th{a}" for a in range(1, 5))
        ch = Chart(even=x, odd=th, sigmas=sigmas, backend=backend)
        return cls(gammas, ch, x, th)

    def identity_coords(self) -> Dict[str, Superfield]:
        z = self.chart.zero_field()
        return {n: z for n in self.x_names + self.th_names}

    def mul(self, a: Mapping[str, Superfield],
            b: Mapping[str, Superfield]) -> Dict[str, Superfield]:
        """(x, th) * (y, et): z^I = x^I + y^I - 1/4 (C g^I)_{ab} th^a et^b."""
        out: Dict[str, Superfield] = {}
        C = self.gammas.C
        for i, xn in enumerate(self.x_names):
            z = a[xn] + b[xn]
            cg = m4_mul(C, self.gammas.gamma_upper(i))
            for al in range(4):
                for be in range(4):
                    c = cg[al][be]
                    if not c:
                        continue
                    term = a[self.th_names[al]] * b[self.th_names[be]]
                    z = z - term * (c * QI(Fraction(1, 4)))
            out[xn] = z
        for tn in self.th_names:
            out[tn] = a[tn] + b[tn]
        return out

    def inverse(self, a: Mapping[str, Superfield]) -> Dict[str, Superfield]:
        return {n: -a[n] for n in self.x_names + self.th_names}

    def coordinate_values(self) -> Dict[str, Superfield]:
        return {n: self.chart.var(n) for n in self.x_names + self.th_names}

    def left_invariant_frame(self) -> Dict[str, VectorFieldExpr]:
        """P_I = d/dx^I, Q_a = d/dth^a + 1/4 (C g^I)_{ab} th^b d/dx^I."""
        return self._invariant_frame(Fraction(1, 4))

    def right_invariant_frame(self) -> Dict[str, VectorFieldExpr]:
        return self._invariant_frame(Fraction(-1, 4))

    def _invariant_frame(self, quarter) -> Dict[str, VectorFieldExpr]:
        ch = self.chart
        out: Dict[str, VectorFieldExpr] = {}
        for i, xn in enumerate(self.x_names):
            out[f"P{i}"] = VectorFieldExpr.coordinate(ch, xn)
        for al in range(4):
            comps = {self.th_names[al]: ch.one_field()}
            for i in range(4):
                cg = m4_mul(self.gammas.C, self.gammas.gamma_upper(i))
                acc = ch.zero_field()
                for be in range(4):
                    c = cg[al][be]
                    if c:
                        acc = acc + ch.var(self.th_names[be]) * (c * QI(quarter))
                if not acc.is_zero():
                    comps[self.x_names[i]] = acc
            out[f"Q{al + 1}"] = VectorFieldExpr(ch, comps)
        return out

    def maurer_cartan(self) -> LieValuedForm:
        """Left-dual coframe paired with the algebra basis."""
        frame = self.left_invariant_frame()
        order = list(self.algebra.labels)
        co = dual_coframe([frame[l] for l in order])
        return LieValuedForm(self.algebra, dict(zip(order, co)), self.chart)

    def adjoint_matrix(self, g: Mapping[str, Superfield]):
        """Ad_{g^{-1}} on the basis, from the symbolic conjugation jet."""
        ch = self.chart
        vals = self.coordinate_values()
        conj = self.mul(self.mul(self.inverse(g), vals), g)
        order = self.x_names + self.th_names
        labels = list(self.algebra.labels)
        n = len(labels)
        mat = [[None] * n for _ in range(n)]
        # linearize at the identity: coefficient of coordinate j in conj^i
        for jpos, lj in enumerate(labels):
            # direction e_j == coordinate vector at identity
            for ipos, li in enumerate(labels):
                f = conj[order[ipos]]
                g_lin = _linear_coefficient(f, order[jpos])
                mat[ipos][jpos] = g_lin
        return mat


def _linear_coefficient(f: Superfield, coord: str):
    """d f / d coord at the chart origin (all coordinates -> 0)."""
    ch = f.chart
    df = f.dx(coord) if coord in ch.even else f.dtheta(coord)
    zero_even = {n: ch.algebra.zero() for n in ch.even}
    zero_odd = {n: ch.algebra.zero() for n in ch.odd}
    val = df.eval(zero_even, zero_odd)
    return val.body()


# -- exponential charts of matrix groups --------------------------------------------

def bernoulli_numbers(n: int) -> List[Fraction]:
    """B_0..B_n with B_1 = -1/2 (generating function z/(e^z - 1))."""
    out = [Fraction(1)]
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += Fraction(_binom(m + 1, k)) * out[k]
        out.append(-acc / (m + 1))
    return out


def _binom(n, k):
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def invariant_field_value(alg: SuperLieAlgebra, A: Mapping[str, Superfield],
                          X: Mapping[str, object], side: str,
                          cap: int, chart: Chart) -> Dict[str, Superfield]:
    """phi(ad_A)(X) or phi(-ad_A)(X) as a jet; components of the right- or
    left-invariant vector field at exp(A) in exponential coordinates."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    flip = side == "left"   # phi(-ad_A): term n picks up (-1)^n
    nterms = 2 * cap + 6
    B = bernoulli_numbers(nterms)
    fact = Fraction(1)
    cur: Dict[str, Superfield] = {}
    for k, c in X.items():
        cur[k] = chart.scalar_field(c) if not isinstance(c, Superfield) else c
    out: Dict[str, Superfield] = {k: v * B[0] for k, v in cur.items()}
    for n in range(1, nterms + 1):
        cur = alg.bracket_value(A, cur)
        cur = {k: v.truncate_xdegree(cap) for k, v in cur.items()}
        cur = {k: v for k, v in cur.items() if not v.is_zero()}
        if not cur:
            break
        fact = fact * n
        coef = B[n] / fact
        if flip and n % 2 == 1:
            coef = -coef
        if coef != 0:
            for k, v in cur.items():
                term = v * coef
                out[k] = out[k] + term if k in out else term
    return {k: v for k, v in out.items() if not v.is_zero()}
