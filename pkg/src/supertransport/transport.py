"""Parallel transport of pulled-back connections along parametrized paths.

The holonomy solves dg/dt = -A(t) g with g(0) = 1 over the Grassmann
algebra of the parametrizing odd constants: the nilpotent directions ride
along exactly inside the graded matrix arithmetic, only the body needs a
numerical integrator.  Super-time (t, theta) transport reduces the odd
flow equation D g = -A g, D = d_theta + theta d_t, to a coupled even
system and is solved the same way.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import scalars
from .errors import DimensionError, InputError, ParityError
from .forms import LieValuedForm, SuperForm, VectorFieldExpr
from .grassmann import GeneratorSet, GrassmannNumber
from .superfield import Chart, Superfield
from .supermatrix import SuperMatrix


class PathSpec:
    """A polynomial path t -> (x(t), theta(t)) with odd-constant coefficients.

    Components live on a chart whose single even coordinate is the time
    variable; x components are even superfields, theta components odd.
    """

    def __init__(self, tchart: Chart, x: Mapping[str, Superfield],
                 theta: Mapping[str, Superfield]):
        if len(tchart.even) != 1 or tchart.odd:
            raise InputError("path chart needs exactly the time coordinate")
        self.tchart = tchart
        self.tname = tchart.even[0]
        self.x = dict(x)
        self.theta = dict(theta)
        for n, f in self.x.items():
            if f.parity() not in (0,):
                raise ParityError(f"even path component {n!r} is not even")
        for n, f in self.theta.items():
            if not f.is_zero() and f.parity() != 1:
                raise ParityError(f"odd path component {n!r} is not odd")

    def components(self) -> Dict[str, Superfield]:
        out = dict(self.x)
        out.update(self.theta)
        return out

    def velocity(self) -> Dict[str, Superfield]:
        return {n: f.dx(self.tname) for n, f in self.components().items()}

    def at(self, t) -> Dict[str, GrassmannNumber]:
        targ = {self.tname: self.tchart.algebra.scalar(t)}
        return {n: f.eval(targ) for n, f in self.components().items()}

    def restrict(self, a, b) -> "PathSpec":
        """Affine reparametrization mapping [0,1] onto [a,b]."""
        ch = self.tchart
        tt = ch.scalar_field(a) + ch.var(self.tname) * (ch.scalar_field(b) -
                                                        ch.scalar_field(a))
        sub = {self.tname: tt}
        return PathSpec(ch, {n: f.subs(sub) for n, f in self.x.items()},
                        {n: f.subs(sub) for n, f in self.theta.items()})

    def reversed(self) -> "PathSpec":
        ch = self.tchart
        tt = ch.scalar_field(1) - ch.var(self.tname)
        sub = {self.tname: tt}
        return PathSpec(ch, {n: f.subs(sub) for n, f in self.x.items()},
                        {n: f.subs(sub) for n, f in self.theta.items()})


class TransportProblem:
    """Pullback coefficient A^gamma(t) plus a matrix realization and solver."""

    def __init__(self, labels: Sequence[str], label_parities: Sequence[int],
                 a_fields: Mapping[str, Superfield],
                 realization: Mapping[str, Sequence[Sequence[object]]],
                 dims: Tuple[int, int], tchart: Chart,
                 steps: int = 1000, method: str = "rk4",
                 path: Optional[PathSpec] = None):
        self.labels = tuple(labels)
        self.parities = dict(zip(labels, label_parities))
        self.a_fields = {k: v for k, v in dict(a_fields).items()
                         if not v.is_zero()}
        self.realization = realization
        self.dims = tuple(dims)
        self.tchart = tchart
        self.steps = int(steps)
        self.method = method
        self.path = path
        if self.steps <= 0:
            raise InputError("step count must be positive")
        for k, f in self.a_fields.items():
            want = self.parities[k]
            if f.parity() != want:
                raise ParityError(
                    f"pullback component for {k!r} must have parity {want} "
                    "(the assembled coefficient must be even)")

    @classmethod
    def from_connection(cls, A: LieValuedForm, path: PathSpec,
                        realization: Mapping[str, Sequence[Sequence[object]]],
                        dims: Tuple[int, int], steps: int = 1000,
                        method: str = "rk4") -> "TransportProblem":
        """A^gamma(t) = <velocity | pullback of A along the path>."""
        sub = path.components()
        a_fields = {}
        for label in A.algebra.labels:
            comp = A.component(label)
            if comp.is_zero():
                continue
            pulled = comp.pullback(sub, chart=path.tchart)
            a_fields[label] = pulled.interior_coord(path.tname)
        parities = [A.algebra.parity_of(l) for l in A.algebra.labels]
        return cls(A.algebra.labels, parities, a_fields, realization, dims,
                   path.tchart, steps=steps, method=method, path=path)

    def coefficient(self, t) -> SuperMatrix:
        """A^gamma(t) as a matrix over the odd-constant algebra."""
        alg = self.tchart.algebra
        out = SuperMatrix.zeros(self.dims, alg)
        targ = {self.tname(): alg.scalar(t)}
        for label, f in self.a_fields.items():
            val = f.eval(targ)
            if val.is_zero():
                continue
            grid = self.realization[label]
            n = self.dims[0] + self.dims[1]
            for i in range(n):
                for j in range(n):
                    c = grid[i][j]
                    if not scalars.is_zero(c):
                        out.entries[i][j] = out.entries[i][j] + val * c
        return out

    def tname(self) -> str:
        return self.tchart.even[0]


class TransportResult:
    """Holonomy at t = 1 plus trajectory samples and diagnostics."""

    def __init__(self, g: SuperMatrix, samples: List[Tuple[float, SuperMatrix]],
                 diagnostics: dict):
        self.g = g
        self.samples = samples
        self.diagnostics = diagnostics

    def to_json(self) -> dict:
        return {"holonomy": self.g.to_json(), "diagnostics": self.diagnostics}


def transport_even(problem: TransportProblem,
                   keep_samples: bool = False) -> TransportResult:
    """Solve dg/dt = -A^gamma(t) g, g(0) = 1, on [0, 1]."""
    alg = problem.tchart.algebra
    g = SuperMatrix.identity(problem.dims, alg)
    n = problem.steps
    h = 1.0 if alg.backend == "float" else Fraction(1)
    h = h / n
    samples = [(0.0, g)] if keep_samples else []
    coef = problem.coefficient
    method = problem.method
    for k in range(n):
        t0 = k * h
        if method == "rk4":
            a1 = coef(t0)
            a2 = coef(t0 + h / 2)
            a4 = coef(t0 + h)
            k1 = -(a1 @ g)
            k2 = -(a2 @ (g + k1 * (h / 2)))
            k3 = -(a2 @ (g + k2 * (h / 2)))
            k4 = -(a4 @ (g + k3 * h))
            g = g + (k1 + k2 * 2 + k3 * 2 + k4) * (h / 6)
        elif method == "expproduct":
            g = (coef(t0 + h / 2) * (-h)).mexp() @ g
        elif method == "magnus2":
            b0 = coef(t0) * (-1)
            b1 = coef(t0 + h) * (-1)
            omega = (b0 + b1) * (h / 2) + \
                (b1 @ b0 - b0 @ b1) * (h * h / 12)
            g = omega.mexp() @ g
        else:
            raise InputError(f"unknown method {problem.method!r}")
        if keep_samples:
            samples.append((float(t0 + h), g))
    diag = {"method": problem.method, "steps": problem.steps,
            "backend": alg.backend}
    return TransportResult(g, samples, diag)


def compose_transport(p_second: TransportProblem,
                      p_first: TransportProblem,
                      tol: float = 1e-12) -> TransportResult:
    """Transport along the concatenation (first leg, then second leg)."""
    if p_second.path is not None and p_first.path is not None:
        end = p_first.path.at(1)
        start = p_second.path.at(0)
        worst = 0.0
        for kname in set(end) | set(start):
            za = end.get(kname)
            zb = start.get(kname)
            if za is None or zb is None:
                raise DimensionError("paths live on different charts")
            worst = max(worst, (za - zb).max_abs())
        if worst > tol:
            raise InputError(f"endpoint mismatch {worst} exceeds {tol}")
    r1 = transport_even(p_first)
    r2 = transport_even(p_second)
    g = r2.g @ r1.g
    return TransportResult(g, [], {"composed": True,
                                   "legs": [r1.diagnostics, r2.diagnostics]})


def substitute_sigmas(f: Superfield, mapping: Mapping[str, GrassmannNumber],
                      new_chart: Chart) -> Superfield:
    """Apply an odd-constant substitution to every coefficient."""
    out = new_chart.zero_field()
    for e, gn in f.terms.items():
        img = gn.substitute(mapping, target=new_chart.algebra) if mapping \
            else new_chart.algebra.zero() + gn
        if not img.is_zero():
            out = out + Superfield(new_chart, {e: img})
    return out


def reparametrize_problem(problem: TransportProblem,
                          mapping: Mapping[str, GrassmannNumber],
                          new_chart: Chart) -> TransportProblem:
    """lambda^* of the pullback data: substitute the odd constants."""
    a2 = {k: substitute_sigmas(f, mapping, new_chart)
          for k, f in problem.a_fields.items()}
    return TransportProblem(problem.labels,
                            [problem.parities[k] for k in problem.labels],
                            a2, problem.realization, problem.dims, new_chart,
                            steps=problem.steps, method=problem.method)


def substitute_result(result: TransportResult,
                      mapping: Mapping[str, GrassmannNumber],
                      new_algebra: GeneratorSet) -> SuperMatrix:
    ent = [[gn.substitute(mapping, target=new_algebra) if mapping
            else new_algebra.zero() + gn for gn in row]
           for row in result.g.entries]
    return SuperMatrix(result.g.dims, ent, new_algebra)


# -- gauge transformations ------------------------------------------------------

def matrix_of_connection(A: LieValuedForm,
                         realization: Mapping[str, Sequence[Sequence[object]]],
                         dims: Tuple[int, int]) -> List[List[SuperForm]]:
    n = dims[0] + dims[1]
    out = [[SuperForm.zero(A.chart) for _ in range(n)] for _ in range(n)]
    for label, comp in A.components.items():
        grid = realization[label]
        for i in range(n):
            for j in range(n):
                c = grid[i][j]
                if not scalars.is_zero(c):
                    out[i][j] = out[i][j] + comp * c
    return out


def connection_of_matrix(M: List[List[SuperForm]], algebra,
                         realization: Mapping[str, Sequence[Sequence[object]]],
                         chart: Chart, dims: Tuple[int, int],
                         tol: float = 0.0) -> LieValuedForm:
    """Decompose a matrix of forms in the span of the realization matrices."""
    labels = list(algebra.labels)
    n = len(M)
    positions = [(i, j) for i in range(n) for j in range(n)]
    cols = {l: [realization[l][i][j] if isinstance(realization[l][i][j], scalars.QI)
                else scalars.QI(0) + realization[l][i][j]
                for (i, j) in positions]
            for l in labels}
    comps: Dict[str, SuperForm] = {}
    words = set()
    for row in M:
        for f in row:
            words.update(f.terms.keys())
    for w in words:
        target = [M[i][j].terms.get(w) for (i, j) in positions]
        coeffs = _solve_span_values(cols, labels, target, chart)
        for l, val in coeffs.items():
            if val.is_zero():
                continue
            term = SuperForm(chart, {w: val})
            comps[l] = comps[l] + term if l in comps else term
    out = LieValuedForm(algebra, comps, chart)
    back = matrix_of_connection(out, realization, dims)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            worst = max(worst, (back[i][j] - M[i][j]).max_abs())
    if worst > tol:
        raise DimensionError(
            f"matrix form is not in the algebra span (residual {worst})")
    return out


def _solve_span_values(cols, labels, target, chart: Chart):
    """Solve sum_l c_l (superfield) * col_l (scalars) = target (superfields).

    Gauss-Jordan with scalar pivots and superfield right-hand sides; the
    pivot rows hold the solutions once elimination has finished.  Residual
    rows are checked by the caller via exact reassembly.
    """
    m = len(labels)
    npos = len(target)
    A = [[cols[l][p] for l in labels] for p in range(npos)]
    rhs = [t if t is not None else chart.zero_field() for t in target]
    pivots: Dict[int, int] = {}
    used = set()
    for li in range(m):
        piv = None
        for r in range(npos):
            if r not in used and A[r][li]:
                piv = r
                break
        if piv is None:
            continue
        used.add(piv)
        pivots[li] = piv
        d = A[piv][li]
        A[piv] = [v / d for v in A[piv]]
        rhs[piv] = rhs[piv] * scalars.simplify(scalars.QI(1) / d)
        for r in range(npos):
            if r == piv:
                continue
            f = A[r][li]
            if not f:
                continue
            A[r] = [a - f * b for a, b in zip(A[r], A[piv])]
            rhs[r] = rhs[r] - rhs[piv] * scalars.simplify(f)
    coeffs = {l: chart.zero_field() for l in labels}
    for li, piv in pivots.items():
        coeffs[labels[li]] = rhs[piv]
    return coeffs


def sf_matrix_inv(M: List[List[Superfield]], chart: Chart,
                  max_iter: int = 60) -> List[List[Superfield]]:
    """Inverse of a superfield matrix with invertible constant body."""
    from .forms import _sf_mat_mul
    from .supermatrix import _invert_scalar_matrix
    n = len(M)
    zero = scalars.coerce(0, chart.backend)
    E0 = []
    for row in M:
        r0 = []
        for f in row:
            c = f.terms.get((0,) * len(chart.even))
            r0.append(c.body() if c is not None else zero)
        E0.append(r0)
    E0inv = [[chart.scalar_field(c) for c in row]
             for row in _invert_scalar_matrix(E0, chart.backend)]
    K = _sf_mat_mul(E0inv, M)
    for i in range(n):
        K[i][i] = K[i][i] - 1
    out = [row[:] for row in E0inv]
    power = [row[:] for row in E0inv]
    for _ in range(max_iter):
        power = _sf_mat_mul([[-k for k in row] for row in K], power)
        if all(f.is_zero() for row in power for f in row):
            break
        out = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(out, power)]
    else:
        raise DimensionError("superfield matrix inverse did not terminate")
    return out


def gauge_transform(A: LieValuedForm,
                    sigma_f: List[List[Superfield]],
                    realization: Mapping[str, Sequence[Sequence[object]]],
                    dims: Tuple[int, int]) -> LieValuedForm:
    """f^* A = Ad_{sigma_f^{-1}} A + sigma_f^* theta_MC = s^{-1} A s + s^{-1} ds."""
    ch = A.chart
    n = dims[0] + dims[1]
    Amat = matrix_of_connection(A, realization, dims)
    sinv = sf_matrix_inv(sigma_f, ch)
    sinv_f = [[SuperForm.from_superfield(f) for f in row] for row in sinv]
    s_f = [[SuperForm.from_superfield(f) for f in row] for row in sigma_f]
    ds = [[SuperForm.from_superfield(f).d() for f in row] for row in sigma_f]

    def wmul(X, Y):
        out = [[SuperForm.zero(ch) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for k in range(n):
                if X[i][k].is_zero():
                    continue
                for j in range(n):
                    if not Y[k][j].is_zero():
                        out[i][j] = out[i][j] + X[i][k].wedge(Y[k][j])
        return out

    new = wmul(wmul(sinv_f, Amat), s_f)
    mc = wmul(sinv_f, ds)
    tot = [[new[i][j] + mc[i][j] for j in range(n)] for i in range(n)]
    return connection_of_matrix(tot, A.algebra, realization, ch, dims)


def evaluate_sf_matrix(M: List[List[Superfield]],
                       even_args: Mapping[str, object],
                       odd_args: Mapping[str, GrassmannNumber],
                       algebra: GeneratorSet, dims) -> SuperMatrix:
    ent = [[algebra.zero() + f.eval(even_args, odd_args) for f in row]
           for row in M]
    return SuperMatrix(dims, ent, algebra)


# -- odd flows ------------------------------------------------------------------

class OddFlow:
    """Two-parameter flow of an odd vector field: pullbacks on coordinates.

    phi* = (1 + theta X) o exp(t X o X); the coordinate images live on the
    chart extended by the super-time pair (t, theta).
    """

    def __init__(self, X: VectorFieldExpr, tname: str = "flow_t",
                 thname: str = "flow_th", order_cap: int = 24):
        base = X.chart
        if X.parity() != 1:
            raise ParityError("odd flow needs an odd vector field")
        self.base = base
        self.tname, self.thname = tname, thname
        ext = Chart(even=(tname,) + base.even, odd=(thname,) + base.odd,
                    algebra=_extended_algebra(base, thname),
                    backend=base.backend)
        self.ext = ext
        self.X = X
        self.images: Dict[str, Superfield] = {}
        t = ext.var(tname)
        th = ext.var(thname)
        for u in base.coords:
            f = base.var(u)
            # exp(t X^2) u as a terminating series
            acc = _rehome(f, ext)
            term = f
            k = 0
            coef = Fraction(1)
            while True:
                k += 1
                term = X.apply(X.apply(term))
                if term.is_zero():
                    break
                if k > order_cap:
                    raise ParityError("flow series did not terminate on the chart")
                coef = coef / k
                acc = acc + _rehome(term, ext) * (coef * _tpow(t, k))
            # prepend (1 + theta X)
            self.images[u] = acc + th * self._apply_x_ext(acc)

    def _apply_x_ext(self, f_ext: Superfield) -> Superfield:
        """Apply the base vector field to an extended-chart superfield."""
        out = self.ext.zero_field()
        for name, comp in self.X.components.items():
            df = (f_ext.dx(name) if name in self.ext.even
                  else f_ext.dtheta(name))
            if not df.is_zero():
                out = out + _rehome(comp, self.ext) * df
        return out

    def pullback(self, f: Superfield) -> Superfield:
        """phi^*(f) on the extended chart."""
        ev = {u: self.images[u] for u in self.base.even}
        od = {u: self.images[u] for u in self.base.odd}
        return f.subs(ev, od, chart=self.ext)

    def defining_residual(self) -> float:
        """Max residual of D(phi^* u) - phi^*(X u) over the coordinates."""
        worst = 0.0
        th = self.ext.var(self.thname)
        for u in self.base.coords:
            img = self.images[u]
            D = img.dtheta(self.thname) + th * img.dx(self.tname)
            rhs = self.pullback(self.X.apply(self.base.var(u)))
            worst = max(worst, (D - rhs).max_abs())
        return worst

    def apply_point(self, t, theta: GrassmannNumber,
                    point: Mapping[str, GrassmannNumber]) -> Dict[str, GrassmannNumber]:
        alg = theta.algebra
        ev = {self.tname: alg.scalar(t) if not isinstance(t, GrassmannNumber) else t}
        for u in self.base.even:
            ev[u] = point[u]
        od = {self.thname: theta}
        for u in self.base.odd:
            od[u] = point[u]
        return {u: self.images[u].eval(ev, od) for u in self.base.coords}


def _tpow(t: Superfield, k: int) -> Superfield:
    return t ** k


def _extended_algebra(base: Chart, thname: str) -> GeneratorSet:
    from .grassmann import COORDINATE
    names = (thname,) + base.algebra.names
    tags = (COORDINATE,) + base.algebra.tags
    return GeneratorSet(names, tags, backend=base.backend,
                        max_generators=max(16, len(names)))


def _rehome(f: Superfield, ext: Chart) -> Superfield:
    """Re-express a base-chart superfield on the extended chart."""
    ev = {n: ext.var(n) for n in f.chart.even}
    od = {n: ext.var(n) for n in f.chart.odd}
    return f.subs(ev, od, chart=ext)


def _rehome_comp(f: Superfield, ext: Chart) -> Superfield:
    return _rehome(f, ext)


def compose_flow_images(flow: OddFlow, second_time=("s2_t", "s2_th")):
    """Images of phi_{(t,th)} o phi_{(s,et)} and of phi at the composed time.

    Returns (composed, direct) superfield dicts on a two-time chart; the
    two agree exactly by the flow composition law.
    """
    sname, etname = second_time
    base = flow.base
    ext2 = Chart(
        even=(flow.tname, sname) + base.even,
        odd=(flow.thname, etname) + base.odd,
        algebra=_ext2_algebra(flow, etname),
        backend=base.backend)
    # phi_{(s,et)} images on ext2
    sub_time = {flow.tname: ext2.var(sname), flow.thname: ext2.var(etname)}
    first = {u: _img_on(flow, u, ext2, sub_time) for u in base.coords}
    # compose: phi_{(t,th)}* then substitute coordinates by first-step images
    composed = {}
    for u in base.coords:
        img = _img_on(flow, u, ext2, {})
        ev = {n: first[n] for n in base.even}
        od = {n: first[n] for n in base.odd}
        composed[u] = img.subs(ev, od, chart=ext2)
    # direct: phi at (t + s + th*et, th + et)
    t2 = ext2.var(flow.tname) + ext2.var(sname) + \
        ext2.var(flow.thname) * ext2.var(etname)
    th2 = ext2.var(flow.thname) + ext2.var(etname)
    direct = {}
    for u in base.coords:
        img = _img_on(flow, u, ext2, {})
        direct[u] = img.subs({flow.tname: t2}, {flow.thname: th2}, chart=ext2)
    return composed, direct


def _ext2_algebra(flow: OddFlow, etname: str) -> GeneratorSet:
    from .grassmann import COORDINATE
    names = (flow.thname, etname) + flow.base.algebra.names
    tags = (COORDINATE, COORDINATE) + flow.base.algebra.tags
    return GeneratorSet(names, tags, backend=flow.base.backend,
                        max_generators=max(16, len(names)))


def _img_on(flow: OddFlow, u: str, ext2: Chart,
            time_sub: Mapping[str, Superfield]) -> Superfield:
    img = flow.images[u]
    ev = {n: ext2.var(n) for n in img.chart.even}
    od = {n: ext2.var(n) for n in img.chart.odd}
    for k, v in time_sub.items():
        if k in ev:
            ev[k] = v
        else:
            od[k] = v
    return img.subs(ev, od, chart=ext2)


# -- super-time transport -----------------------------------------------------------

def transport_super_time(a0: Callable[[float], SuperMatrix],
                         a1: Callable[[float], SuperMatrix],
                         dims: Tuple[int, int], algebra: GeneratorSet,
                         steps: int = 1000) -> dict:
    """Solve D g = -(a0(t) + theta a1(t)) g with g(0,0) = 1.

    Writing g = g0(t) + theta g1(t) the equation reduces to
    g1 = -a0 g0 and g0' = -(a1 + a0^2) g0; the even system is integrated
    with RK4 and both components are returned along with samples.
    """
    g0 = SuperMatrix.identity(dims, algebra)
    h = 1.0 / steps

    def rhs(t, g):
        m0 = a0(t)
        return -((a1(t) + m0 @ m0) @ g)

    samples = [(0.0, g0)]
    for k in range(steps):
        t0 = k * h
        k1 = rhs(t0, g0)
        k2 = rhs(t0 + h / 2, g0 + k1 * (h / 2))
        k3 = rhs(t0 + h / 2, g0 + k2 * (h / 2))
        k4 = rhs(t0 + h, g0 + k3 * h)
        g0 = g0 + (k1 + k2 * 2 + k3 * 2 + k4) * (h / 6)
        samples.append((t0 + h, g0))
    g1_final = -(a0(1.0) @ g0)
    return {"g0": g0, "g1": g1_final, "samples": samples}


def super_time_residual(a0, a1, sol: dict, algebra: GeneratorSet) -> float:
    """Defining-equation residual at sampled interior times.

    Checks g1 + a0 g0 = 0 exactly and g0' + (a1 + a0^2) g0 = 0 with a
    five-point finite-difference derivative of the stored trajectory.
    """
    samples = sol["samples"]
    n = len(samples) - 1
    h = 1.0 / n
    worst = 0.0
    for idx in range(2, n - 2, max(1, n // 7)):
        t, g0 = samples[idx]
        m0 = a0(t)
        g1 = -(m0 @ g0)
        worst = max(worst, (g1 + m0 @ g0).max_abs())
        d = (samples[idx - 2][1] - samples[idx + 2][1]) * (1.0 / (12 * h)) + \
            (samples[idx + 1][1] - samples[idx - 1][1]) * (8.0 / (12 * h))
        res = d + (a1(t) + m0 @ m0) @ g0
        worst = max(worst, res.max_abs())
    return worst
