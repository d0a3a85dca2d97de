"""Determining-pair analysis over inverse-limit truncations.

Core question: given a finite-dimensional slice of an inverse limit,
presented by a SubspaceGenerator, can two elements look identical through
the first N stages (while carrying most of their norm in those stages)
and still be far apart at a deeper evaluation stage M?  A pair witnessing
this is a *counterexample*; its absence, established over a certified
grid, is a *certificate* that the truncated slice is eps-determining.

All verdicts use the stage-M norm as the operative norm.  The stage-M
norm is a rigorous lower bound of the limit norm, so every certificate
explicitly covers the truncated pair only; counterexamples re-verify in
exact rational arithmetic.

The module also provides sequence diagnostics (uniformity of the stage
norm convergence versus convergence of norms to the stagewise limit), a
three-term decomposition witnessing their agreement, and the
quotient-restriction check for generated subspaces together with the
rescaled-image construction that forces restrictions to be quotient maps.
"""

import math
import random as _random
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linmap import is_quotient_map, linear_map
from .scalar import ONE, Q, ZERO, rationalize, sqrt_bracket, to_float
from .simplex import OPTIMAL, LinearProgram
from .space import (NormedSpace, ball_extreme_points, dual_space,
                    hpoly_space, norm_eval, norm_eval_sq, vpoly_space)
from .systems import (CompatibleVector, InverseSystem, SubspaceGenerator,
                      invlim_convergence, linf_drop_system, project)


# ---------------------------------------------------------------------------
# Query types

@dataclass(frozen=True)
class RhoSchedule:
    """Positive nonincreasing stage slacks 1 >= rho_1 >= ... >= rho_N > 0."""

    values: tuple

    def __post_init__(self):
        vals = tuple(Q(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("empty schedule")
        if any(v <= 0 or v > 1 for v in vals):
            raise ValueError("schedule values must lie in (0, 1]")
        if any(vals[k] < vals[k + 1] for k in range(len(vals) - 1)):
            raise ValueError("schedule must be nonincreasing")

    @property
    def length(self):
        return len(self.values)


@dataclass(frozen=True)
class SearchConfig:
    starts: int = 16
    iters: int = 300
    seed: int = 0
    max_den: int = 10**6


@dataclass(frozen=True)
class CertifyConfig:
    delta: object = Q(1, 20)
    refine_rounds: int = 3
    dim_cap: int = 4
    # Abstract work units (grid cells; exact pair verifications weigh
    # _VERIFY_COST each).  Near-boundary instances can otherwise cascade
    # into unbounded refinement; exhausting the budget yields "undecided".
    budget: int = 3 * 10**6


_VERIFY_COST = 1000


@dataclass(frozen=True)
class DeterminingQuery:
    system: InverseSystem
    gen: SubspaceGenerator
    rho: RhoSchedule
    eps: object
    eval_stage: int
    search: SearchConfig = field(default_factory=SearchConfig)
    certify: CertifyConfig = field(default_factory=CertifyConfig)

    def __post_init__(self):
        object.__setattr__(self, "eps", Q(self.eps))
        if self.gen.system is not self.system:
            raise ValueError("generator belongs to a different system")
        if not self.rho.length <= self.eval_stage <= self.gen.top_stage:
            raise ValueError("need N <= eval_stage <= generator top stage")
        if not 0 < self.eps <= 2:
            raise ValueError("eps must lie in (0, 2]")


# ---------------------------------------------------------------------------
# Exact pair verification

def _norm_bracket(space, x):
    """Certified rational bracket (lo, hi) of the norm; exact for
    polytopal norms, a tight sqrt bracket for euclidean ones."""
    if space.spec.kind == "lp" and space.spec.p == "2":
        return sqrt_bracket(norm_eval_sq(space, x))
    n = norm_eval(space, x)
    return (n, n)


@dataclass(frozen=True)
class Counterexample:
    """A violating pair.  All slack fields are certified lower bounds:
    positive tail_slacks certify the strict stage constraints
    ||v||_M - ||pi_i(v)|| < rho_i ||v||_M; a positive proximity_slack
    certifies ||pi_N(v - v')|| < max(||v||_M, ||v'||_M) / N; violation is
    a lower bound of ||v - v'||_M / max(||v||_M, ||v'||_M) >= eps."""

    a: tuple
    a_prime: tuple
    v: tuple
    v_prime: tuple
    tail_slacks: tuple
    proximity_slack: object
    violation: object


def verify_pair(q: DeterminingQuery, a, a_prime):
    """Exact re-check of a candidate pair against the strict constraints
    and the separation threshold (stage-M operative norm).  The check is
    scale invariant, so no normalization of (a, a') is required.  Ties
    count as failures; returns a Counterexample or None."""
    gen, M, N = q.gen, q.eval_stage, q.rho.length
    a = linalg.vec(a)
    ap = linalg.vec(a_prime)
    top = q.system.stage(M)
    vs, brs = [], []
    for x in (a, ap):
        v = linalg.mat_vec(gen.matrix(M), x)
        vs.append(v)
        brs.append(_norm_bracket(top, v))
    if brs[0][1] == 0 or brs[1][1] == 0:
        return None
    tail_slacks = []
    for i in range(1, N + 1):
        rho_i = q.rho.values[i - 1]
        row = []
        for x, (_, nhi) in zip((a, ap), brs):
            pi = _norm_bracket(q.system.stage(i),
                               linalg.mat_vec(gen.matrix(i), x))
            slack = pi[0] - (ONE - rho_i) * nhi
            if slack <= 0:
                return None
            row.append(slack)
        tail_slacks.append(tuple(row))
    mx = (max(brs[0][0], brs[1][0]), max(brs[0][1], brs[1][1]))
    diff = linalg.vec_sub(a, ap)
    d_n = _norm_bracket(q.system.stage(N), linalg.mat_vec(gen.matrix(N), diff))
    prox = mx[0] / N - d_n[1]
    if prox <= 0:
        return None
    d_m = _norm_bracket(top, linalg.mat_vec(gen.matrix(M), diff))
    if d_m[0] < q.eps * mx[1]:
        return None
    return Counterexample(tuple(a), tuple(ap), tuple(vs[0]), tuple(vs[1]),
                          tuple(tail_slacks), prox, d_m[0] / mx[1])


# ---------------------------------------------------------------------------
# Fast float evaluation

def _float_norm_fn(space: NormedSpace):
    spec = space.spec
    if spec.kind == "lp":
        w = np.array([to_float(x) for x in spec.weights])
        if spec.p == "1":
            return lambda Y: np.abs(Y * w).sum(axis=-1)
        if spec.p == "inf":
            return lambda Y: np.abs(Y * w).max(axis=-1)
        return lambda Y: np.sqrt(((Y * w) ** 2).sum(axis=-1))
    if spec.kind == "hpoly":
        A = np.array([[to_float(c) for c in row] for row in spec.functionals])
        return lambda Y: np.abs(Y @ A.T).max(axis=-1)
    D = np.array([[to_float(c) for c in v]
                  for v in ball_extreme_points(dual_space(space))])
    return lambda Y: np.abs(Y @ D.T).max(axis=-1)


class _FloatQuery:
    """Float shadow of a query: stage matrices and norm evaluators for
    stages 1..N and M, plus the normalized violation margin."""

    def __init__(self, q: DeterminingQuery):
        self.N = q.rho.length
        self.M = q.eval_stage
        self.d = q.gen.param_dim
        self.rho = [to_float(r) for r in q.rho.values]
        self.eps = to_float(q.eps)
        self.stages = list(range(1, self.N + 1)) + [self.M]
        self.G = {i: np.array([[to_float(c) for c in row]
                               for row in q.gen.matrix(i)])
                  for i in self.stages}
        self.norm = {i: _float_norm_fn(q.system.stage(i))
                     for i in self.stages}

    def margin(self, a, b):
        """min over all constraint slacks and the separation term after
        scaling max(nu(a), nu(b)) to 1; > 0 flags a violating pair."""
        va = {i: self.G[i] @ a for i in self.stages}
        vb = {i: self.G[i] @ b for i in self.stages}
        nu_a = float(self.norm[self.M](va[self.M]))
        nu_b = float(self.norm[self.M](vb[self.M]))
        s = max(nu_a, nu_b)
        if s < 1e-12:
            return -1.0
        terms = []
        for i in range(1, self.N + 1):
            r = self.rho[i - 1]
            terms.append((float(self.norm[i](va[i])) - (1 - r) * nu_a) / s)
            terms.append((float(self.norm[i](vb[i])) - (1 - r) * nu_b) / s)
        terms.append((s / self.N
                      - float(self.norm[self.N](va[self.N] - vb[self.N]))) / s)
        terms.append((float(self.norm[self.M](va[self.M] - vb[self.M]))
                      - self.eps * s) / s)
        return min(terms)


# ---------------------------------------------------------------------------
# Incomplete search (sound counterexamples, no certified absence)

@dataclass(frozen=True)
class SearchReport:
    kind: str                   # "counterexample" | "not-found"
    counterexample: object
    best_margin: float
    best_pair: tuple
    starts: int
    evaluations: int


def eps_determining_search(q: DeterminingQuery) -> SearchReport:
    """Multistart pattern search for a violating pair, maximizing the
    normalized margin.  Returned counterexamples are exactly re-verified;
    a not-found report carries the best near-miss and certifies nothing."""
    fq = _FloatQuery(q)
    d = fq.d
    rng = _random.Random(q.search.seed)
    starts = []
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            for sgn in (1.0, -1.0):
                s = np.zeros(2 * d)
                s[i] = 1.0
                s[d + j] = sgn
                starts.append(s)
    for _ in range(q.search.starts):
        starts.append(np.array([rng.gauss(0, 1) for _ in range(2 * d)]))

    evals = 0
    best_f, best_x = -math.inf, None
    candidates = []
    for s0 in starts:
        x = s0 / (np.abs(s0).max() or 1.0)
        f = fq.margin(x[:d], x[d:])
        evals += 1
        step = 0.5
        iters = 0
        while step > 1e-5 and iters < q.search.iters:
            moved = False
            for k in range(2 * d):
                for sgn in (1.0, -1.0):
                    y = x.copy()
                    y[k] += sgn * step
                    m = np.abs(y).max()
                    if m > 0:
                        y /= m
                    fy = fq.margin(y[:d], y[d:])
                    evals += 1
                    if fy > f:
                        x, f = y, fy
                        moved = True
            if not moved:
                step *= 0.5
            iters += 1
        if f > best_f:
            best_f, best_x = f, x.copy()
        if f > 1e-9:
            candidates.append((f, x.copy()))

    candidates.sort(key=lambda t: -t[0])
    best_ce, best_ce_pair, best_ce_f = None, None, -math.inf
    for f, x in candidates[:10]:
        for den in (10**3, q.search.max_den):
            a = tuple(rationalize(float(v), den) for v in x[:d])
            b = tuple(rationalize(float(v), den) for v in x[d:])
            ce = verify_pair(q, a, b)
            if ce is not None and (best_ce is None
                                   or ce.violation > best_ce.violation):
                best_ce, best_ce_pair, best_ce_f = ce, (a, b), f
    if best_ce is not None:
        return SearchReport("counterexample", best_ce, best_ce_f,
                            best_ce_pair, len(starts), evals)
    pair = None
    if best_x is not None:
        pair = (tuple(rationalize(float(v), q.search.max_den)
                      for v in best_x[:d]),
                tuple(rationalize(float(v), q.search.max_den)
                      for v in best_x[d:]))
    return SearchReport("not-found", None, best_f, pair, len(starts), evals)


# ---------------------------------------------------------------------------
# Certified grid check

def parameter_space(gen: SubspaceGenerator, stage: int) -> NormedSpace:
    """Pull the stage norm back to parameter space through g_stage
    (requires an injective presentation at that stage)."""
    G = gen.matrix(stage)
    d = gen.param_dim
    if linalg.rank(G) != d:
        raise ValueError("generator not injective at the requested stage")
    spec = gen.system.stage(stage).spec
    if spec.kind == "hpoly":
        return hpoly_space(linalg.mat_mul(spec.functionals, G))
    if spec.kind == "lp" and spec.p == "inf":
        rows = [linalg.vec_scale(w, row)
                for w, row in zip(spec.weights, G)]
        return hpoly_space(rows)
    if spec.kind == "lp" and spec.p == "1":
        nz = [linalg.vec_scale(w, row)
              for w, row in zip(spec.weights, G) if any(c != 0 for c in row)]
        if 2 ** (len(nz) - 1) > 4096:
            raise ValueError("too many sign patterns to pull back this norm")
        rows = [list(nz[0])]
        for r in nz[1:]:
            rows = ([linalg.vec_add(row, r) for row in rows]
                    + [linalg.vec_sub(row, r) for row in rows])
        return hpoly_space(rows)
    if spec.kind == "vpoly" and len(G) == d:
        Ginv = linalg.inverse(G)
        return vpoly_space([linalg.mat_vec(Ginv, v) for v in spec.vertices])
    raise ValueError(
        f"cannot pull a {spec.kind} norm back to parameter space")


def _min_on_cube_sphere(space: NormedSpace):
    """Exact minimum of the norm over the l-inf unit sphere via one LP
    per cube face (x_face = 1 suffices by symmetry)."""
    spec = space.spec
    d = space.dim
    best = None
    for face in range(d):
        lp = LinearProgram()
        xs = [lp.var(free=True) for _ in range(d)]
        for k, h in enumerate(xs):
            if k == face:
                lp.add_eq({h: ONE}, ONE)
            else:
                lp.add_le({h: ONE}, ONE)
                lp.add_ge({h: ONE}, -ONE)
        if spec.kind == "hpoly":
            t = lp.var()
            for phi in spec.functionals:
                for sgn in (ONE, -ONE):
                    coeffs = {xs[k]: -sgn * c for k, c in enumerate(phi)}
                    coeffs[t] = coeffs.get(t, ZERO) + ONE
                    lp.add_ge(coeffs, ZERO)
            lp.minimize({t: ONE})
        elif spec.kind == "vpoly":
            lams = [(lp.var(), lp.var()) for _ in spec.vertices]
            for c in range(d):
                coeffs = {xs[c]: -ONE}
                for (lp_pos, lp_neg), v in zip(lams, spec.vertices):
                    coeffs[lp_pos] = coeffs.get(lp_pos, ZERO) + v[c]
                    coeffs[lp_neg] = coeffs.get(lp_neg, ZERO) - v[c]
                lp.add_eq(coeffs, ZERO)
            lp.minimize({h: ONE for pair in lams for h in pair})
        elif spec.kind == "lp" and spec.p == "1":
            us = [lp.var() for _ in range(d)]
            for k, (u, w) in enumerate(zip(us, spec.weights)):
                lp.add_ge({u: ONE, xs[k]: -w}, ZERO)
                lp.add_ge({u: ONE, xs[k]: w}, ZERO)
            lp.minimize({u: ONE for u in us})
        elif spec.kind == "lp" and spec.p == "inf":
            t = lp.var()
            for k, w in enumerate(spec.weights):
                lp.add_ge({t: ONE, xs[k]: -w}, ZERO)
                lp.add_ge({t: ONE, xs[k]: w}, ZERO)
            lp.minimize({t: ONE})
        else:
            raise ValueError("no exact face minimum for this norm kind")
        status, _, value = lp.solve()
        if status != OPTIMAL:
            raise ValueError("face minimization LP failed")
        if best is None or value < best:
            best = value
    return best


@dataclass(frozen=True)
class CertifyReport:
    kind: str                   # "certificate" | "counterexample" | "undecided"
    statement: str
    eval_stage: int
    eps: object
    delta: object
    margin: object              # Lipschitz exclusion margin tau of the grid
    counterexample: object = None
    straddle: tuple = None
    points_checked: int = 0
    refinements: int = 0


def _grid_vals(h):
    n = max(1, math.ceil(2 / float(h)))
    return [Q(2 * k, n) - 1 for k in range(n + 1)], Q(2, n)


def _cube_points(d, face, h):
    """Grid points on the cube face x_face = 1 with step <= h."""
    vals, step = _grid_vals(h)
    pts = [()]
    for k in range(d):
        if k == face:
            pts = [p + (ONE,) for p in pts]
        else:
            pts = [p + (v,) for p in pts for v in vals]
    return pts, step


def eps_determining_certify(q: DeterminingQuery) -> CertifyReport:
    """Certified grid check of the eps-determining property for the
    stage-M truncated pair.

    Parametrization: the constraints are jointly scale invariant and
    symmetric in the pair, so every violating pair can be written as
    (a, t*u) with a, u on the unit sphere of the pulled-back parameter
    norm and t in [0, 1].  The per-vector tail constraints are themselves
    scale invariant, so they enter as t-independent direction slacks; the
    proximity and separation terms are 1-Lipschitz in (a, u, t).  Spheres
    are covered by radially projected cube-face grids, and a conservative
    Lipschitz constant converts the grid step into an exclusion margin
    tau: all grid margins <= -tau certify absence of a violating pair.
    Grid points straddling (-tau, 0] are refined locally; refinement
    either clears them, produces an exactly verified Counterexample, or
    reports undecided."""
    d = q.gen.param_dim
    if d > q.certify.dim_cap:
        raise ValueError(f"parameter dimension {d} above certification cap")
    nu = parameter_space(q.gen, q.eval_stage)

    # Norm equivalence constants against the parameter cube.
    sign_vecs = [()]
    for _ in range(d - 1):
        sign_vecs = [s + (v,) for s in sign_vecs for v in (ONE, -ONE)]
    c_max = max(norm_eval(nu, (ONE,) + s) for s in sign_vecs)
    c_min = _min_on_cube_sphere(nu)
    l_rad = 2 * c_max / c_min          # radial projection, cube -> nu sphere
    fq = _FloatQuery(q)

    def proj(x):
        n = norm_eval(nu, x)
        return tuple(c / n for c in x)

    def dir_slack_float(x):
        """Float tail slack of a unit-sphere point (1-Lipschitz on the
        sphere in the nu metric)."""
        fx = np.array([to_float(c) for c in x])
        return min(float(fq.norm[i](fq.G[i] @ fx)) - (1 - fq.rho[i - 1])
                   for i in range(1, fq.N + 1))

    h0 = Q(q.certify.delta)
    # a ranges over half the sphere faces (joint negation symmetry),
    # u over all of them.
    a_nodes, u_nodes = [], []          # (exact point, face, sign, cube pt)
    step_a = None
    for face in range(d):
        pts, step_a = _cube_points(d, face, h0)
        for p in pts:
            a_nodes.append((proj(p), face, ONE, p))
        for sgn in (ONE, -ONE):
            for p in pts:
                sp = tuple(sgn * c for c in p)
                u_nodes.append((proj(sp), face, sgn, sp))
    n_lev = max(1, math.ceil(1 / float(h0)))
    step_t = Q(1, n_lev)
    t_vals = [Q(k, n_lev) for k in range(n_lev + 1)]

    # Per-term exclusion margins: the tail slack of a sphere point is
    # 1-Lipschitz on the sphere (covering radius l_rad*h/2); the pair
    # terms are 1-Lipschitz in (a, u, t) with summed covering radii.
    def margins(h, ht):
        tau_s = to_float(l_rad * h / 2) + 1e-9
        tau_p = to_float(l_rad * h + ht / 2) + 1e-9
        return tau_s, tau_p

    tau_s0, tau_p0 = margins(step_a, step_t)

    SA = np.array([[to_float(c) for c in s[0]] for s in a_nodes])
    SU = np.array([[to_float(c) for c in s[0]] for s in u_nodes])
    T = np.array([to_float(t) for t in t_vals])
    VA = {i: SA @ fq.G[i].T for i in fq.stages}
    VU = {i: SU @ fq.G[i].T for i in fq.stages}
    slack_a = np.full(len(a_nodes), np.inf)
    slack_u = np.full(len(u_nodes), np.inf)
    for i in range(1, fq.N + 1):
        r = 1 - fq.rho[i - 1]
        slack_a = np.minimum(slack_a, fq.norm[i](VA[i]) - r)
        slack_u = np.minimum(slack_u, fq.norm[i](VU[i]) - r)
    checked = len(a_nodes) * len(u_nodes) * len(t_vals)
    filt_u = np.where(slack_u > -tau_s0)[0]

    suspects = []
    if filt_u.size:
        un = VU[fq.N][filt_u]          # (n_u, dim_N)
        um = VU[fq.M][filt_u]
        for ia in np.where(slack_a > -tau_s0)[0]:
            dn = VA[fq.N][ia][None, None, :] - T[None, :, None] * \
                un[:, None, :]
            prox = 1 / fq.N - fq.norm[fq.N](dn)
            dm = VA[fq.M][ia][None, None, :] - T[None, :, None] * \
                um[:, None, :]
            sep = fq.norm[fq.M](dm) - fq.eps
            ok = (prox > -tau_p0) & (sep > -tau_p0)
            g = np.minimum(np.minimum(prox, sep),
                           np.minimum(slack_a[ia], slack_u[filt_u])[:, None])
            for iu, it in zip(*np.where(ok)):
                suspects.append((float(g[iu, it]), int(ia),
                                 int(filt_u[iu]), int(it)))

    refinements = 0
    work = checked

    def pair_terms(fa, fb):
        prox = 1 / fq.N - float(fq.norm[fq.N](fq.G[fq.N] @ (fa - fb)))
        sep = float(fq.norm[fq.M](fq.G[fq.M] @ (fa - fb))) - fq.eps
        return prox, sep

    def try_verify(a_pt, u_pt, t):
        nonlocal work
        work += _VERIFY_COST
        if t == 0:
            t = step_t / Q(4 ** (q.certify.refine_rounds + 1))
        return verify_pair(q, a_pt, tuple(t * c for c in u_pt))

    def refine(fa_a, pa, fa_u, sgn_u, pu, t, h, ht, depth):
        """Cover the cube cells around a suspect triple at step h/4."""
        nonlocal checked, refinements, work
        if work > q.certify.budget:
            return "budget", None
        refinements += 1
        h4, ht4 = h / 4, ht / 4
        tau_s, tau_p = margins(h4, ht4)

        def local_vals(center, half, quarter, lo, hi):
            return sorted({min(max(center - half + k * quarter, lo), hi)
                           for k in range(5)})

        def local_face(face, sgn, p):
            pts = [()]
            for k in range(d):
                if k == face:
                    pts = [pt + (sgn,) for pt in pts]
                else:
                    pts = [pt + (v,) for pt in pts
                           for v in local_vals(p[k], h / 2, h4, -ONE, ONE)]
            return pts

        cand_a = []
        for cpa in local_face(fa_a, ONE, pa):
            ea = proj(cpa)
            if dir_slack_float(ea) > -tau_s:
                cand_a.append((cpa, ea, np.array([to_float(c) for c in ea])))
        cand_u = []
        for cpu in local_face(fa_u, sgn_u, pu):
            eu = proj(cpu)
            if dir_slack_float(eu) > -tau_s:
                cand_u.append((cpu, eu, np.array([to_float(c) for c in eu])))
        ts = local_vals(t, ht / 2, ht4, ZERO, ONE)
        checked += len(cand_a) * len(cand_u) * len(ts)
        work += len(cand_a) * len(cand_u) * len(ts)
        worst = None
        for cpa, ea, fa in cand_a:
            for cpu, eu, fu in cand_u:
                for tv in ts:
                    prox, sep = pair_terms(fa, float(to_float(tv)) * fu)
                    if prox <= -tau_p or sep <= -tau_p:
                        continue
                    ce = try_verify(ea, eu, tv)
                    if ce is not None:
                        return "ce", ce
                    if depth > 0:
                        sub = refine(fa_a, cpa, fa_u, sgn_u, cpu,
                                     tv, h4, ht4, depth - 1)
                        if sub[0] != "ok":
                            return sub
                    else:
                        worst = (ea, eu, tv, min(prox, sep))
        if worst is not None:
            return "undecided", worst
        return "ok", None

    def _ce_report(ce):
        return CertifyReport(
            "counterexample",
            "violating pair found and exactly re-verified "
            f"(stage-{q.eval_stage} operative norm)",
            q.eval_stage, q.eps, h0, l_rad * step_a + step_t / 2,
            counterexample=ce,
            points_checked=checked, refinements=refinements)

    suspects.sort(key=lambda s: -s[0])
    straddle = None
    exhausted = False
    for _, ia, iu, it in suspects:
        if work > q.certify.budget:
            exhausted = True
            break
        a_pt, u_pt = a_nodes[ia][0], u_nodes[iu][0]
        ce = try_verify(a_pt, u_pt, t_vals[it])
        if ce is not None:
            return _ce_report(ce)
        kind, payload = refine(a_nodes[ia][1], a_nodes[ia][3],
                               u_nodes[iu][1], u_nodes[iu][2],
                               u_nodes[iu][3], t_vals[it],
                               step_a, step_t, q.certify.refine_rounds)
        if kind == "budget":
            exhausted = True
            break
        if kind == "ce":
            return _ce_report(payload)
        if kind == "undecided" and straddle is None:
            straddle = payload
    if exhausted:
        return CertifyReport(
            "undecided",
            "work budget exhausted before all suspects were resolved; "
            "raise the budget or the delta",
            q.eval_stage, q.eps, h0, l_rad * step_a + step_t / 2,
            straddle=straddle,
            points_checked=checked, refinements=refinements)
    if straddle is not None:
        return CertifyReport(
            "undecided",
            "grid margin straddles zero after refinement; decrease delta",
            q.eval_stage, q.eps, h0, l_rad * step_a + step_t / 2, straddle=straddle,
            points_checked=checked, refinements=refinements)
    return CertifyReport(
        "certificate",
        f"the stage-{q.eval_stage} truncated pair is eps-determining "
        "(certified over the normalized parameter grid; the statement "
        "covers the truncated norms only)",
        q.eval_stage, q.eps, h0, l_rad * step_a + step_t / 2,
        points_checked=checked, refinements=refinements)


# ---------------------------------------------------------------------------
# Canonical obstruction query

def prefix_obstruction_query(N, eps=Q(1, 2), rho=None, **kw) -> DeterminingQuery:
    """The canonical sup-norm obstruction: a 2-parameter slice of the
    coordinate-drop sup-norm system spanned by the N-ones and 2N-ones
    prefix vectors.  The pair (N-ones, 2N-ones) agrees through stage N,
    carries full norm at every stage, and is distance 1 apart at stage
    2N — a violating pair for any eps <= 1."""
    M = 2 * N
    system = linf_drop_system(M)
    g_top = [[ONE if r < N else ZERO, ONE] for r in range(M)]
    mats = []
    for i in range(1, M + 1):
        mats.append([[ONE if r < min(i, N) else ZERO,
                      ONE if r < min(i, M) else ZERO] for r in range(i)])
    gen = SubspaceGenerator(system, mats)
    assert gen.matrix(M) == linalg.mat(g_top)
    if rho is None:
        rho = RhoSchedule((Q(1, 2),) * N)
    return DeterminingQuery(system, gen, rho, eps, M, **kw)


# ---------------------------------------------------------------------------
# Sequence diagnostics

@dataclass(frozen=True)
class SequenceDiagnostics:
    eval_stage: int
    tol: object
    uniformity: tuple = None        # u_i = max_k (||v_k||_M - ||pi_i v_k||)
    uniform_within_tol: bool = None
    blocks: tuple = None            # N_1 < N_2 < ... with u_{N_l} < 1/l
    weak_star_convergent: bool = None
    stage_limit: tuple = None
    norm_residuals: tuple = None
    norm_converges: bool = None
    strong_residuals: tuple = None
    strong_converges: bool = None


def _common_stage(seq):
    if not seq:
        raise ValueError("empty sequence")
    return min(cv.top_stage for cv in seq)


def dp_diagnostic(seq, tol=Q(1, 10**6)) -> SequenceDiagnostics:
    """Uniformity profile of the stagewise norm convergence, with the
    stage-M norm standing in for the limit norm: u_i is the worst gap
    ||v_k||_M - ||pi_i(v_k)|| over the sequence, nonincreasing in i.  The
    verdict is uniform-within-tol iff some stage achieves u_i < tol; the
    block report greedily selects stages N_1 < N_2 < ... with
    u_{N_l} < 1/l while they exist within the truncation."""
    M = _common_stage(seq)
    tol = Q(tol)
    system = seq[0].system
    top = system.stage(M)
    norms_m = [norm_eval(top, project(cv, M)) for cv in seq]
    profile = []
    for i in range(1, M + 1):
        space = system.stage(i)
        profile.append(max(nm - norm_eval(space, project(cv, i))
                           for nm, cv in zip(norms_m, seq)))
    blocks = []
    stage = 1
    for level in range(1, M + 1):
        while stage <= M and profile[stage - 1] >= Q(1, level):
            stage += 1
        if stage > M:
            break
        blocks.append(stage)
        stage += 1
    return SequenceDiagnostics(
        eval_stage=M, tol=tol, uniformity=tuple(profile),
        uniform_within_tol=any(u < tol for u in profile),
        blocks=tuple(blocks))


def anp_diagnostic(seq, tol=Q(1, 10**6)) -> SequenceDiagnostics:
    """Norm convergence to the stagewise limit (the computable surrogate
    of the weak* limit for bounded compatible sequences).  Reports the
    stage-M limit candidate, the residuals |  ||v_k||_M - ||w||_M  |, and
    whether they settle below tol; strong residuals ||v_k - w||_M are
    included for contrast."""
    M = _common_stage(seq)
    tol = Q(tol)
    system = seq[0].system
    top = system.stage(M)
    rep = invlim_convergence(seq, tol)
    if not rep.converges:
        return SequenceDiagnostics(eval_stage=M, tol=tol,
                                   weak_star_convergent=False,
                                   norm_converges=False)
    w = rep.stage_limits[M - 1]
    nw = norm_eval(top, w)
    residuals = tuple(abs(norm_eval(top, project(cv, M)) - nw) for cv in seq)
    strong = tuple(norm_eval(top, linalg.vec_sub(project(cv, M), w))
                   for cv in seq)
    norm_conv = any(all(r < tol for r in residuals[k:])
                    for k in range(len(residuals) - 1))
    strong_conv = any(all(r < tol for r in strong[k:])
                      for k in range(len(strong) - 1))
    return SequenceDiagnostics(
        eval_stage=M, tol=tol, weak_star_convergent=True, stage_limit=w,
        norm_residuals=residuals, norm_converges=norm_conv,
        strong_residuals=strong, strong_converges=strong_conv)


@dataclass(frozen=True)
class EquivalenceReport:
    dp: SequenceDiagnostics
    anp: SequenceDiagnostics
    agree: bool
    stage_i: int                # stage at which the limit gap < tol
    onset_k: int                # index from which both k-residuals < tol
    terms: tuple                # three-term decomposition at (stage_i, k)
    identity_holds: bool


def equivalence_witness(seq, tol=Q(1, 10**6)) -> EquivalenceReport:
    """Evaluates both sequence criteria and the exact three-term
    decomposition
        ||v_k|| - ||w|| = (||v_k|| - ||pi_i v_k||)
                        + (||pi_i v_k|| - ||pi_i w||)
                        + (||pi_i w|| - ||w||)
    at the first (i, k) where the outer terms are small.  Disagreement of
    the two verdicts is a bug signal, never a result."""
    M = _common_stage(seq)
    tol = Q(tol)
    system = seq[0].system
    dp = dp_diagnostic(seq, tol)
    anp = anp_diagnostic(seq, tol)
    if not anp.weak_star_convergent:
        raise ValueError("sequence is not stagewise convergent within tol")
    top = system.stage(M)
    w = anp.stage_limit
    nw = norm_eval(top, w)
    third = tol if tol > 0 else Q(1, 10**12)
    stage_i = M
    for i in range(1, M + 1):
        wi = w[:i]
        if nw - norm_eval(system.stage(i), wi) < third:
            stage_i = i
            break
    space_i = system.stage(stage_i)
    wi = w[:stage_i]
    onset_k = len(seq) - 1
    for k in range(len(seq)):
        if all(norm_eval(space_i,
                         linalg.vec_sub(project(cv, stage_i), wi)) < third
               and abs(norm_eval(top, project(cv, M)) - nw) < third
               for cv in seq[k:]):
            onset_k = k
            break
    cv = seq[onset_k]
    nk = norm_eval(top, project(cv, M))
    nik = norm_eval(space_i, project(cv, stage_i))
    niw = norm_eval(space_i, wi)
    terms = (nk - nik, nik - niw, niw - nw)
    return EquivalenceReport(
        dp, anp, dp.uniform_within_tol == anp.norm_converges,
        stage_i, onset_k, terms, sum(terms) == nk - nw)


# ---------------------------------------------------------------------------
# Quotient-restriction (GFDA) check

def _basis_matrix(G):
    """Submatrix of G on a maximal independent column subset."""
    pivots = linalg.column_space_basis(G)
    return tuple(tuple(row[j] for j in pivots) for row in G)


def _coordinates(B, A):
    """Solve B X = A exactly for full-column-rank B (A in the column
    space of B)."""
    Bt = linalg.transpose(B)
    gram_inv = linalg.inverse(linalg.mat_mul(Bt, B))
    return linalg.mat_mul(gram_inv, linalg.mat_mul(Bt, A))


@dataclass(frozen=True)
class GfdaReport:
    stage_verdicts: tuple
    certify: CertifyReport
    passes: bool


def gfda_check(system: InverseSystem, gen: SubspaceGenerator, stages: int,
               query: DeterminingQuery = None) -> GfdaReport:
    """Checks whether the generated slice admits a good finite-dimensional
    approximation surrogate: the stage restriction a -> g_i(a), from the
    parameter space with the stage-M pulled-back norm onto its image with
    the stage norm, must be a quotient map at every requested stage, and
    the determining certification must pass."""
    if not 1 <= stages <= gen.top_stage:
        raise ValueError("stages outside the generator range")
    M = gen.top_stage
    domain = parameter_space(gen, M)
    verdicts = []
    for i in range(1, stages + 1):
        G = gen.matrix(i)
        if linalg.rank(G) == 0:
            raise ValueError(f"zero generator matrix at stage {i}")
        B = _basis_matrix(G)
        image = parameter_space(
            SubspaceGenerator(_single_stage_view(system, i), [B]), 1)
        X = _coordinates(B, G)
        verdicts.append(is_quotient_map(linear_map(domain, image, X)))
    if query is None:
        n = max(1, min(stages, M - 1))
        query = DeterminingQuery(system, gen, RhoSchedule((Q(1, 2),) * n),
                                 Q(1, 4), M)
    cert = eps_determining_certify(query)
    passes = all(v.verdict for v in verdicts) and cert.kind == "certificate"
    return GfdaReport(tuple(verdicts), cert, passes)


def _single_stage_view(system, i):
    """One-stage inverse system exposing stage i (lets parameter_space
    induce the subspace norm on an image basis)."""
    return InverseSystem(lambda j: system.stage(i), lambda j: None, 1,
                         f"{system.label}|{i}")


def rescaled_image_presentation(system: InverseSystem,
                                gen: SubspaceGenerator):
    """Rebuilds the slice with every stage replaced by the generator image
    carrying the pushforward (quotient) norm from the stage-M parameter
    norm, so each restriction becomes a quotient map by construction.
    Returns (new_system, new_generator).  The rescaling typically enlarges
    early-stage norms and thereby manufactures violating pairs."""
    M = gen.top_stage
    domain = parameter_space(gen, M)
    extremes = ball_extreme_points(domain)
    spaces, mats = [], []
    for i in range(1, M + 1):
        B = _basis_matrix(gen.matrix(i))
        X = _coordinates(B, gen.matrix(i))
        mats.append(X)
        spaces.append(vpoly_space([linalg.mat_vec(X, e) for e in extremes],
                                  label=f"rescaled_{i}"))
    bonds = []
    for i in range(1, M):
        B_i = _basis_matrix(gen.matrix(i))
        B_next = _basis_matrix(gen.matrix(i + 1))
        theta = _coordinates(B_i, linalg.mat_mul(system.bond(i).matrix,
                                                 B_next))
        bonds.append(linear_map(spaces[i], spaces[i - 1], theta))
    new_system = InverseSystem(lambda j: spaces[j - 1],
                               lambda j: bonds[j - 1], M,
                               f"{system.label}-rescaled")
    return new_system, SubspaceGenerator(new_system, mats)
