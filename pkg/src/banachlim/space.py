"""Finite-dimensional normed spaces with exactly computable norms.

Three norm representations: weighted lp for p in {1, 2, inf}, H-polytope
(unit ball cut out by functionals, norm = max |phi_i(x)|) and V-polytope
(unit ball conv(+-v_j), norm = gauge, computed by an exact LP).

All polytope geometry is exact rational; the only approximate quantity is
the l2 norm value itself (its square is exact).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

from . import linalg
from .scalar import Q, ZERO, ONE, parse_scalar, format_scalar, sqrt_approx, to_float
from .simplex import LinearProgram, OPTIMAL

DEFAULT_DIM_CAP = 8


def vertex_enum_dim_cap() -> int:
    env = os.environ.get("BANACH_LIMITS_CAP_DIM")
    return int(env) if env else DEFAULT_DIM_CAP


class NormSpecError(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LpNorm:
    p: str                      # "1", "2" or "inf"
    weights: tuple              # strictly positive rationals
    kind = "lp"


@dataclass(frozen=True)
class HPolytope:
    functionals: tuple          # tuple of covector tuples
    kind = "hpoly"


@dataclass(frozen=True)
class VPolytope:
    vertices: tuple
    kind = "vpoly"


@dataclass(frozen=True)
class NormedSpace:
    dim: int
    spec: object
    label: str = ""

    def __post_init__(self):
        diag = validate_norm_spec(self.spec, self.dim)
        if not diag.passed:
            raise NormSpecError("; ".join(diag.issues))


@dataclass(frozen=True)
class NormDiagnostics:
    passed: bool
    issues: tuple = ()


def _canonical_sign(v):
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


def _sort_key(v):
    return tuple((x.numerator, x.denominator) for x in map(Q, v))


def validate_norm_spec(spec, dim) -> NormDiagnostics:
    """Verdict-style check of the NormSpec invariants (never raises)."""
    issues = []
    if isinstance(spec, LpNorm):
        if spec.p not in ("1", "2", "inf"):
            issues.append(f"p={spec.p!r} not in {{1,2,inf}}")
        if len(spec.weights) != dim:
            issues.append("weight count != dim")
        if any(Q(w) <= 0 for w in spec.weights):
            issues.append("weights must be strictly positive")
    elif isinstance(spec, HPolytope):
        if any(len(f) != dim for f in spec.functionals):
            issues.append("functional length != dim")
        elif linalg.rank(spec.functionals) < dim:
            issues.append("functionals do not span the dual space "
                          "(seminorm, rejected)")
    elif isinstance(spec, VPolytope):
        if any(len(v) != dim for v in spec.vertices):
            issues.append("vertex length != dim")
        elif linalg.rank(spec.vertices) < dim:
            issues.append("vertices do not span the space (gauge would be "
                          "infinite off a subspace, rejected)")
    else:
        issues.append(f"unknown spec {type(spec).__name__}")
    return NormDiagnostics(not issues, tuple(issues))


def validate_norm(space: NormedSpace) -> NormDiagnostics:
    return validate_norm_spec(space.spec, space.dim)


# ---------------------------------------------------------------------------
# Construction (validating + canonicalizing)

def lp_space(p, dim=None, weights=None, label="") -> NormedSpace:
    p = str(p)
    if weights is None:
        weights = (ONE,) * dim
    weights = tuple(Q(w) for w in weights)
    dim = len(weights)
    return NormedSpace(dim, LpNorm(p, weights), label)


def _hpoly_irredundant(functionals, dim):
    """Drop functionals phi_i whose constraint |phi_i x| <= 1 is implied."""
    funcs = sorted({_canonical_sign(linalg.vec(f)) for f in functionals},
                   key=_sort_key)
    kept = list(funcs)
    i = 0
    while i < len(kept):
        others = kept[:i] + kept[i + 1:]
        if linalg.rank(others) < dim:
            i += 1
            continue
        # max phi_i(x) over the ball of the others; redundant iff <= 1.
        lp = LinearProgram()
        xs = [lp.var(free=True) for _ in range(dim)]
        for g in others:
            lp.add_le({x: gv for x, gv in zip(xs, g)}, ONE)
            lp.add_le({x: -gv for x, gv in zip(xs, g)}, ONE)
        lp.minimize({x: -fv for x, fv in zip(xs, kept[i])})
        status, _, value = lp.solve()
        if status == OPTIMAL and -value <= 1:
            kept.pop(i)
        else:
            i += 1
    return tuple(kept)


def _vpoly_irredundant(vertices, dim):
    """Drop vertices inside conv(+- others)."""
    verts = sorted({_canonical_sign(linalg.vec(v)) for v in vertices},
                   key=_sort_key)
    kept = list(verts)
    i = 0
    while i < len(kept):
        others = kept[:i] + kept[i + 1:]
        if linalg.rank(others) < dim:
            i += 1
            continue
        val = _gauge_lp(others, kept[i])
        if val is not None and val <= 1:
            kept.pop(i)
        else:
            i += 1
    return tuple(kept)


def hpoly_space(functionals, label="") -> NormedSpace:
    funcs = tuple(linalg.vec(f) for f in functionals)
    dim = len(funcs[0]) if funcs else 0
    diag = validate_norm_spec(HPolytope(funcs), dim)
    if not diag.passed:
        raise NormSpecError("; ".join(diag.issues))
    return NormedSpace(dim, HPolytope(_hpoly_irredundant(funcs, dim)), label)


def vpoly_space(vertices, label="") -> NormedSpace:
    verts = tuple(linalg.vec(v) for v in vertices)
    dim = len(verts[0]) if verts else 0
    diag = validate_norm_spec(VPolytope(verts), dim)
    if not diag.passed:
        raise NormSpecError("; ".join(diag.issues))
    return NormedSpace(dim, VPolytope(_vpoly_irredundant(verts, dim)), label)


# ---------------------------------------------------------------------------
# Norm evaluation

def _gauge_lp(vertices, x):
    """Gauge of conv(+-vertices) at x: min sum(l+ + l-), V(l+ - l-) = x."""
    lp = LinearProgram()
    n = len(vertices)
    lpos = [lp.var() for _ in range(n)]
    lneg = [lp.var() for _ in range(n)]
    dim = len(x)
    for i in range(dim):
        coeffs = {}
        for j, v in enumerate(vertices):
            coeffs[lpos[j]] = v[i]
            coeffs[lneg[j]] = -v[i]
        lp.add_eq(coeffs, x[i])
    lp.minimize({h: ONE for h in lpos + lneg})
    status, _, value = lp.solve()
    if status != OPTIMAL:
        return None
    return value


def norm_eval(space: NormedSpace, x):
    """Exact norm of x (the l2 value is a high-precision rational shadow
    of an irrational; use norm_eval_sq for exact l2 comparisons)."""
    if len(x) != space.dim:
        raise DimensionMismatch(
            f"vector length {len(x)} != dim {space.dim} of {space.label!r}")
    x = linalg.vec(x)
    spec = space.spec
    if isinstance(spec, LpNorm):
        terms = [w * abs(v) for w, v in zip(spec.weights, x)]
        if spec.p == "1":
            return sum(terms, ZERO)
        if spec.p == "inf":
            return max(terms) if terms else ZERO
        return sqrt_approx(sum((t * t for t in terms), ZERO))
    if isinstance(spec, HPolytope):
        return max(abs(linalg.dot(f, x)) for f in spec.functionals)
    if isinstance(spec, VPolytope):
        val = _gauge_lp(spec.vertices, x)
        if val is None:
            raise NormSpecError("gauge LP infeasible: corrupted VPolytope "
                                "(vertices do not span)")
        return val
    raise NormSpecError(f"unknown spec {type(spec).__name__}")


def norm_eval_sq(space: NormedSpace, x):
    """Exact square of the norm (rational for every spec, incl. l2)."""
    spec = space.spec
    if isinstance(spec, LpNorm) and spec.p == "2":
        x = linalg.vec(x)
        return sum(((w * v) ** 2 for w, v in zip(spec.weights, x)), ZERO)
    n = norm_eval(space, x)
    return n * n


def norm_eval_float(space: NormedSpace, x) -> float:
    """Float fast path (search/diagnostic use only)."""
    import math
    spec = space.spec
    if isinstance(spec, LpNorm):
        w = [to_float(v) for v in spec.weights]
        terms = [wi * abs(float(v)) for wi, v in zip(w, x)]
        if spec.p == "1":
            return sum(terms)
        if spec.p == "inf":
            return max(terms) if terms else 0.0
        return math.sqrt(sum(t * t for t in terms))
    if isinstance(spec, HPolytope):
        return max(abs(sum(to_float(a) * float(b) for a, b in zip(f, x)))
                   for f in spec.functionals)
    from .scalar import from_float
    return to_float(norm_eval(space, [from_float(float(v)) for v in x]))


# ---------------------------------------------------------------------------
# Duality

_DUAL_P = {"1": "inf", "inf": "1", "2": "2"}


def dual_space(space: NormedSpace) -> NormedSpace:
    spec = space.spec
    label = f"{space.label}*" if space.label else ""
    if isinstance(spec, LpNorm):
        dual_w = tuple(ONE / Q(w) for w in spec.weights)
        return NormedSpace(space.dim, LpNorm(_DUAL_P[spec.p], dual_w), label)
    if isinstance(spec, HPolytope):
        return NormedSpace(space.dim, VPolytope(spec.functionals), label)
    if isinstance(spec, VPolytope):
        return NormedSpace(space.dim, HPolytope(spec.vertices), label)
    raise NormSpecError(f"unknown spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Unit-ball extreme points

def _halfspaces_of(spec, dim):
    """Rows a with ball = {x : a.x <= 1 for all rows} (symmetric pairs)."""
    if isinstance(spec, HPolytope):
        rows = list(spec.functionals)
    elif isinstance(spec, LpNorm) and spec.p == "inf":
        rows = [tuple(spec.weights[i] if j == i else ZERO for j in range(dim))
                for i in range(dim)]
    else:
        raise NormSpecError("no halfspace representation")
    return [r for f in rows for r in (f, tuple(-v for v in f))]


def _adjacent(i, j, verts, halfspaces, dim):
    """Adjacency on the current polytope (Fukuda's combinatorial test):
    vertices are adjacent iff their common active set has rank d-1 and no
    other vertex is active on all of it."""
    common = verts[i][1] & verts[j][1]
    if linalg.rank([halfspaces[h] for h in common]) != dim - 1:
        return False
    for k in range(len(verts)):
        if k != i and k != j and common <= verts[k][1]:
            return False
    return True


def _halfspace_vertices(halfspaces, dim):
    """Vertices of {x : a.x <= 1} by successive halfspace intersection."""
    # Seed: d independent symmetric pairs give a parallelepiped.
    idx = []
    chosen = []
    for i in range(0, len(halfspaces), 2):
        if linalg.rank(chosen + [halfspaces[i]]) > len(chosen):
            chosen.append(halfspaces[i])
            idx.append(i)
        if len(chosen) == dim:
            break
    if len(chosen) < dim:
        raise NormSpecError("halfspaces do not bound a polytope")
    verts = []   # [point, active halfspace index set]
    for signs in itertools.product((ONE, -ONE), repeat=dim):
        pt = linalg.solve(chosen, list(signs))
        active = {idx[j] if signs[j] > 0 else idx[j] + 1 for j in range(dim)}
        verts.append([pt, active])
    used = set(idx) | {i + 1 for i in idx}

    for h in range(len(halfspaces)):
        if h in used:
            continue
        a = halfspaces[h]
        vals = [linalg.dot(a, pv[0]) for pv in verts]
        inside = [i for i, t in enumerate(vals) if t < 1]
        on = [i for i, t in enumerate(vals) if t == 1]
        outside = [i for i, t in enumerate(vals) if t > 1]
        if not outside:
            for i in on:
                verts[i][1].add(h)
            continue
        new_verts = []
        for i in inside:
            for j in outside:
                if not _adjacent(i, j, verts, halfspaces, dim):
                    continue
                ti, tj = vals[i], vals[j]
                lam = (1 - ti) / (tj - ti)
                pt = tuple(pi + lam * (pj - pi)
                           for pi, pj in zip(verts[i][0], verts[j][0]))
                new_verts.append([pt, (verts[i][1] & verts[j][1]) | {h}])
        keep = [verts[i] for i in inside]
        for i in on:
            verts[i][1].add(h)
            keep.append(verts[i])
        index = {tuple(v[0]): v for v in keep}
        for nv in new_verts:
            key = tuple(nv[0])
            if key in index:
                index[key][1] |= nv[1]
            else:
                index[key] = nv
                keep.append(nv)
        verts = keep
        used.add(h)
    return [tuple(v[0]) for v in verts]


def ball_extreme_points(space: NormedSpace):
    """Extreme points of the unit ball (polytopal specs and p in {1, inf})."""
    spec = space.spec
    dim = space.dim
    cap = vertex_enum_dim_cap()
    if isinstance(spec, LpNorm):
        if spec.p == "2":
            raise NormSpecError("l2 ball is not a polytope; extreme points "
                                "not enumerable")
        if spec.p == "1":
            pts = []
            for i, w in enumerate(spec.weights):
                e = [ZERO] * dim
                e[i] = ONE / Q(w)
                pts.append(tuple(e))
                pts.append(tuple(-v for v in e))
            return pts
        if dim > cap:
            raise NormSpecError(
                f"dim {dim} exceeds vertex-enumeration cap {cap} "
                "(set BANACH_LIMITS_CAP_DIM to raise)")
        return [tuple(s / Q(w) for s, w in zip(signs, spec.weights))
                for signs in itertools.product((ONE, -ONE), repeat=dim)]
    if isinstance(spec, VPolytope):
        return [v for u in spec.vertices
                for v in (u, tuple(-x for x in u))]
    if isinstance(spec, HPolytope):
        if dim > cap:
            raise NormSpecError(
                f"dim {dim} exceeds vertex-enumeration cap {cap} "
                "(set BANACH_LIMITS_CAP_DIM to raise)")
        return _halfspace_vertices(_halfspaces_of(spec, dim), dim)
    raise NormSpecError(f"unknown spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# JSON wire format

def spec_to_json(spec):
    if isinstance(spec, LpNorm):
        return {"kind": "lp", "p": spec.p,
                "weights": [format_scalar(w) for w in spec.weights]}
    if isinstance(spec, HPolytope):
        return {"kind": "hpoly",
                "functionals": [[format_scalar(v) for v in f]
                                for f in spec.functionals]}
    if isinstance(spec, VPolytope):
        return {"kind": "vpoly",
                "vertices": [[format_scalar(v) for v in w]
                             for w in spec.vertices]}
    raise NormSpecError(f"unknown spec {type(spec).__name__}")


def space_to_json(space: NormedSpace):
    return {"dim": space.dim, "label": space.label,
            "spec": spec_to_json(space.spec)}


def spec_from_json(obj):
    kind = obj.get("kind")
    if kind == "lp":
        return LpNorm(str(obj["p"]),
                      tuple(parse_scalar(w) for w in obj["weights"]))
    if kind == "hpoly":
        return HPolytope(tuple(tuple(parse_scalar(v) for v in f)
                               for f in obj["functionals"]))
    if kind == "vpoly":
        return VPolytope(tuple(tuple(parse_scalar(v) for v in w)
                               for w in obj["vertices"]))
    raise NormSpecError(f"unknown norm kind {kind!r}")


def space_from_json(obj) -> NormedSpace:
    spec = spec_from_json(obj["spec"])
    return NormedSpace(int(obj["dim"]), spec, obj.get("label", ""))
