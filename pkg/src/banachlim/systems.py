"""Standard direct and inverse systems at finite truncation scale.

Stages are indexed 1..max_stage.  An inverse system has bonds
theta_i : W_{i+1} -> W_i; a direct system has bonds iota_i : E_i -> E_{i+1}.
All "limit" quantities carry an explicit bound direction: stage-M norms of
compatible vectors are lower bounds of the limit norm, pushed-forward
direct-limit norms are upper bounds of the limit pseudo-norm.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import linalg
from .scalar import Q, ZERO, ONE, format_scalar, parse_scalar
from .linmap import (LinearMap, MapVerdict, adjoint, compose,
                     is_one_lipschitz, is_quotient_map, linear_map,
                     min_norm_preimage, operator_norm, EXACT)
from .space import (NormedSpace, ball_extreme_points, dual_space, lp_space,
                    norm_eval, space_from_json, space_to_json, vpoly_space)


class StageError(ValueError):
    pass


class _SystemBase:
    """Lazy, memoized stage/bond generation from pure rules."""

    def __init__(self, space_fn, bond_fn, max_stage, label=""):
        self._space_fn = space_fn
        self._bond_fn = bond_fn
        self.max_stage = max_stage
        self.label = label
        self._spaces = {}
        self._bonds = {}

    def stage(self, i) -> NormedSpace:
        if not 1 <= i <= self.max_stage:
            raise StageError(f"stage {i} outside 1..{self.max_stage}")
        if i not in self._spaces:
            self._spaces[i] = self._space_fn(i)
        return self._spaces[i]

    def bond(self, i) -> LinearMap:
        if not 1 <= i < self.max_stage:
            raise StageError(f"bond {i} outside 1..{self.max_stage - 1}")
        if i not in self._bonds:
            self._bonds[i] = self._bond_fn(i)
        return self._bonds[i]


class DirectSystem(_SystemBase):
    """E_1 -> E_2 -> ... with 1-Lipschitz bonds iota_i : E_i -> E_{i+1}."""


class InverseSystem(_SystemBase):
    """W_1 <- W_2 <- ... with 1-Lipschitz bonds theta_i : W_{i+1} -> W_i."""

    def __init__(self, space_fn, bond_fn, max_stage, label="",
                 is_quotient_system=False):
        super().__init__(space_fn, bond_fn, max_stage, label)
        self.is_quotient_system = is_quotient_system

    def push_down(self, x, i, j):
        """theta_j o ... o theta_{i-1} applied to x in W_i, result in W_j."""
        for k in range(i - 1, j - 1, -1):
            x = self.bond(k)(x)
        return x


@dataclass(frozen=True)
class StageVerdict:
    stage: int
    lipschitz_ok: bool
    quotient_ok: bool = None
    witness: tuple = None


def validate_standard(system):
    """Exact per-bond verdicts: operator norm <= 1, and (for quotient
    systems) the quotient-map verdict."""
    out = []
    quotient = isinstance(system, InverseSystem) and system.is_quotient_system
    for i in range(1, system.max_stage):
        T = system.bond(i)
        lip = is_one_lipschitz(T)
        witness = None
        if lip is False:
            witness = operator_norm(T).witness
        q_ok = None
        if quotient and lip:
            qv = is_quotient_map(T)
            q_ok = qv.verdict
            if not q_ok:
                witness = qv.witness
        out.append(StageVerdict(i, bool(lip), q_ok, witness))
    return out


def dualize(system):
    """Duality functor: stages to dual spaces, bonds to adjoints.

    Direct systems map to inverse systems and conversely; isometrically
    injective direct systems dualize to quotient inverse systems.
    """
    if isinstance(system, DirectSystem):
        return InverseSystem(
            lambda i: dual_space(system.stage(i)),
            lambda i: adjoint(system.bond(i)),
            system.max_stage, label=f"{system.label}*")
    return DirectSystem(
        lambda i: dual_space(system.stage(i)),
        lambda i: adjoint(system.bond(i)),
        system.max_stage, label=f"{system.label}*")


# ---------------------------------------------------------------------------
# Compatible vectors

@dataclass(frozen=True)
class CompatibleVector:
    """Finite truncation (w_1, ..., w_M) of an inverse-limit element,
    with theta_i(w_{i+1}) = w_i exactly."""
    system: InverseSystem
    stages: tuple
    limit_norm: object = None   # closed-form limit norm when the generator
                                # rule supplies one; else None

    def __post_init__(self):
        for i, w in enumerate(self.stages, start=1):
            if len(w) != self.system.stage(i).dim:
                raise StageError(f"stage {i} vector has wrong dimension")
        for i in range(1, len(self.stages)):
            if self.system.bond(i)(self.stages[i]) != self.stages[i - 1]:
                raise StageError(f"bond compatibility fails at stage {i}")

    @property
    def top_stage(self):
        return len(self.stages)


def compatible_from_tail(system: InverseSystem, w_top, top=None,
                         limit_norm=None) -> CompatibleVector:
    """Build the truncation determined by its last stage."""
    top = top if top is not None else system.max_stage
    w = linalg.vec(w_top)
    if len(w) != system.stage(top).dim:
        raise StageError("tail vector has wrong dimension")
    stages = [w]
    for i in range(top - 1, 0, -1):
        w = system.bond(i)(w)
        stages.append(w)
    return CompatibleVector(system, tuple(reversed(stages)), limit_norm)


def project(cv: CompatibleVector, j: int):
    """pi_j: return the stored stage-j vector."""
    if not 1 <= j <= cv.top_stage:
        raise StageError(f"stage {j} outside 1..{cv.top_stage}")
    return cv.stages[j - 1]


def cv_add(a: CompatibleVector, b: CompatibleVector) -> CompatibleVector:
    return CompatibleVector(a.system, tuple(
        linalg.vec_add(x, y) for x, y in zip(a.stages, b.stages)))


def cv_sub(a: CompatibleVector, b: CompatibleVector) -> CompatibleVector:
    return CompatibleVector(a.system, tuple(
        linalg.vec_sub(x, y) for x, y in zip(a.stages, b.stages)))


def cv_scale(t, a: CompatibleVector) -> CompatibleVector:
    lim = None if a.limit_norm is None else abs(Q(t)) * a.limit_norm
    return CompatibleVector(a.system, tuple(
        linalg.vec_scale(t, x) for x in a.stages), lim)


@dataclass(frozen=True)
class StageNormReport:
    norms: tuple            # nondecreasing
    limit_estimate: object  # = norms[-1], a LOWER bound of the limit norm
    is_exact: bool
    limit: object = None    # closed-form limit when known


def stage_norms(cv: CompatibleVector) -> StageNormReport:
    norms = tuple(norm_eval(cv.system.stage(i + 1), w)
                  for i, w in enumerate(cv.stages))
    exact = cv.limit_norm is not None
    return StageNormReport(norms, norms[-1], exact,
                           cv.limit_norm if exact else None)


def stage_norm(cv: CompatibleVector, j=None):
    j = j if j is not None else cv.top_stage
    return norm_eval(cv.system.stage(j), project(cv, j))


def lift_min_norm(system: InverseSystem, w, i: int):
    """Norm-preserving lift through theta_i (quotient bonds only): returns
    u in W_{i+1} with theta_i(u) = w and ||u|| = ||w||."""
    T = system.bond(i)
    if not system.is_quotient_system:
        qv = is_quotient_map(T)
        if not qv.verdict:
            raise ValueError(
                f"bond {i} is not a quotient map ({qv.reason}); "
                "norm-preserving lifts exist only in quotient systems")
    u, _ = min_norm_preimage(T, w)
    return u


def pairing(cv: CompatibleVector, j: int, phi):
    """phi(w_j) for phi in W_j^*."""
    w = project(cv, j)
    if len(phi) != len(w):
        raise StageError("covector dimension mismatch")
    return linalg.dot(linalg.vec(phi), w)


@dataclass(frozen=True)
class PairingVerdict:
    verdict: bool
    attaining_phi: tuple = None
    attained: object = None
    limit_gap_within_eps: bool = None


def pairing_isometry_check(cv: CompatibleVector, eps=Q(0)) -> PairingVerdict:
    """Find a stage-M dual-ball extreme point attaining phi(w_M) = ||w_M||
    (the finite-stage content of the isometry of the canonical pairing).

    When the vector carries a closed-form limit norm, additionally reports
    whether the attained value is within eps of that limit."""
    M = cv.top_stage
    w = project(cv, M)
    space = cv.system.stage(M)
    target = norm_eval(space, w)
    best_phi, best = None, None
    for phi in ball_extreme_points(dual_space(space)):
        val = linalg.dot(phi, w)
        if best is None or val > best:
            best, best_phi = val, phi
    ok = best == target
    gap_ok = None
    if cv.limit_norm is not None:
        gap_ok = best >= cv.limit_norm - Q(eps)
    return PairingVerdict(ok, best_phi, best, gap_ok)


# ---------------------------------------------------------------------------
# Inverse-limit topology diagnostics

@dataclass(frozen=True)
class ConvergenceReport:
    stage_cauchy: tuple      # per-stage bool
    stage_limits: tuple      # per-stage limit candidate (or None)
    onsets: tuple            # per-stage onset index K (or None)
    converges: bool


def invlim_convergence(seq, tol) -> ConvergenceReport:
    """Stagewise Cauchy check: stage j passes if from some onset K on, all
    pairwise distances are <= tol (at least two tail elements required)."""
    if not seq:
        raise ValueError("empty sequence")
    system = seq[0].system
    M = min(cv.top_stage for cv in seq)
    tol = Q(tol)
    cauchy, limits, onsets = [], [], []
    for j in range(1, M + 1):
        space = system.stage(j)
        pts = [project(cv, j) for cv in seq]
        onset = None
        for K in range(0, len(pts) - 1):
            tail = pts[K:]
            if all(norm_eval(space, linalg.vec_sub(a, b)) <= tol
                   for idx, a in enumerate(tail) for b in tail[idx + 1:]):
                onset = K
                break
        cauchy.append(onset is not None)
        onsets.append(onset)
        limits.append(pts[-1] if onset is not None else None)
    return ConvergenceReport(tuple(cauchy), tuple(limits), tuple(onsets),
                             all(cauchy))


def diagonal_subsequence(seq, eps):
    """Stagewise eps-net subselection: extract a subsequence whose
    invlim_convergence verdict passes at tolerance 2*eps per stage."""
    if not seq:
        return []
    system = seq[0].system
    M = min(cv.top_stage for cv in seq)
    idxs = list(range(len(seq)))
    eps = Q(eps)
    for j in range(1, M + 1):
        space = system.stage(j)
        # Greedy eps-net clustering; keep the largest cluster.
        clusters = []
        for k in idxs:
            pt = project(seq[k], j)
            for rep, members in clusters:
                if norm_eval(space, linalg.vec_sub(pt, rep)) <= eps:
                    members.append(k)
                    break
            else:
                clusters.append((pt, [k]))
        idxs = max((members for _, members in clusters), key=len)
    return [seq[k] for k in sorted(idxs)]


def direct_limit_norm(ds: DirectSystem, e, i: int):
    """Pushforward norms ||iota_{j-1} o ... o iota_i (e)|| for j = i..M
    (nonincreasing); the stage-M value is an UPPER bound of the direct-limit
    pseudo-norm."""
    if not 1 <= i <= ds.max_stage:
        raise StageError(f"stage {i} outside 1..{ds.max_stage}")
    x = linalg.vec(e)
    if len(x) != ds.stage(i).dim:
        raise StageError("vector has wrong dimension")
    norms = [norm_eval(ds.stage(i), x)]
    for j in range(i, ds.max_stage):
        x = ds.bond(j)(x)
        norms.append(norm_eval(ds.stage(j + 1), x))
    return tuple(norms), norms[-1]


# ---------------------------------------------------------------------------
# Subspace generators

class SubspaceGenerator:
    """Compatible family g_i : R^d -> W_i presenting a finite-dimensional
    slice of a subspace of the inverse limit.  Compatibility
    theta_i o g_{i+1} = g_i is validated eagerly."""

    def __init__(self, system: InverseSystem, matrices):
        self.system = system
        self.matrices = tuple(linalg.mat(m) for m in matrices)
        if len(self.matrices) > system.max_stage:
            raise StageError("more generator stages than system stages")
        dims = {len(m[0]) for m in self.matrices if m}
        if len(dims) != 1:
            raise ValueError("inconsistent parameter dimension")
        self.param_dim = dims.pop()
        for i, m in enumerate(self.matrices, start=1):
            if len(m) != system.stage(i).dim:
                raise StageError(f"generator matrix {i} has wrong row count")
        for i in range(1, len(self.matrices)):
            lhs = linalg.mat_mul(system.bond(i).matrix, self.matrices[i])
            if lhs != self.matrices[i - 1]:
                raise StageError(
                    f"generator family incompatible with bond {i}")

    @property
    def top_stage(self):
        return len(self.matrices)

    def matrix(self, i):
        return self.matrices[i - 1]

    def member(self, a, limit_norm=None) -> CompatibleVector:
        a = linalg.vec(a)
        stages = tuple(linalg.mat_vec(m, a) for m in self.matrices)
        return CompatibleVector(self.system, stages, limit_norm)


def generator_from_tail(system: InverseSystem, g_top, top=None
                        ) -> SubspaceGenerator:
    """Generator family determined by its top-stage matrix."""
    top = top if top is not None else system.max_stage
    g = linalg.mat(g_top)
    mats = [g]
    for i in range(top - 1, 0, -1):
        g = linalg.mat_mul(system.bond(i).matrix, g)
        mats.append(g)
    return SubspaceGenerator(system, tuple(reversed(mats)))


# ---------------------------------------------------------------------------
# Built-in system library

def _drop_system(p, max_stage, label):
    def space_fn(i):
        return lp_space(p, dim=i, label=f"{label}_{i}")

    def bond_fn(i):
        rows = [[ONE if c == r else ZERO for c in range(i + 1)]
                for r in range(i)]
        return linear_map(space_fn(i + 1), space_fn(i), rows)

    return space_fn, bond_fn


def l1_drop_system(max_stage) -> InverseSystem:
    """W_i = l1^i with last-coordinate drop (quotient system; the inverse
    limit realizes l1 = c0*, the RNP side of the dichotomy)."""
    sf, bf = _drop_system("1", max_stage, "l1")
    return InverseSystem(sf, bf, max_stage, "l1_drop",
                         is_quotient_system=True)


def linf_drop_system(max_stage) -> InverseSystem:
    """W_i = linf^i with drop bonds (hosts the c0 non-RNP subspace)."""
    sf, bf = _drop_system("inf", max_stage, "linf")
    return InverseSystem(sf, bf, max_stage, "linf_drop",
                         is_quotient_system=True)


def l2_drop_system(max_stage) -> InverseSystem:
    """W_i = l2^i with drop bonds.  The bonds are quotient maps
    mathematically, but the l2 ball is not polytopal so the exact quotient
    verdict machinery does not certify them; the flag stays unset."""
    sf, bf = _drop_system("2", max_stage, "l2")
    return InverseSystem(sf, bf, max_stage, "l2_drop",
                         is_quotient_system=False)


def linf_padding_system(max_stage) -> DirectSystem:
    """E_i = linf^i with zero-padding bonds (isometrically injective);
    its dual is the l1 coordinate-drop inverse system."""
    def space_fn(i):
        return lp_space("inf", dim=i, label=f"linfpad_{i}")

    def bond_fn(i):
        rows = [[ONE if c == r else ZERO for c in range(i)]
                for r in range(i + 1)]
        return linear_map(space_fn(i), space_fn(i + 1), rows)

    return DirectSystem(space_fn, bond_fn, max_stage, "linf_pad")


def random_quotient_system(seed, max_stage, dim_cap=3) -> InverseSystem:
    """Random polytope-norm quotient system, quotient by construction.

    The top stage gets a random V-polytope norm; each bond is a random
    surjection and the target norm is rescaled to the exact quotient norm
    (its ball is the image of the source ball), so every bond is a
    1-Lipschitz quotient map by construction.
    """
    rng = random.Random(seed)
    dims = [min(i, dim_cap) + 1 for i in range(1, max_stage + 1)]
    spaces = [None] * (max_stage + 1)
    bonds = [None] * max_stage

    d_top = dims[-1]
    while True:
        verts = [tuple(Q(rng.randint(-4, 4), rng.randint(1, 2))
                       for _ in range(d_top)) for _ in range(d_top + 2)]
        if linalg.rank(verts) == d_top and all(any(v != 0 for v in w)
                                               for w in verts):
            break
    spaces[max_stage] = vpoly_space(verts, label=f"rq{seed}_{max_stage}")
    for i in range(max_stage - 1, 0, -1):
        di, dj = dims[i - 1], dims[i]
        while True:
            rows = [[Q(rng.randint(-3, 3)) for _ in range(dj)]
                    for _ in range(di)]
            if linalg.rank(rows) == di:
                break
        src = spaces[i + 1]
        image_verts = [linalg.mat_vec(linalg.mat(rows), v)
                       for v in src.spec.vertices]
        tgt = vpoly_space(image_verts, label=f"rq{seed}_{i}")
        spaces[i] = tgt
        bonds[i] = linear_map(src, tgt, rows)

    return InverseSystem(lambda i: spaces[i], lambda i: bonds[i],
                         max_stage, f"random_quotient_{seed}",
                         is_quotient_system=True)


BUILTIN_SYSTEMS = {
    "l1_drop": l1_drop_system,
    "linf_drop": linf_drop_system,
    "l2_drop": l2_drop_system,
    "linf_padding": linf_padding_system,
}


# ---------------------------------------------------------------------------
# JSON wire format

def system_to_json(system):
    kind = "inverse" if isinstance(system, InverseSystem) else "direct"
    spaces = [space_to_json(system.stage(i))
              for i in range(1, system.max_stage + 1)]
    bonds = [[[format_scalar(v) for v in row]
              for row in system.bond(i).matrix]
             for i in range(1, system.max_stage)]
    out = {"kind": kind, "label": system.label, "stages": len(spaces),
           "spaces": spaces, "bonds": bonds}
    if isinstance(system, InverseSystem):
        out["is_quotient_system"] = system.is_quotient_system
    return out


def system_from_json(obj):
    if "builtin" in obj:
        name = obj["builtin"]
        stages = int(obj["stages"])
        if name == "random_quotient":
            return random_quotient_system(int(obj.get("seed", 0)), stages)
        if name not in BUILTIN_SYSTEMS:
            raise ValueError(f"unknown builtin system {name!r}")
        return BUILTIN_SYSTEMS[name](stages)
    spaces = [space_from_json(s) for s in obj["spaces"]]
    mats = [tuple(tuple(parse_scalar(v) for v in row) for row in m)
            for m in obj["bonds"]]
    n = len(spaces)
    if obj.get("kind", "inverse") == "direct":
        bonds = [LinearMap(spaces[i], spaces[i + 1], mats[i])
                 for i in range(n - 1)]
        return DirectSystem(lambda i: spaces[i - 1],
                            lambda i: bonds[i - 1], n,
                            obj.get("label", ""))
    bonds = [LinearMap(spaces[i + 1], spaces[i], mats[i])
             for i in range(n - 1)]
    return InverseSystem(lambda i: spaces[i - 1], lambda i: bonds[i - 1], n,
                         obj.get("label", ""),
                         obj.get("is_quotient_system", False))
