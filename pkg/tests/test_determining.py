import random

import pytest

from banachlim import linalg
from banachlim.scalar import Q, ZERO, ONE
from banachlim.space import norm_eval
from banachlim.systems import (SubspaceGenerator, compatible_from_tail,
                               generator_from_tail, l1_drop_system,
                               linf_drop_system, project)
from banachlim.determining import (CertifyConfig, DeterminingQuery,
                                   RhoSchedule, SearchConfig, anp_diagnostic,
                                   dp_diagnostic, eps_determining_certify,
                                   eps_determining_search,
                                   equivalence_witness, gfda_check,
                                   parameter_space, prefix_obstruction_query,
                                   rescaled_image_presentation, verify_pair)

HALF = Q(1, 2)


def _truncation_query(M, rho, eps, **kw):
    """Two-parameter prefix slice of the l1 coordinate-drop system."""
    sys_ = l1_drop_system(M)
    gen = generator_from_tail(
        sys_, [[ONE, ZERO], [ZERO, ONE]] + [[ZERO, ZERO]] * (M - 2))
    return DeterminingQuery(sys_, gen, RhoSchedule(rho), eps, M, **kw)


def _d1_query(**kw):
    sys_ = l1_drop_system(4)
    gen = generator_from_tail(sys_, [[ONE], [ZERO], [ZERO], [ZERO]])
    return DeterminingQuery(sys_, gen, RhoSchedule((HALF, HALF)), Q(3, 4), 4,
                            **kw)


# ---------------------------------------------------------------------------
# Query and schedule validation

def test_rho_schedule_validation():
    RhoSchedule((ONE, HALF, HALF))
    with pytest.raises(ValueError):
        RhoSchedule(())
    with pytest.raises(ValueError):
        RhoSchedule((HALF, ONE))          # increasing
    with pytest.raises(ValueError):
        RhoSchedule((HALF, ZERO))         # not positive
    with pytest.raises(ValueError):
        RhoSchedule((Q(3, 2),))           # above one


def test_query_validation():
    sys_ = l1_drop_system(4)
    gen = generator_from_tail(sys_, [[ONE], [ZERO], [ZERO], [ZERO]])
    other = l1_drop_system(4)
    with pytest.raises(ValueError):
        DeterminingQuery(other, gen, RhoSchedule((HALF,)), HALF, 4)
    with pytest.raises(ValueError):
        DeterminingQuery(sys_, gen, RhoSchedule((HALF,) * 5), HALF, 4)
    with pytest.raises(ValueError):
        DeterminingQuery(sys_, gen, RhoSchedule((HALF,)), Q(5, 2), 4)


# ---------------------------------------------------------------------------
# Exact pair verification

def test_verify_pair_forced_obstruction():
    # The two prefix generators agree on the first N coordinates but
    # differ by a full unit at the top stage: a canonical violating pair.
    q = prefix_obstruction_query(3)
    cx = verify_pair(q, (ONE, ZERO), (ZERO, ONE))
    assert cx is not None
    assert cx.violation == 1
    assert cx.proximity_slack == Q(1, 3)
    assert all(s == HALF for s in cx.tail_slacks[0])
    assert all(s == HALF for s in cx.tail_slacks[1])


def test_verify_pair_scale_invariance():
    q = prefix_obstruction_query(3)
    cx = verify_pair(q, (Q(7), ZERO), (ZERO, Q(7)))
    assert cx is not None and cx.violation == 1


def test_verify_pair_rejects_separated_only():
    # Same direction twice: separation fails (zero difference).
    q = prefix_obstruction_query(3)
    assert verify_pair(q, (ONE, ZERO), (ONE, ZERO)) is None


def test_verify_pair_tie_counts_as_failure():
    # With rho_i = 1 the tail constraint ||v|| - ||pi_i v|| < ||v|| fails
    # exactly when pi_i v = 0; the d=1 slice hits the tie at stage > 1.
    sys_ = l1_drop_system(3)
    gen = generator_from_tail(sys_, [[ZERO], [ONE], [ZERO]])
    q = DeterminingQuery(sys_, gen, RhoSchedule((ONE,)), HALF, 3)
    assert verify_pair(q, (ONE,), (-ONE,)) is None


# ---------------------------------------------------------------------------
# Parameter-space pullback

def test_parameter_space_pullback_norms():
    q = prefix_obstruction_query(2)  # sup-norm drop system, M = 4
    dom = parameter_space(q.gen, 4)
    rng = random.Random(7)
    for _ in range(25):
        a = tuple(Q(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(2))
        direct = norm_eval(q.system.stage(4),
                           linalg.mat_vec(q.gen.matrix(4), a))
        assert norm_eval(dom, a) == direct


def test_parameter_space_pullback_l1_signs():
    q = _truncation_query(5, (HALF,), ONE)
    dom = parameter_space(q.gen, 5)
    rng = random.Random(8)
    for _ in range(25):
        a = tuple(Q(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(2))
        direct = norm_eval(q.system.stage(5),
                           linalg.mat_vec(q.gen.matrix(5), a))
        assert norm_eval(dom, a) == direct


def test_parameter_space_requires_injectivity():
    sys_ = l1_drop_system(3)
    gen = generator_from_tail(sys_, [[ONE, ONE], [ZERO, ZERO], [ZERO, ZERO]])
    with pytest.raises(ValueError):
        parameter_space(gen, 3)


# ---------------------------------------------------------------------------
# Search

def test_search_finds_forced_pair():
    q = prefix_obstruction_query(3)
    rep = eps_determining_search(q)
    assert rep.kind == "counterexample"
    assert rep.counterexample.violation >= Q(9, 10)
    # Independent exact re-check of the reported pair.
    again = verify_pair(q, rep.counterexample.a, rep.counterexample.a_prime)
    assert again is not None
    assert again.violation == rep.counterexample.violation


def test_search_not_found_on_certified_instance():
    rep = eps_determining_search(_d1_query())
    assert rep.kind == "not-found"
    assert rep.counterexample is None


def test_search_l1_truncation_counterexample():
    # Loose rho and small eps leave room for tail-mass violations.
    q = _truncation_query(6, (HALF, HALF), Q(1, 4))
    rep = eps_determining_search(q)
    assert rep.kind == "counterexample"
    assert verify_pair(q, rep.counterexample.a,
                       rep.counterexample.a_prime) is not None


# ---------------------------------------------------------------------------
# Certification

def test_certify_d1_certificate():
    rep = eps_determining_certify(_d1_query(certify=CertifyConfig(
        delta=Q(1, 10))))
    assert rep.kind == "certificate"
    assert rep.counterexample is None
    assert rep.points_checked > 0


def test_certify_counterexample_forced_pair():
    q = prefix_obstruction_query(2, certify=CertifyConfig(delta=Q(1, 10)))
    rep = eps_determining_certify(q)
    assert rep.kind == "counterexample"
    assert rep.counterexample.violation >= Q(9, 10)
    assert verify_pair(q, rep.counterexample.a,
                       rep.counterexample.a_prime) is not None


def test_certify_tight_rho_certificate():
    # 1/N + 2 rho < eps leaves no room for violating pairs.
    q = _truncation_query(12, (Q(1, 100), Q(1, 100)), ONE,
                          certify=CertifyConfig(delta=Q(1, 40)))
    rep = eps_determining_certify(q)
    assert rep.kind == "certificate"


def test_certify_monotone_in_eps():
    # A certificate at eps stays a certificate at any larger eps.
    base = _d1_query(certify=CertifyConfig(delta=Q(1, 10)))
    assert eps_determining_certify(base).kind == "certificate"
    wider = DeterminingQuery(base.system, base.gen, base.rho, ONE,
                             base.eval_stage, certify=base.certify)
    assert eps_determining_certify(wider).kind == "certificate"


def test_certify_monotone_in_rho():
    # Shrinking rho only removes candidate pairs: never flips a
    # certificate into a counterexample.
    base = _d1_query(certify=CertifyConfig(delta=Q(1, 10)))
    assert eps_determining_certify(base).kind == "certificate"
    tight = DeterminingQuery(base.system, base.gen,
                             RhoSchedule((Q(1, 8), Q(1, 8))), base.eps,
                             base.eval_stage, certify=base.certify)
    assert eps_determining_certify(tight).kind != "counterexample"


def test_search_certify_agreement_random():
    rng = random.Random(11)
    for trial in range(6):
        M = rng.randint(3, 5)
        rho = Q(rng.randint(1, 6), 12)
        eps = Q(rng.randint(1, 8), 8)
        q = _truncation_query(M, (rho,), eps,
                              search=SearchConfig(seed=trial),
                              certify=CertifyConfig(delta=Q(1, 8),
                                                    refine_rounds=2))
        cert = eps_determining_certify(q)
        found = eps_determining_search(q)
        if cert.kind == "certificate":
            assert found.kind == "not-found"
        elif cert.kind == "counterexample":
            assert verify_pair(q, cert.counterexample.a,
                               cert.counterexample.a_prime) is not None


# ---------------------------------------------------------------------------
# Sequence diagnostics

def _ones_prefix_sequence(M, extra=3):
    sys_ = linf_drop_system(M)
    return sys_, [compatible_from_tail(
        sys_, [ONE] * min(k, M) + [ZERO] * (M - min(k, M)))
        for k in range(1, M + extra + 1)]


def test_dp_diagnostic_ones_prefix():
    _, seq = _ones_prefix_sequence(6)
    rep = dp_diagnostic(seq)
    # Sup norm of a 0/1 prefix equals 1 at every stage it survives to.
    assert all(u == 0 for u in rep.uniformity)
    assert rep.uniform_within_tol
    assert rep.blocks == tuple(range(1, 7))


def test_dp_profile_nonincreasing_random():
    sys_ = l1_drop_system(6)
    rng = random.Random(13)
    seq = [compatible_from_tail(
        sys_, [Q(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(6)])
        for _ in range(8)]
    rep = dp_diagnostic(seq)
    for i in range(len(rep.uniformity) - 1):
        assert rep.uniformity[i] >= rep.uniformity[i + 1]
    assert rep.uniformity[-1] == 0  # top-stage projection is the identity


def test_anp_diagnostic_converging_sequence():
    sys_ = l1_drop_system(5)
    e1 = (ONE, ZERO, ZERO, ZERO, ZERO)
    seq = []
    for k in range(8):
        tail = list(e1)
        tail[1] = Q(1, 2**(k + 30))   # below the default tolerance quickly
        seq.append(compatible_from_tail(sys_, tail))
    rep = anp_diagnostic(seq)
    assert rep.weak_star_convergent
    assert rep.norm_converges
    assert rep.strong_converges
    assert all(r >= 0 for r in rep.norm_residuals)


def test_anp_diagnostic_divergent_sequence():
    sys_ = l1_drop_system(4)
    seq = [compatible_from_tail(sys_, [Q((-1)**k), ZERO, ZERO, ZERO])
           for k in range(6)]
    rep = anp_diagnostic(seq)
    assert not rep.weak_star_convergent
    assert not rep.norm_converges


def test_equivalence_witness_ones_prefix():
    _, seq = _ones_prefix_sequence(6)
    rep = equivalence_witness(seq)
    assert rep.agree
    assert rep.identity_holds
    assert all(t == 0 for t in rep.terms)


def test_equivalence_identity_exact_random():
    sys_ = l1_drop_system(5)
    rng = random.Random(17)
    base = [Q(rng.randint(-2, 2)) for _ in range(5)]
    seq = [compatible_from_tail(sys_, base) for _ in range(4)]
    # Perturb early terms only; the tail is constant, so the sequence
    # converges stagewise and the witness identity must hold exactly.
    seq[0] = compatible_from_tail(
        sys_, [b + Q(1, 3) for b in base])
    rep = equivalence_witness(seq)
    assert rep.agree
    assert rep.identity_holds
    assert sum(rep.terms) == rep.terms[0] + rep.terms[1] + rep.terms[2]


def test_equivalence_witness_requires_convergence():
    sys_ = l1_drop_system(4)
    seq = [compatible_from_tail(sys_, [Q((-1)**k), ZERO, ZERO, ZERO])
           for k in range(6)]
    with pytest.raises(ValueError):
        equivalence_witness(seq)


# ---------------------------------------------------------------------------
# Quotient-restriction check and the rescaled presentation

def test_gfda_passes_on_tight_truncation():
    sys_ = l1_drop_system(12)
    gen = generator_from_tail(
        sys_, [[ONE, ZERO], [ZERO, ONE]] + [[ZERO, ZERO]] * 10)
    q = DeterminingQuery(sys_, gen, RhoSchedule((Q(1, 100), Q(1, 100))),
                         ONE, 12, certify=CertifyConfig(delta=Q(1, 40)))
    rep = gfda_check(sys_, gen, 2, q)
    assert all(v.verdict for v in rep.stage_verdicts)
    assert rep.certify.kind == "certificate"
    assert rep.passes


def test_gfda_fails_on_obstructed_slice():
    q = prefix_obstruction_query(2, certify=CertifyConfig(delta=Q(1, 10)))
    rep = gfda_check(q.system, q.gen, 2, q)
    assert all(v.verdict for v in rep.stage_verdicts)
    assert rep.certify.kind == "counterexample"
    assert not rep.passes


def _flip_instance():
    sys_ = linf_drop_system(3)
    gen = SubspaceGenerator(sys_, [
        [[ONE, ZERO]],
        [[ONE, ZERO], [ZERO, ONE]],
        [[ONE, ZERO], [ZERO, ONE], [ONE, ONE]]])
    return sys_, gen


def test_gfda_detects_non_quotient_restriction():
    sys_, gen = _flip_instance()
    q = DeterminingQuery(sys_, gen, RhoSchedule((HALF, HALF)), Q(1, 4), 3,
                         certify=CertifyConfig(delta=Q(1, 10)))
    rep = gfda_check(sys_, gen, 3, q)
    # Stage 2 restriction shrinks (1, 1): its unique preimage has twice
    # the norm, so the quotient verdict fails there.
    assert rep.stage_verdicts[0].verdict
    assert not rep.stage_verdicts[1].verdict
    assert not rep.passes


def test_rescaled_presentation_flips_quotient_verdicts():
    sys_, gen = _flip_instance()
    rsys, rgen = rescaled_image_presentation(sys_, gen)
    q = DeterminingQuery(rsys, rgen, RhoSchedule((HALF, HALF)), Q(1, 4), 3,
                         certify=CertifyConfig(delta=Q(1, 10)))
    rep = gfda_check(rsys, rgen, 3, q)
    assert all(v.verdict for v in rep.stage_verdicts)
    # The rescaling enlarges early-stage norms and manufactures a
    # genuine violating pair.
    assert rep.certify.kind == "counterexample"
    cx = rep.certify.counterexample
    assert verify_pair(q, cx.a, cx.a_prime) is not None
    assert cx.violation >= Q(1, 4)


def test_rescaled_presentation_top_norm_unchanged():
    sys_, gen = _flip_instance()
    rsys, rgen = rescaled_image_presentation(sys_, gen)
    dom = parameter_space(gen, 3)
    rdom = parameter_space(rgen, 3)
    rng = random.Random(19)
    for _ in range(20):
        a = tuple(Q(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(2))
        assert norm_eval(dom, a) == norm_eval(rdom, a)
