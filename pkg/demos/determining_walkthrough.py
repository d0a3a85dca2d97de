#!/usr/bin/env python3
"""The epsilon-determining check, end to end.

A subspace of an inverse limit is presented by a compatible family of
parameter maps g_i.  The determining check asks: if two parameter vectors
produce stage tuples that are both norm-concentrated in the first N stages
(within slacks rho_1 >= ... >= rho_N) and close at stage N, must their
stage-M images be within eps of each other (relative to the larger norm)?

Three ways to answer, demonstrated below on the canonical sup-norm
obstruction instance where the answer is "no":

  * search      - derivative-free multistart maximization of the violation;
                  sound (every counterexample is exactly re-verified) but
                  incomplete (not finding one certifies nothing).
  * certify     - an exhaustive grid sweep with Lipschitz margins; returns
                  a certificate, a counterexample, or an explicit
                  undecided-at-this-resolution report.
  * gfda_check  - per-stage quotient verdicts for the restricted bonding
                  maps, plus the determining verdict, plus the rescaled
                  image presentation that flips the quotient verdicts.
"""

from banachlim import (
    Q, to_float,
    prefix_obstruction_query, eps_determining_search,
    eps_determining_certify, verify_pair, gfda_check,
    rescaled_image_presentation, CertifyConfig, DeterminingQuery,
    RhoSchedule, SubspaceGenerator, generator_from_tail,
    l1_drop_system, linf_drop_system,
)


def main():
    print("Canonical obstruction query: N = 10, eps = 1/2")
    q = prefix_obstruction_query(10, eps=Q(1, 2))

    rep = eps_determining_search(q)
    print(f"  search:  {rep.kind}, violation = "
          f"{to_float(rep.counterexample.violation):.4f} "
          f"({rep.evaluations} float evaluations)")
    again = verify_pair(q, rep.counterexample.a, rep.counterexample.a_prime)
    print(f"  exact re-verification: violation = {again.violation} "
          f"(= {to_float(again.violation):.4f})")

    crep = eps_determining_certify(q)
    print(f"  certify: {crep.kind} after {crep.points_checked} grid points")
    if crep.counterexample is not None:
        print(f"           witness violation = {crep.counterexample.violation}")

    print()
    print("A one-parameter slice always certifies:")
    ONE, ZERO = Q(1), Q(0)
    sys1 = l1_drop_system(4)
    gen1 = generator_from_tail(sys1, [[ONE], [ZERO], [ZERO], [ZERO]])
    q1 = DeterminingQuery(sys1, gen1, RhoSchedule((Q(1, 2), Q(1, 2))),
                          Q(3, 4), 4, certify=CertifyConfig(delta=Q(1, 10)))
    print(f"  certify: {eps_determining_certify(q1).kind}")

    print()
    print("GFDA check on a crafted three-stage sup-norm system")
    system = linf_drop_system(3)
    gen = SubspaceGenerator(system, [
        [[ONE, ZERO]],
        [[ONE, ZERO], [ZERO, ONE]],
        [[ONE, ZERO], [ZERO, ONE], [ONE, ONE]]])
    query = DeterminingQuery(
        system, gen, RhoSchedule((Q(1, 2), Q(1, 2))), Q(1, 4), 3,
        certify=CertifyConfig(delta=Q(1, 10)))
    report = gfda_check(system, gen, 3, query)
    print("  restricted bonding maps are quotient maps, per stage:",
          [v.verdict for v in report.stage_verdicts])

    rsys, rgen = rescaled_image_presentation(system, gen)
    rquery = DeterminingQuery(
        rsys, rgen, RhoSchedule((Q(1, 2), Q(1, 2))), Q(1, 4), 3,
        certify=CertifyConfig(delta=Q(1, 10)))
    rreport = gfda_check(rsys, rgen, 3, rquery)
    print("  after rescaling the image presentation:                ",
          [v.verdict for v in rreport.stage_verdicts])
    print(f"  ...but the determining check now finds a "
          f"{rreport.certify.kind} (violation = "
          f"{rreport.certify.counterexample.violation}): repairing the "
          f"quotient property destroyed the determining property.")


if __name__ == "__main__":
    main()
