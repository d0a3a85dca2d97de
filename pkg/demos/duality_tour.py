#!/usr/bin/env python3
"""Exact duality on polytope norms: polars, bipolars, and how taking the
adjoint exchanges isometric embeddings with quotient maps.

Everything here is computed in exact rational arithmetic; every equality
printed below is literal equality of rationals, not a float tolerance.
"""

from banachlim import (
    Q, format_scalar,
    hpoly_space, vpoly_space, dual_space, norm_eval, ball_extreme_points,
    linear_map, adjoint, operator_norm, is_isometric_embedding,
    is_quotient_map,
)

ONE, ZERO = Q(1), Q(0)


def show(title):
    print()
    print(title)
    print("-" * len(title))


def main():
    # A hexagonal norm on R^2, given by its unit-ball vertices.
    hexagon = vpoly_space([
        (Q(1), Q(0)), (Q(1, 2), Q(1)), (-Q(1, 2), Q(1)),
        (-Q(1), Q(0)), (-Q(1, 2), -Q(1)), (Q(1, 2), -Q(1)),
    ], label="hex")

    show("A hexagonal norm and its dual")
    x = (Q(3, 4), Q(1, 2))
    print(f"||(3/4, 1/2)||_hex = {format_scalar(norm_eval(hexagon, x))}")
    dual = dual_space(hexagon)
    print(f"dual ball vertices ({dual.label}):")
    for v in ball_extreme_points(dual):
        print("   ", tuple(format_scalar(c) for c in v))

    show("Bipolar: the double dual returns the original norm")
    double = dual_space(dual)
    for x in [(Q(1), Q(0)), (Q(1, 3), -Q(2, 5)), (-Q(7, 2), Q(11, 4))]:
        n0, n2 = norm_eval(hexagon, x), norm_eval(double, x)
        tag = "==" if n0 == n2 else "!="
        print(f"  ||x|| = {format_scalar(n0)} {tag} {format_scalar(n2)}"
              f"   at x = {tuple(format_scalar(c) for c in x)}")

    show("Adjoint exchanges embeddings and quotients")
    # Pad the hexagon isometrically into R^3 with a sup-norm extra axis.
    padded = hpoly_space(
        [tuple(f) + (ZERO,) for f in ball_extreme_points(dual)]
        + [(ZERO, ZERO, ONE)], label="hex+axis")
    T = linear_map(hexagon, padded,
                   [[ONE, ZERO], [ZERO, ONE], [ZERO, ZERO]])
    emb = is_isometric_embedding(T)
    print(f"padding map is an isometric embedding: {emb.verdict}")
    Tstar = adjoint(T)
    quo = is_quotient_map(Tstar)
    print(f"its adjoint is a quotient map:         {quo.verdict}")
    print(f"operator norms: ||T|| = {format_scalar(operator_norm(T).value)},"
          f" ||T*|| = {format_scalar(operator_norm(Tstar).value)}")


if __name__ == "__main__":
    main()
