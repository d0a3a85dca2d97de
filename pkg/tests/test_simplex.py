import random

from banachlim.scalar import Q, ONE
from banachlim.simplex import (LinearProgram, OPTIMAL, INFEASIBLE, UNBOUNDED,
                               solve_standard)


def test_standard_basic():
    # min -x - y, x + y <= 1 as equality with slack: x + y + s = 1
    status, x, value = solve_standard(
        [Q(-1), Q(-1), Q(0)],
        [[ONE, ONE, ONE]],
        [ONE])
    assert status == OPTIMAL
    assert value == -1


def test_infeasible():
    status, _, _ = solve_standard([Q(0)], [[ONE], [ONE]], [Q(1), Q(2)])
    assert status == INFEASIBLE


def test_unbounded():
    status, _, _ = solve_standard([Q(-1), Q(0)], [[Q(0), ONE]], [ONE])
    assert status == UNBOUNDED


def test_builder_free_vars_and_le():
    # min |u| via u = u+ - u-: min t, -t <= u <= t, u = -5
    lp = LinearProgram()
    u = lp.var(free=True)
    t = lp.var()
    lp.add_eq({u: ONE}, Q(-5))
    lp.add_le({u: ONE, t: -ONE}, Q(0))
    lp.add_le({u: -ONE, t: -ONE}, Q(0))
    lp.minimize({t: ONE})
    status, vals, value = lp.solve()
    assert status == OPTIMAL
    assert vals[u] == -5
    assert value == 5


def test_degenerate_no_cycling():
    # Beale's cycling example; Bland's rule must terminate at -1/20.
    lp = LinearProgram()
    xs = [lp.var() for _ in range(4)]
    lp.add_le({xs[0]: Q(1, 4), xs[1]: Q(-60), xs[2]: Q(-1, 25), xs[3]: Q(9)},
              Q(0))
    lp.add_le({xs[0]: Q(1, 2), xs[1]: Q(-90), xs[2]: Q(-1, 50), xs[3]: Q(3)},
              Q(0))
    lp.add_le({xs[2]: ONE}, ONE)
    lp.minimize({xs[0]: Q(-3, 4), xs[1]: Q(150), xs[2]: Q(-1, 50), xs[3]: Q(6)})
    status, _, value = lp.solve()
    assert status == OPTIMAL
    assert value == Q(-1, 20)


def test_random_lp_against_scipy():
    import numpy as np
    from scipy.optimize import linprog
    rng = random.Random(7)
    for _ in range(25):
        m, n = rng.randint(1, 3), rng.randint(2, 5)
        A = [[Q(rng.randint(-4, 4)) for _ in range(n)] for _ in range(m)]
        x0 = [Q(rng.randint(0, 3)) for _ in range(n)]   # feasible by design
        b = [sum(A[i][j] * x0[j] for j in range(n)) for i in range(m)]
        c = [Q(rng.randint(-3, 3)) for _ in range(n)]
        status, x, value = solve_standard(c, A, b)
        res = linprog([float(v) for v in c],
                      A_eq=np.array([[float(v) for v in row] for row in A]),
                      b_eq=np.array([float(v) for v in b]),
                      bounds=[(0, None)] * n, method="highs")
        if status == OPTIMAL:
            assert res.status == 0
            assert abs(float(value) - res.fun) < 1e-7
        elif status == UNBOUNDED:
            assert res.status == 3
        else:
            assert res.status == 2
