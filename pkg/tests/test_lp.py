import random
from fractions import Fraction as F

from matchgames.lp import EQ, GE, LE, LinearProgram, game_value, solve_lp
from matchgames.gen import random_matrix


def test_bounded_max():
    lp = LinearProgram(objective=[F(1)])
    lp.add([F(1)], LE, F(3))
    result = solve_lp(lp)
    assert result.status == "optimal"
    assert result.value == 3
    assert result.solution == (F(3),)


def test_infeasible():
    lp = LinearProgram(objective=[F(1)])
    lp.add([F(1)], LE, F(-1))
    assert solve_lp(lp).status == "infeasible"


def test_unbounded():
    lp = LinearProgram(objective=[F(1)])
    assert solve_lp(lp).status == "unbounded"


def test_solution_satisfies_constraints_exactly():
    lp = LinearProgram(objective=[F(3), F(2)], sense="max")
    lp.add([F(1), F(1)], LE, F(4))
    lp.add([F(1), F(3)], LE, F(6))
    result = solve_lp(lp)
    x, y = result.solution
    assert x + y <= 4 and x + 3 * y <= 6
    assert 3 * x + 2 * y == result.value == 12


def test_equality_and_free_variables():
    lp = LinearProgram(
        objective=[F(2), F(-1)],
        sense="min",
        lower_bounds=[None, F(0)],
        upper_bounds=[None, F(5)],
    )
    lp.add([F(1), F(1)], EQ, F(4))
    lp.add([F(1), F(0)], GE, F(-10))
    result = solve_lp(lp)
    assert result.value == -7
    assert result.solution == (F(-1), F(5))


def test_game_value_matching_pennies():
    w, x, y = game_value(((F(1), F(-1)), (F(-1), F(1))))
    assert w == 0
    assert x == (F(1, 2), F(1, 2))
    assert y == (F(1, 2), F(1, 2))


def test_game_value_diagonal():
    w, x, y = game_value(((F(2), F(0)), (F(0), F(1))))
    assert w == F(2, 3)
    assert x == (F(1, 3), F(2, 3))
    # row payoffs against y* are exactly the value
    a = ((F(2), F(0)), (F(0), F(1)))
    for i in range(2):
        assert sum(a[i][j] * y[j] for j in range(2)) == F(2, 3)


def test_game_value_single_entry():
    w, x, y = game_value(((F(7),),))
    assert w == 7 and x == (F(1),) and y == (F(1),)


def test_saddle_inequalities_random():
    rng = random.Random(7)
    for _ in range(40):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        a = random_matrix(rng, rows, cols, max_denominator=2)
        w, x, y = game_value(a)
        for j in range(cols):  # min_t x*.A.t == w
            assert sum(x[i] * a[i][j] for i in range(rows)) >= w
        for i in range(rows):  # max_s s.A.y* == w
            assert sum(a[i][j] * y[j] for j in range(cols)) <= w
