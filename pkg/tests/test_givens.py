import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import similarity_2x2, uniformizing_angle_mp
from streamhash.errors import AdmissibilityViolated, DegeneratePlane, IndexOutOfRange
from streamhash.givens import (
    GivensParams,
    TwoByTwoProblem,
    apply_right_transpose,
    apply_two_sided,
    rotate_block,
    solve_uniformizing_rotation,
)

# (c, s, a', d', b') from the 50-digit oracle in oracles.uniformizing_angle_mp
FROZEN = {
    (2.0, 0.0, 0.0, 1.0): (0.7071067811865476, -0.7071067811865476, 1.0, 1.0, -1.0),
    (3.0, 1.0, 1.0, 2.0): (0.3826834323650898, -0.9238795325112867, 2.0, 2.0, -1.4142135623730951),
}


def test_identity_case():
    sol = solve_uniformizing_rotation(TwoByTwoProblem(1.0, 1.0, 0.0, 1.0))
    assert tuple(sol) == (1.0, 0.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("args", list(FROZEN))
def test_frozen_solutions(args):
    sol = solve_uniformizing_rotation(TwoByTwoProblem(*args))
    np.testing.assert_allclose(sol, FROZEN[args], atol=1e-15)
    # and the rotation really produces the claimed block
    np.testing.assert_allclose(similarity_2x2(args[0], args[1], args[2], sol.c, sol.s),
                               (sol.a_new, sol.d_new, sol.b_new), atol=1e-14)


def test_oracle_reproduces_frozen_values():
    for args, expected in FROZEN.items():
        np.testing.assert_allclose(uniformizing_angle_mp(*args), expected, atol=1e-15)


def test_intermediate_quantities_example():
    # a=3, d=1, b=1, tau=2: c1 = s1 = 1/sqrt2, c2 = 0, s2 = 1, so b' = -r = -sqrt2
    p = TwoByTwoProblem(3.0, 1.0, 1.0, 2.0)
    assert p.radius == pytest.approx(math.sqrt(2))
    assert solve_uniformizing_rotation(p).b_new == pytest.approx(-math.sqrt(2), abs=1e-15)


def test_inadmissible_tau():
    with pytest.raises(AdmissibilityViolated):
        solve_uniformizing_rotation(TwoByTwoProblem(2.0, 0.0, 0.0, 5.0))


def test_degenerate_plane():
    with pytest.raises(DegeneratePlane):
        solve_uniformizing_rotation(TwoByTwoProblem(1.0, 1.0, 0.0, 2.0))


def test_interval_endpoints_are_reachable():
    p = TwoByTwoProblem(4.0, -1.0, 0.7, 0.0)
    for tau in p.admissible_interval():
        sol = solve_uniformizing_rotation(TwoByTwoProblem(p.a, p.d, p.b, tau))
        a_new, _, b_new = similarity_2x2(p.a, p.d, p.b, sol.c, sol.s)
        assert a_new == pytest.approx(tau, abs=1e-12)
        assert abs(b_new) < 1e-6


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(a=finite, d=finite, b=finite, u=st.floats(0.0, 1.0))
def test_closed_form_matches_explicit_product(a, d, b, u):
    p = TwoByTwoProblem(a, d, b, 0.0)
    lo, hi = p.admissible_interval()
    if hi - lo < 1e-9:
        return
    tau = lo + u * (hi - lo)
    sol = solve_uniformizing_rotation(TwoByTwoProblem(a, d, b, tau))
    assert sol.c ** 2 + sol.s ** 2 == pytest.approx(1.0, abs=1e-14)
    ref = similarity_2x2(a, d, b, sol.c, sol.s)
    scale = max(abs(a), abs(d), abs(b), abs(tau), 1.0)
    assert np.allclose((sol.a_new, sol.d_new, sol.b_new), ref, rtol=0, atol=1e-10 * scale)
    assert sol.a_new + sol.d_new == pytest.approx(a + d, abs=1e-12 * scale)


def test_rotate_block_matches_dense_product():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a, d, b, t = rng.normal(size=4)
        np.testing.assert_allclose(rotate_block(a, d, b, math.cos(t), math.sin(t)),
                                   similarity_2x2(a, d, b, math.cos(t), math.sin(t)), atol=1e-13)


def test_givens_params_validation():
    with pytest.raises(IndexOutOfRange):
        GivensParams(2, 2, 1.0, 0.0)
    with pytest.raises(IndexOutOfRange):
        GivensParams(-1, 0, 1.0, 0.0)
    with pytest.raises(IndexOutOfRange):
        apply_two_sided(np.eye(3), GivensParams(3, 0, 1.0, 0.0))


def test_apply_two_sided_identity_rotation():
    S = np.arange(16.0).reshape(4, 4)
    S = S + S.T
    out = apply_two_sided(S.copy(), GivensParams(2, 1, 1.0, 0.0))
    np.testing.assert_array_equal(out, S)


def test_apply_two_sided_example():
    p = TwoByTwoProblem(3.0, 1.0, 1.0, 2.0)
    sol = solve_uniformizing_rotation(p)
    # a sits at (j, j) = (0, 0), d at (i, i) = (1, 1)
    out = apply_two_sided(np.array([[3.0, 1.0], [1.0, 1.0]]), GivensParams(1, 0, sol.c, sol.s))
    r2 = math.sqrt(2)
    np.testing.assert_allclose(out, [[2.0, -r2], [-r2, 2.0]], atol=1e-14)


def test_apply_two_sided_matches_dense_and_keeps_trace():
    rng = np.random.default_rng(11)
    for _ in range(100):
        A = rng.normal(size=(8, 8))
        S = A + A.T
        i, j = rng.choice(8, size=2, replace=False)
        t = rng.uniform(-np.pi, np.pi)
        g = GivensParams(int(i), int(j), math.cos(t), math.sin(t))
        G = g.matrix(8)
        out = apply_two_sided(S.copy(), g)
        np.testing.assert_allclose(out, G @ S @ G.T, atol=1e-12)
        assert np.array_equal(out, out.T)
        assert np.trace(out) == pytest.approx(np.trace(S), abs=1e-12)


def test_apply_right_transpose_quarter_turn():
    out = apply_right_transpose(np.eye(2), GivensParams(1, 0, 0.0, 1.0))
    np.testing.assert_array_equal(out, [[0.0, 1.0], [-1.0, 0.0]])


def test_apply_right_transpose_identity():
    np.testing.assert_array_equal(apply_right_transpose(np.eye(5), GivensParams(3, 1, 1.0, 0.0)), np.eye(5))


def test_accumulated_rotations_stay_orthogonal():
    rng = np.random.default_rng(0)
    R = np.eye(16)
    for _ in range(1000):
        i, j = rng.choice(16, size=2, replace=False)
        t = rng.uniform(-np.pi, np.pi)
        apply_right_transpose(R, GivensParams(int(i), int(j), math.cos(t), math.sin(t)))
    assert np.max(np.abs(R @ R.T - np.eye(16))) < 1e-10


def test_right_transpose_matches_dense():
    rng = np.random.default_rng(2)
    R = rng.normal(size=(6, 6))
    g = GivensParams(4, 1, 0.6, -0.8)
    np.testing.assert_allclose(apply_right_transpose(R.copy(), g), R @ g.matrix(6).T, atol=1e-14)
