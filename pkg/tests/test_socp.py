import cvxpy as cp
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from robust_vlc.socp import (NONNEG, SOC, ConeLayout, ConeProgram, NTScaling, SolverSettings,
                             Status, read_program, solve, write_program)
from robust_vlc.socp.planted import planted_infeasible, planted_optimal, random_cones
from robust_vlc.socp.solver import presolve


def program(c, A, b, cones):
    return ConeProgram(c=np.asarray(c, float), A=sp.csr_matrix(np.asarray(A, float)),
                       b=np.asarray(b, float), cones=tuple(cones))


def cvxpy_value(prog: ConeProgram) -> float:
    """Independent answer from Clarabel through cvxpy."""
    A = prog.A.toarray()
    x = cp.Variable(prog.shape[1])
    s = prog.b - A @ x
    cons, row = [], 0
    for kind, size in prog.cones:
        blk = s[row:row + size]
        cons.append(blk >= 0 if kind == NONNEG else cp.SOC(blk[0], blk[1:]))
        row += size
    pr = cp.Problem(cp.Minimize(prog.c @ x), cons)
    pr.solve(solver=cp.CLARABEL)
    assert pr.status == cp.OPTIMAL
    return float(pr.value)


# -- hand examples -------------------------------------------------------------

def test_one_dim_lp():
    # minimize x s.t. x >= 1, written as -x + s = -1
    r = solve(program([1.0], [[-1.0]], [-1.0], [(NONNEG, 1)]))
    assert r.status == Status.OPTIMAL
    assert r.primal_x[0] == pytest.approx(1.0, abs=1e-7)


def test_norm_of_fixed_vector():
    # minimize t s.t. ||(3, 4)|| <= t: s = (t, 3, 4) in SOC
    r = solve(program([1.0], [[-1.0], [0.0], [0.0]], [0.0, 3.0, 4.0], [(SOC, 3)]))
    assert r.status == Status.OPTIMAL
    assert r.objective_value == pytest.approx(5.0, abs=1e-7)


def test_equalities_as_paired_inequalities():
    # variables (t, x, y); x = 3 and y = 4 each as two opposite rows
    A = [[0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
         [-1, 0, 0], [0, -1, 0], [0, 0, -1]]
    b = [3, -3, 4, -4, 0, 0, 0]
    r = solve(program([1, 0, 0], A, b, [(NONNEG, 4), (SOC, 3)]))
    assert r.status == Status.OPTIMAL
    np.testing.assert_allclose(r.primal_x, [5, 3, 4], atol=1e-6)


def test_contradictory_bounds_are_primal_infeasible():
    # x >= 1 and -x >= 0
    r = solve(program([0.0], [[-1.0], [1.0]], [-1.0, 0.0], [(NONNEG, 2)]))
    assert r.status == Status.PRIMAL_INFEASIBLE
    z = r.certificate
    assert np.all(z >= -1e-12)
    assert r.certificate_residual <= 1e-8
    assert z @ np.array([-1.0, 0.0]) < 0


def test_unbounded_is_dual_infeasible():
    # minimize -x s.t. x >= 0
    r = solve(program([-1.0], [[-1.0]], [0.0], [(NONNEG, 1)]))
    assert r.status == Status.DUAL_INFEASIBLE
    assert r.certificate[0] > 0


def test_iteration_cap_reports_max_iterations():
    rng = np.random.default_rng(3)
    prog, _, _ = planted_optimal(rng)
    r = solve(prog, SolverSettings(max_iter=2))
    assert r.status == Status.MAX_ITERATIONS
    assert r.iterations == 2


# -- planted instances and the external oracle ----------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_planted_optimum_recovered(seed):
    prog, xs, opt = planted_optimal(np.random.default_rng(seed))
    r = solve(prog)
    assert r.status == Status.OPTIMAL
    assert abs(r.objective_value - opt) <= 1e-6 * max(1.0, abs(opt))
    # weak duality and the optimality certificate
    assert r.objective_value >= r.dual_objective - 1e-8 * max(1.0, abs(opt))
    assert max(r.residuals.values()) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_planted_infeasible_certified(seed):
    prog, _ = planted_infeasible(np.random.default_rng(100 + seed))
    r = solve(prog)
    assert r.status == Status.PRIMAL_INFEASIBLE
    z = r.certificate
    lay = prog.layout()
    assert lay.min_eig(z) >= -1e-9 * np.linalg.norm(z)
    assert float(prog.b @ z) == pytest.approx(-1.0)
    assert np.linalg.norm(prog.A.T @ z) <= 1e-8


@pytest.mark.parametrize("seed", range(8))
def test_matches_clarabel_on_random_programs(seed):
    rng = np.random.default_rng(500 + seed)
    cones = random_cones(rng)
    lay = ConeLayout.from_cones(cones)
    m = lay.m
    n = int(rng.integers(2, m))
    A = rng.normal(size=(m, n))
    # strictly feasible primal and dual, so the optimum is attained
    s0 = rng.normal(size=m)
    s0 += (1.0 - lay.min_eig(s0)) * lay.identity()
    z0 = rng.normal(size=m)
    z0 += (1.0 - lay.min_eig(z0)) * lay.identity()
    prog = program(-A.T @ z0, A, A @ rng.normal(size=n) + s0, cones)
    r = solve(prog)
    assert r.status == Status.OPTIMAL
    ref = cvxpy_value(prog)
    assert r.objective_value == pytest.approx(ref, rel=1e-6, abs=1e-6)


@given(st.integers(0, 2**31), st.floats(1e-3, 1e3))
def test_row_block_scaling_keeps_optimum(seed, factor):
    rng = np.random.default_rng(seed)
    prog, _, opt = planted_optimal(rng)
    A, b = prog.A.toarray(), prog.b.copy()
    # scale one whole cone block
    row = 0
    pick = int(rng.integers(len(prog.cones)))
    for i, (_, size) in enumerate(prog.cones):
        if i == pick:
            A[row:row + size] *= factor
            b[row:row + size] *= factor
        row += size
    r = solve(program(prog.c, A, b, prog.cones))
    assert r.status == Status.OPTIMAL
    assert abs(r.objective_value - opt) <= 1e-6 * max(1.0, abs(opt))


# -- presolve, cone algebra and text I/O --------------------------------------

def test_presolve_drops_zero_and_duplicate_rows():
    A = [[1, 0], [0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]]
    b = [2, 1, 1, 5, 0, 0]
    prog = program([-1, -1], A, b, [(NONNEG, 6)])
    red = presolve(prog)
    assert red.A.shape[0] == 4
    r = solve(prog)
    assert r.status == Status.OPTIMAL
    assert r.objective_value == pytest.approx(-6.0, abs=1e-6)
    assert r.z.shape == (6,) and r.z[1] == 0.0


def test_presolve_leaves_cone_rows():
    prog = program([1.0], [[-1.0], [0.0], [0.0]], [0.0, 0.0, 0.0], [(SOC, 3)])
    assert presolve(prog).A.shape[0] == 3


def test_program_validation():
    with pytest.raises(ValueError):
        program([1.0], [[1.0]], [1.0, 2.0], [(NONNEG, 2)])
    with pytest.raises(ValueError):
        program([1.0], [[1.0]], [1.0], [(SOC, 1)])


def interior(lay, rng):
    u = rng.normal(size=lay.m)
    return u + (0.5 - lay.min_eig(u)) * lay.identity()


@given(st.integers(0, 2**31))
def test_nt_scaling_identities(seed):
    rng = np.random.default_rng(seed)
    lay = ConeLayout.from_cones(random_cones(rng))
    s, z = interior(lay, rng), interior(lay, rng)
    W = NTScaling(lay, s, z)
    lam = W.apply(z)
    np.testing.assert_allclose(lam, W.apply(s, inverse=True), rtol=1e-9, atol=1e-9)
    u = rng.normal(size=lay.m)
    np.testing.assert_allclose(W.apply(W.apply(u), inverse=True), u, rtol=1e-9, atol=1e-9)
    M = rng.normal(size=(lay.m, 3))
    np.testing.assert_allclose(W.apply(M)[:, 1], W.apply(M[:, 1]), rtol=1e-12, atol=1e-12)
    assert lay.min_eig(lam) > 0


@given(st.integers(0, 2**31))
def test_jordan_division_inverts_product(seed):
    rng = np.random.default_rng(seed)
    lay = ConeLayout.from_cones(random_cones(rng))
    lam = interior(lay, rng)
    u = rng.normal(size=lay.m)
    np.testing.assert_allclose(lay.divide(lam, lay.product(lam, u)), u, rtol=1e-8, atol=1e-8)


@given(st.integers(0, 2**31))
def test_max_step_reaches_boundary(seed):
    rng = np.random.default_rng(seed)
    lay = ConeLayout.from_cones(random_cones(rng))
    lam = interior(lay, rng)
    d = rng.normal(size=lay.m) * 3
    a = lay.max_step(lam, d)
    if np.isfinite(a):
        assert lay.min_eig(lam + 0.999 * a * d) > -1e-10
        assert lay.min_eig(lam + 1.001 * a * d) < 1e-10
    else:
        assert lay.min_eig(lam + 1e6 * d) >= -1e-6


def test_text_round_trip(tmp_path):
    prog, _, _ = planted_optimal(np.random.default_rng(8))
    write_program(prog, tmp_path / "p.txt")
    back = read_program(tmp_path / "p.txt")
    assert back.cones == prog.cones
    np.testing.assert_array_equal(back.c, prog.c)
    np.testing.assert_array_equal(back.b, prog.b)
    np.testing.assert_array_equal(back.A.toarray(), prog.A.toarray())
