import numpy as np
import pytest

from shiftheat.oracle import compare_grids, fd_solve, pde_residual
from shiftheat.solver_residue import SolutionGrid


def _exact_sin(x, t):
    return np.exp(-4 * np.pi ** 2 * t) * np.sin(2 * np.pi * x)


def test_first_segment_accuracy(p0_sin):
    grid = fd_solve(p0_sin, nx=200, dt=1e-4, t_end=0.25)
    for t in (0.05, 0.1, 0.25):
        assert np.abs(grid.sample(t) - _exact_sin(grid.x, t)).max() <= 1e-4


def test_continuation_jump(p0_cos):
    grid = fd_solve(p0_cos, nx=120, dt=1e-3, t_end=1.0)
    left = grid.segments[0]["U"][-1]
    right = grid.segments[1]["U"][0]
    assert right[0] == pytest.approx(-1.0)  # u(0, w+) = -delta0 phi(1)
    assert abs(left[0] - np.exp(-4 * np.pi ** 2 * 0.5)) < 5e-5
    # interior restarts from the left-limit slice
    np.testing.assert_array_equal(left[1:-1], right[1:-1])


def test_shift_relations_hold_on_stored_slices(p0_cos):
    grid = fd_solve(p0_cos, nx=80, dt=2e-3, t_end=1.0)
    seg1, seg2 = grid.segments
    np.testing.assert_allclose(seg2["U"][1:, 0],
                               -p0_cos.delta0 * seg1["U"][1:, -1], atol=1e-14)
    np.testing.assert_allclose(seg2["U"][1:, -1],
                               -seg1["U"][1:, 0] / p0_cos.delta1, atol=1e-14)


def test_max_principle_within_segments(p0_cos):
    grid = fd_solve(p0_cos, nx=120, dt=1e-3, t_end=1.0)
    for seg in grid.segments:
        mx = np.abs(seg["U"]).max(axis=1)
        assert np.all(np.diff(mx) <= 1e-12)


def test_richardson_order(p0_sin):
    errs = []
    for nx, dt in ((100, 2e-3), (200, 1e-3)):
        grid = fd_solve(p0_sin, nx=nx, dt=dt, t_end=0.1)
        errs.append(max(np.abs(grid.sample(t) - _exact_sin(grid.x, t)).max()
                        for t in (0.05, 0.1)))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_stationary_rows_hold_exactly(p0_sin):
    grid = fd_solve(p0_sin, nx=60, dt=5e-3, t_end=0.5)
    U = grid.segments[0]["U"]
    h = grid.x[1] - grid.x[0]
    for j in (1, 10, 100):
        u = U[j]
        r2 = p0_sin.alpha0 * u[0] + p0_sin.beta0 * u[-1]
        d0 = (-1.5 * u[0] + 2 * u[1] - 0.5 * u[2]) / h
        d1 = (1.5 * u[-1] - 2 * u[-2] + 0.5 * u[-3]) / h
        r3 = p0_sin.alpha1 * d0 + p0_sin.beta1 * d1
        assert abs(r2) < 1e-12 and abs(r3) < 1e-11


def test_compare_grids_basics(p0_sin):
    grid = fd_solve(p0_sin, nx=60, dt=2e-3, t_end=0.2)
    ts = np.array([0.05, 0.1])
    sol = SolutionGrid(x=grid.x, t=ts,
                       u=np.stack([grid.sample(t) for t in ts]), method="copy")
    rep = compare_grids(sol, grid)
    assert rep.sup == 0.0 and rep.l2 == 0.0
    shifted = SolutionGrid(x=grid.x, t=ts, u=sol.u + 0.5, method="offset")
    rep2 = compare_grids(shifted, grid)
    assert rep2.sup == pytest.approx(0.5)
    assert rep2.l2 == pytest.approx(0.5)


def test_compare_grids_guards(p0_sin):
    grid = fd_solve(p0_sin, nx=60, dt=2e-3, t_end=0.2)
    other = SolutionGrid(x=grid.x[:-1], t=np.array([0.1]),
                         u=np.zeros((1, len(grid.x) - 1)), method="bad")
    with pytest.raises(ValueError, match="x grids"):
        compare_grids(other, grid)
    late = SolutionGrid(x=grid.x, t=np.array([5.0]),
                        u=np.zeros((1, len(grid.x))), method="late")
    with pytest.raises(ValueError):
        compare_grids(late, grid)


def test_pde_residual_on_exact_and_noise(p0_sin):
    x = np.linspace(0, 1, 201)
    ts = 0.05 + 1e-4 * np.arange(80)
    U = np.stack([_exact_sin(x, t) for t in ts])
    sol = SolutionGrid(x=x, t=ts, u=U, method="exact")
    assert pde_residual(sol, p0_sin) <= 1e-3
    rng = np.random.RandomState(0)
    noisy = SolutionGrid(x=x, t=ts, u=rng.uniform(-1, 1, U.shape),
                         method="noise")
    assert pde_residual(noisy, p0_sin) >= 1.0
    zero = SolutionGrid(x=x, t=ts, u=np.zeros_like(U), method="zero")
    assert pde_residual(zero, p0_sin) == 0.0


def test_residue_vs_fd_cross_method(p0_sin, p0_spectrum, x21):
    recs, meta = p0_spectrum
    from shiftheat.solver_residue import solve_residue
    tg = np.array([0.1, 0.3, 0.5])
    res = solve_residue(p0_sin, x21, tg, n_pairs=4, records=recs, meta=meta)
    grid = fd_solve(p0_sin, nx=200, dt=5e-4, t_end=0.5)
    ix = np.searchsorted(grid.x, x21)
    for j, t in enumerate(tg):
        assert np.abs(res.u[j] - grid.sample(t)[ix]).max() <= 5e-3
