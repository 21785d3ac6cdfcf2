import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specflow.assemble import assemble_dense, assemble_implicit
from specflow.cube import ImageCube
from specflow.deriv import accumulate_products
from specflow.errors import ConvergenceError, DegenerateDataError, EstimationInputError
from specflow.metrics import compare_fields, default_border, merit
from specflow.solve import estimate, solve, solve_direct, solve_iterative
from specflow.spectral import SpectralVelocity, evaluate, mean_flow, symmetrize
from specflow.synth import make_texture

from helpers import shifted


def translation_cube(dx, dy, frames=2, size=64, seed=0):
    tex = 100.0 * make_texture(size, size, 6.0, seed=seed)
    return ImageCube(np.stack([shifted(tex, dx * t, dy * t) for t in range(frames)]))


def test_constant_cube_is_degenerate():
    cube = ImageCube(np.full((3, 32, 32), 10.0))
    for solver in ("direct", "iterative"):
        with pytest.raises(DegenerateDataError) as info:
            estimate(cube, 2, solver=solver)
        assert "gradient" in info.value.cause


def test_one_directional_texture_names_axis():
    x = np.arange(32)[None, :].repeat(32, 0)
    frame = np.cos(2 * np.pi * 3 * x / 32)
    cube = ImageCube(np.stack([frame, frame]))
    with pytest.raises(DegenerateDataError) as info:
        estimate(cube, 1)
    assert "y" in info.value.cause


def test_recovers_in_span_field(small_flow):
    cube, truth = small_flow
    v, rep = estimate(cube, 2)
    m = compare_fields(v, truth, default_border(2, 2, 64, 64))
    assert m.relative_error < 0.01 and m.correlation > 0.999
    assert rep.residual <= 1e-8 and rep.method == "direct" and rep.iterations == 0


def test_single_mode_matches_closed_form():
    cube = translation_cube(0.3, -0.15)
    p = accumulate_products(cube)
    A = np.array([[p.sxx.sum(), p.sxy.sum()], [p.sxy.sum(), p.syy.sum()]])
    u = np.linalg.solve(A, -np.array([p.stx.sum(), p.sty.sum()]))
    v, _ = solve_direct(assemble_dense(p, 0, 0))
    assert np.allclose(mean_flow(v), u, rtol=1e-10)


def test_translation_mean_flow():
    v, _ = estimate(translation_cube(0.2, 0.1), 4)
    ux, uy = mean_flow(v)
    assert abs(ux - 0.2) < 0.01 and abs(uy - 0.1) < 0.005


def test_static_cube_gives_zero_field():
    tex = make_texture(32, 32, 5.0, seed=1)
    v, rep = estimate(ImageCube(np.stack([tex] * 4)), 3)
    vx, vy = evaluate(v)
    assert np.sqrt(np.mean(vx ** 2 + vy ** 2)) < 1e-10


def test_time_reversal_negates(small_flow):
    cube, _ = small_flow
    v, _ = estimate(cube, 2)
    w, _ = estimate(cube.reversed(), 2)
    assert np.linalg.norm((v + w).to_vector()) < 1e-8 * np.linalg.norm(v.to_vector())


def test_iterative_agrees_with_direct(small_flow):
    cube, _ = small_flow
    v, _ = estimate(cube, 3, solver="direct")
    w, rep = estimate(cube, 3, solver="iterative", tol=1e-8)
    assert compare_fields(w, v).relative_error < 1e-6
    assert rep.residual <= 1e-8 and rep.iterations > 0


def test_looser_tolerance_fewer_iterations(small_flow):
    p = accumulate_products(small_flow[0])
    sys_ = assemble_implicit(p, 3, 3)
    _, loose = solve_iterative(sys_, tol=1e-2)
    _, tight = solve_iterative(sys_, tol=1e-8)
    assert loose.iterations < tight.iterations


def test_max_iter_one_raises_with_best(small_flow):
    sys_ = assemble_implicit(accumulate_products(small_flow[0]), 3, 3)
    with pytest.raises(ConvergenceError) as info:
        solve_iterative(sys_, tol=1e-12, max_iter=1)
    assert info.value.residual > 1e-12 and info.value.best.shape == (sys_.dim,)
    assert info.value.iterations == 1


def test_direct_needs_dense(small_flow):
    sys_ = assemble_implicit(accumulate_products(small_flow[0]), 1, 1)
    with pytest.raises(ValueError):
        solve_direct(sys_)
    with pytest.raises(ValueError):
        solve(sys_, "qr")


def test_no_pairs_raises():
    cube = ImageCube(np.ones((2, 16, 16)), valid=[True, False])
    with pytest.raises(EstimationInputError):
        estimate(cube, 1)


def test_intensity_scaling_invariance(small_flow):
    cube, _ = small_flow
    v, _ = estimate(cube, 2)
    w, _ = estimate(cube.replace(frames=cube.frames * 37.5), 2)
    assert np.allclose(w.to_vector(), v.to_vector(), atol=1e-10 * np.abs(v.to_vector()).max())


def test_solution_is_symmetric(small_flow):
    v, rep = estimate(small_flow[0], 3)
    assert symmetrize(v.alpha)[1] < 1e-12 and symmetrize(v.beta)[1] < 1e-12
    assert rep.symmetry_deviation < 1e-8


def _real_directions(n_x, n_y, X, Y):
    """Unit-RMS symmetric perturbations: one per real degree of freedom."""
    shape = (2 * n_y + 1, 2 * n_x + 1)
    for comp in range(2):
        for j in range(-n_y, n_y + 1):
            for i in range(-n_x, n_x + 1):
                if (j, i) < (0, 0):
                    continue
                for phase in (1.0, 1j):
                    if (i, j) == (0, 0) and phase == 1j:
                        continue
                    a = np.zeros(shape, complex)
                    a[j + n_y, i + n_x] += phase
                    a[n_y - j, n_x - i] += np.conj(phase)
                    a /= np.sqrt(np.sum(np.abs(a) ** 2))
                    z = np.zeros(shape, complex)
                    yield SpectralVelocity(n_x, n_y, X, Y, *((a, z) if comp == 0 else (z, a)))


def test_gradient_of_merit_vanishes(small_flow):
    cube, _ = small_flow
    v, _ = estimate(cube, 2)
    chi2, chi0 = merit(cube, v)
    eps = 1e-3
    worst = 0.0
    for d in _real_directions(2, 2, 64, 64):
        g = (merit(cube, v + d.scaled(eps))[0] - merit(cube, v - d.scaled(eps))[0]) / (2 * eps)
        worst = max(worst, abs(g))
    assert worst < 1e-6 * chi0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 16), n=st.integers(0, 3))
def test_direct_iterative_agree_random(seed, n):
    r = np.random.default_rng(seed)
    tex = 50 * make_texture(32, 32, 4.0, seed=seed)
    frames = np.stack([tex, shifted(tex, *r.uniform(-0.5, 0.5, 2))]) + r.standard_normal((2, 32, 32))
    p = accumulate_products(ImageCube(frames))
    v, _ = solve_direct(assemble_dense(p, n, n))
    w, _ = solve_iterative(assemble_implicit(p, n, n), tol=1e-9)
    assert compare_fields(w, v).field_distance <= 10 * 1e-9 * max(1.0, np.linalg.norm(v.to_vector())) * 10
