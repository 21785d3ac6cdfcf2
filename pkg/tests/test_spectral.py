import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specflow.deriv import spatial_gradient
from specflow.errors import CubeFormatError
from specflow.spectral import (SpectralVelocity, evaluate, evaluate_at, evaluate_complex,
                               field_rms, grid_to_spectral, hexagonal_field, hexagonal_potential,
                               load_grid_csv, load_velocity, mean_flow, random_field,
                               save_grid_csv, save_velocity, subtract_mean_flow, symmetrize)


def naive_evaluate(v):
    """Direct double sum over modes and pixels."""
    y, x = np.mgrid[0:v.Y, 0:v.X].astype(float)
    vx = np.zeros((v.Y, v.X), complex)
    vy = np.zeros((v.Y, v.X), complex)
    for j in range(-v.n_y, v.n_y + 1):
        for i in range(-v.n_x, v.n_x + 1):
            e = np.exp(-2j * np.pi * (i * x / v.X + j * y / v.Y))
            a, b = v.amplitude(i, j)
            vx += a * e
            vy += b * e
    return vx, vy


def random_symmetric(n_x, n_y, X, Y, seed):
    r = np.random.default_rng(seed)
    shape = (2 * n_y + 1, 2 * n_x + 1)
    a, _ = symmetrize(r.standard_normal(shape) + 1j * r.standard_normal(shape))
    b, _ = symmetrize(r.standard_normal(shape) + 1j * r.standard_normal(shape))
    return SpectralVelocity(n_x, n_y, X, Y, a, b)


def test_mean_mode_only():
    v = SpectralVelocity.zeros(2, 1, 16, 12)
    alpha = v.alpha.copy()
    alpha[1, 2] = 0.7
    vx, vy = evaluate(v.with_amplitudes(alpha, v.beta))
    assert np.allclose(vx, 0.7) and not vy.any()


def test_conjugate_pair_gives_cosine():
    v = SpectralVelocity.zeros(1, 0, 20, 8)
    alpha = np.array([[0.5, 0, 0.5]], complex)
    vx, _ = evaluate(v.with_amplitudes(alpha, v.beta))
    x = np.arange(20)
    assert np.allclose(vx, np.cos(2 * np.pi * x / 20)[None, :], atol=1e-14)


def test_evaluate_matches_double_sum():
    v = random_symmetric(3, 4, 32, 32, seed=1)
    nx, ny = naive_evaluate(v)
    vx, vy = evaluate(v)
    scale = np.sqrt(np.mean(nx.real ** 2))
    assert np.abs(vx - nx.real).max() < 1e-10 * scale
    assert np.abs(vy - ny.real).max() < 1e-10 * scale
    assert np.abs(nx.imag).max() < 1e-10 * scale


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(SpectralVelocity.zeros(1, 1, 16, 16), 16, 17)


def test_evaluate_at_grid_points_matches_grid():
    v = random_symmetric(2, 3, 24, 20, seed=2)
    y, x = np.mgrid[0:20, 0:24].astype(float)
    px, py = evaluate_at(v, x, y)
    vx, vy = evaluate(v)
    assert np.allclose(px, vx, atol=1e-13) and np.allclose(py, vy, atol=1e-13)


def test_imaginary_residue_small():
    v = random_symmetric(4, 4, 32, 32, seed=3)
    cx, cy = evaluate_complex(v)
    assert np.abs(cx.imag).max() < 1e-10 * np.sqrt(np.mean(cx.real ** 2))


def test_mean_flow():
    assert mean_flow(SpectralVelocity.zeros(2, 2, 16, 16)) == (0.0, 0.0)
    v = SpectralVelocity.zeros(0, 0, 8, 8).with_amplitudes([[0.3]], [[0]])
    assert mean_flow(v) == (0.3, 0.0)


def test_subtract_mean_flow_zeroes_grid_mean():
    v = subtract_mean_flow(random_field(3, 3, 0.4, seed=5, X=32, Y=32))
    vx, vy = evaluate(v)
    assert abs(vx.mean()) < 1e-12 and abs(vy.mean()) < 1e-12


def test_random_field_rms_and_seeds():
    assert not random_field(2, 2, 0.0, seed=1, X=16, Y=16).to_vector().any()
    for seed in range(4):
        vx, vy = evaluate(random_field(3, 2, 0.2, seed=seed, X=40, Y=30))
        assert abs(np.sqrt(np.mean(vx ** 2 + vy ** 2)) - 0.2) < 1e-9 * 0.2
    a = evaluate(random_field(2, 2, 0.2, seed=1, X=16, Y=16))
    b = evaluate(random_field(2, 2, 0.2, seed=2, X=16, Y=16))
    assert np.sqrt(np.mean((a[0] - b[0]) ** 2)) > 0


def test_random_field_symmetric():
    v = random_field(3, 2, 1.0, seed=9, X=32, Y=32)
    _, dev = symmetrize(v.alpha)
    assert dev < 1e-12 and abs(v.amplitude(0, 0)[0].imag) < 1e-12


def test_hexagonal_zero_amplitude():
    vx, vy = hexagonal_field(0.0, 32.0, 64, 64)
    assert not vx.any() and not vy.any()


def test_hexagonal_threefold_symmetry(rng):
    centre = (10.0, -4.0)
    p = rng.uniform(-50, 50, (2, 200))
    c, s = np.cos(2 * np.pi / 3), np.sin(2 * np.pi / 3)
    dx, dy = p[0], p[1]
    rx, ry = c * dx - s * dy, s * dx + c * dy
    from specflow.spectral import hexagonal_velocity
    vx, vy = hexagonal_velocity(centre[0] + dx, centre[1] + dy, 0.3, 25.0, centre)
    wx, wy = hexagonal_velocity(centre[0] + rx, centre[1] + ry, 0.3, 25.0, centre)
    # the field rotates with the pattern
    assert np.allclose(wx, c * vx - s * vy, atol=1e-12)
    assert np.allclose(wy, s * vx + c * vy, atol=1e-12)


def test_hexagonal_divergence_matches_laplacian():
    amp, lam = 0.5, 32.0
    vx, vy = hexagonal_field(amp, lam, 256, 256)
    dvx, _ = spatial_gradient(vx, vx)
    _, dvy = spatial_gradient(vy, vy)
    y, x = np.mgrid[0:256, 0:256].astype(float)
    expect = -amp * (2 * np.pi / lam) ** 2 * hexagonal_potential(x, y, lam)
    inner = (slice(2, -2),) * 2
    err = np.abs((dvx + dvy)[inner] - expect[inner]).max()
    assert err < 1e-3 * np.abs(expect).max()


def test_hexagonal_not_periodic_on_domain():
    vx, _ = hexagonal_field(1.0, 80.0, 256, 256, center=(128, 128))
    assert np.abs(vx[:, 0] - vx[:, -1]).max() > 1e-2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 20), a=st.floats(-3, 3), b=st.floats(-3, 3),
       nx=st.integers(0, 4), ny=st.integers(0, 4))
def test_linearity(seed, a, b, nx, ny):
    v1 = random_symmetric(nx, ny, 16, 12, seed)
    v2 = random_symmetric(nx, ny, 16, 12, seed + 1)
    lhs = evaluate(v1.scaled(a) + v2.scaled(b))
    e1, e2 = evaluate(v1), evaluate(v2)
    for k in range(2):
        assert np.allclose(lhs[k], a * e1[k] + b * e2[k], atol=1e-12 * (1 + abs(a) + abs(b)) * 50)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 20), nx=st.integers(0, 5), ny=st.integers(0, 5))
def test_parseval(seed, nx, ny):
    v = random_symmetric(nx, ny, 16, 14, seed)
    vx, vy = evaluate(v)
    assert np.isclose(np.mean(vx ** 2), np.sum(np.abs(v.alpha) ** 2), rtol=1e-9)
    assert np.isclose(np.sqrt(np.mean(vx ** 2 + vy ** 2)), field_rms(v), rtol=1e-9)


def test_grid_to_spectral_round_trip():
    v = random_symmetric(3, 2, 15, 11, seed=4)
    back = grid_to_spectral(*evaluate(v))
    assert np.allclose(back.padded(7, 5).to_vector(), v.padded(7, 5).to_vector(), atol=1e-14)


def test_velocity_file_round_trip(tmp_path):
    v = random_symmetric(2, 3, 32, 24, seed=6)
    save_velocity(v, tmp_path / "v.ofv")
    back = load_velocity(tmp_path / "v.ofv")
    assert (back.n_x, back.n_y, back.X, back.Y) == (2, 3, 32, 24)
    assert np.array_equal(back.to_vector(), v.to_vector())
    raw = (tmp_path / "v.ofv").read_bytes()
    assert raw[:4] == b"OFV1" and len(raw) == 20 + 2 * 5 * 7 * 16
    (tmp_path / "bad.ofv").write_bytes(b"OFC1" + raw[4:])
    with pytest.raises(CubeFormatError):
        load_velocity(tmp_path / "bad.ofv")


def test_grid_csv_round_trip(tmp_path):
    vx, vy = evaluate(random_symmetric(2, 2, 10, 7, seed=8))
    save_grid_csv(tmp_path / "g.csv", vx, vy)
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "x,y,vx,vy"
    bx, by = load_grid_csv(tmp_path / "g.csv")
    assert np.array_equal(bx, vx) and np.array_equal(by, vy)
