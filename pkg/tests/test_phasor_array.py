import numpy as np
import pytest

from app.core.exceptions import DimensionError, ParameterError, SchemaError, SingularMatrixError
from app.core.phasor_array import PhasorArray
from app.models import ReduceMethod, SliceMode
from app.services import fixtures
from app.services.fourier import from_function


def square_wave_phasors(order: int = 31) -> PhasorArray:
    slices = [[0.0]] + [[1.0 / (1j * np.pi * m)] if m % 2 else [0.0] for m in range(1, order + 1)]
    return PhasorArray.from_slices([np.atleast_2d(s) for s in slices], SliceMode.DC_AND_POSITIVE)


def test_plant_summary(plant):
    assert plant.coeffs.shape == (2, 2, 63)
    assert plant.is_real
    assert plant.describe() == "2x2 real-valued periodic matrix with 31 harmonics"


def test_plant_closed_form_coefficients(plant):
    assert abs(plant.phasor(1)[0, 0] - (-4 / np.pi**2)) < 1e-3
    assert np.allclose([plant.phasor(k)[0, 1] for k in (-1, 0, 1)], [0.5, 1.0, 0.5], atol=1e-12)
    assert abs(plant.phasor(2)[0, 1]) < 1e-12
    assert abs(plant.phasor(2)[1, 0] - 0.5j) < 1e-3
    assert abs(plant.phasor(-2)[1, 0] + 0.5j) < 1e-3
    assert abs(plant.phasor(1)[1, 1] - 1 / (1j * np.pi)) < 1e-3
    assert abs(plant.dc[1, 1] + 0.5) < 1e-12


def test_slices_modes_agree():
    half = fixtures.plant_slices()
    a = [half.phasor(k) for k in range(-3, 4)]
    full = PhasorArray.from_slices(a, SliceMode.FULL)
    assert half.h == 3 and half.is_real
    assert full.is_real
    assert np.allclose(full.coeffs, half.coeffs, atol=0)


def test_full_mode_rejects_even_slice_count():
    with pytest.raises(DimensionError):
        PhasorArray.from_slices([np.eye(2), np.eye(2)], SliceMode.FULL)


def test_half_mode_rejects_complex_dc_slice():
    with pytest.raises(DimensionError):
        PhasorArray.from_slices([[1j], [0.5]], SliceMode.DC_AND_POSITIVE)
    sine = PhasorArray.from_slices([[0.0], [-0.5j]], SliceMode.DC_AND_POSITIVE)
    assert np.allclose(sine.coeffs[0, 0], [0.5j, 0.0, -0.5j])


def test_real_flag_enforces_conjugate_symmetry():
    a = PhasorArray.random(2, 3, h=3, rng=4)
    for k in range(1, 4):
        assert np.array_equal(a.phasor(-k), np.conj(a.phasor(k)))
    assert np.isrealobj(a.eval_phase(0.3))
    assert np.array_equal(a.H.coeffs, a.T.coeffs)


def test_convolution_matches_pointwise_product():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n, k, m = rng.integers(1, 4, size=3)
        a = PhasorArray.random(n, k, h=int(rng.integers(0, 5)), rng=rng, real=bool(rng.integers(0, 2)))
        b = PhasorArray.random(k, m, h=int(rng.integers(0, 5)), rng=rng, real=bool(rng.integers(0, 2)))
        times = rng.uniform(0.0, 2.0, size=20)
        product = (a @ b).eval_time(2.0, times)
        pointwise = a.eval_time(2.0, times) @ b.eval_time(2.0, times)
        worst = max(worst, np.abs(product - pointwise).max() / max(1.0, np.abs(pointwise).max()))
    assert worst < 1e-10


def test_fft_reproduces_band_limited_coefficients():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = PhasorArray.random(2, 2, h=int(rng.integers(0, 6)), rng=rng, real=bool(rng.integers(0, 2)))
        sampled = from_function(lambda t: a.eval_time(1.5, t), 1.5, 5)
        assert sampled.h == 15
        assert np.abs(sampled.trunc(a.h).coeffs - a.coeffs).max() < 1e-12
        assert np.abs(sampled.coeffs[:, :, : 15 - a.h]).max(initial=0.0) < 1e-12


def test_scalar_coercion_and_signal_scaling():
    u = 1 + PhasorArray.cos()
    assert np.isclose(u.eval_phase(0.0)[0, 0], 2.0)
    scaled = PhasorArray.cos() * PhasorArray.eye(2)
    assert np.allclose(scaled.eval_phase(0.7), np.cos(0.7) * np.eye(2))
    assert np.allclose((2.0 * PhasorArray.sin()).eval_phase(0.4), 2 * np.sin(0.4))


def test_input_matrix_stacks_constant_and_sine():
    b = fixtures.input_matrix()
    assert b.shape == (2, 1) and b.h == 1
    assert np.allclose(b.eval_phase(np.pi / 2), [[1.0], [1.0]])


def test_shape_mismatch_raises():
    with pytest.raises(DimensionError):
        PhasorArray.eye(2) + PhasorArray.eye(3)
    with pytest.raises(DimensionError):
        PhasorArray.eye(2) @ PhasorArray.zeros(3)


def test_derivative_of_sine_is_scaled_cosine():
    d = PhasorArray.sin().derivative(0.5)
    omega = 2 * np.pi / 0.5
    assert np.allclose(d.eval_time(0.5, [0.0, 0.1, 0.2]).ravel(), omega * np.cos(omega * np.array([0.0, 0.1, 0.2])))


def test_hermitian_is_pointwise_conjugate_transpose():
    a = PhasorArray.random(2, 3, h=2, rng=7, real=False)
    theta = 1.1
    assert np.allclose(a.H.eval_phase(theta), a.eval_phase(theta).conj().T)


def test_inverse_of_periodic_scalar():
    a = 2 + PhasorArray.cos()
    inverse = a.inverse()
    product = a @ inverse
    assert abs(product.dc[0, 0] - 1.0) < 1e-9
    assert np.abs(product.coeffs[:, :, product.h + 1 :]).max() < 1e-9


def test_inverse_of_periodic_matrix(plant):
    a = plant + 3 * PhasorArray.eye(2)
    inverse = a.inverse()
    assert inverse.is_real
    for k in range(1, inverse.h + 1):
        assert np.array_equal(inverse.phasor(-k), np.conj(inverse.phasor(k)))
    times = np.random.default_rng(5).uniform(0.0, 1.0, 50)
    products = np.einsum("tij,tjk->tik", a.eval_time(1.0, times), inverse.eval_time(1.0, times))
    assert np.abs(products - np.eye(2)).max() < 1e-7


def test_inverse_reports_singular_instant():
    with pytest.raises(SingularMatrixError) as info:
        PhasorArray.cos().inverse()
    assert min(abs(info.value.phase - 0.25), abs(info.value.phase - 0.75)) < 1e-9


def test_neglect_and_trunc_on_square_wave():
    wave = square_wave_phasors()
    assert wave.h == 31
    reduced = wave.neglect(2e-2)
    assert reduced.h == 15
    assert reduced.is_real
    assert wave.trunc(5).h == 5
    assert wave.neglect(0.1, ReduceMethod.RELATIVE).h == 9
    with pytest.raises(ParameterError):
        wave.trunc(-1)


def test_element_access_is_zero_based(plant):
    entry = plant[0, 1]
    assert entry.shape == (1, 1)
    assert np.allclose(entry.coeffs[0, 0], plant.coeffs[0, 1])
    with pytest.raises(DimensionError):
        plant.element_at(2, 0)


def test_json_document(plant):
    restored = PhasorArray.from_json(plant.to_json())
    assert restored.is_real
    assert np.array_equal(restored.coeffs, plant.coeffs)


def test_malformed_json_rejected():
    with pytest.raises(SchemaError):
        PhasorArray.from_json('{"rows": 1, "cols": 1, "h": 1, "real": true, "coeffs": [[1.0, 0.0]]}')
    with pytest.raises(SchemaError):
        PhasorArray.from_json("not json")


def test_product_to_sum_identity():
    u = 1 + PhasorArray.cos()
    assert np.allclose((u @ u).coeffs.ravel(), [0.25, 1.0, 1.5, 1.0, 0.25])


def test_inverse_coefficients_of_two_plus_cosine():
    inverse = (2 + PhasorArray.cos()).inverse()
    assert inverse.dc[0, 0] == pytest.approx(1 / np.sqrt(3), abs=1e-10)
    assert inverse.phasor(1)[0, 0] == pytest.approx(-0.154701, abs=1e-6)
    assert inverse.is_real


def test_hermitian_of_imaginary_cosine():
    a = 1j * PhasorArray.cos()
    assert np.allclose(a.H.coeffs, (-1j * PhasorArray.cos()).coeffs)
    assert np.allclose(PhasorArray.sin().H.coeffs, PhasorArray.sin().coeffs)


def test_trunc_idempotence(plant):
    assert np.array_equal(plant.trunc(7).trunc(3).coeffs, plant.trunc(3).coeffs)
    assert np.array_equal(plant.trunc(0).coeffs[:, :, 0], plant.dc)


def test_derivative_leibniz_rule():
    a = PhasorArray.random(2, 2, h=2, rng=13, real=False)
    b = PhasorArray.random(2, 2, h=3, rng=14, real=False)
    left = (a @ b).derivative(2.0)
    right = a.derivative(2.0) @ b + a @ b.derivative(2.0)
    assert np.allclose(left.coeffs, right.coeffs, atol=1e-12)


def test_derivative_matches_finite_differences(plant):
    a = plant.trunc(5)
    times = np.linspace(0.0, 1.0, 7)
    dt = 1e-5
    difference = (a.eval_time(1.0, times + dt) - a.eval_time(1.0, times - dt)) / (2 * dt)
    assert np.allclose(a.derivative(1.0).eval_time(1.0, times), difference, atol=1e-5)


def test_phase_and_time_evaluation_agree(plant):
    period = 2.0
    times = np.random.default_rng(11).uniform(-3.0, 3.0, 20)
    by_phase = plant.eval_phase(2 * np.pi / period * times)
    assert np.allclose(plant.eval_time(period, times), by_phase, atol=1e-13)
    assert np.allclose((plant / 2).eval_time(period, times), by_phase / 2, atol=1e-13)


def test_evaluation_reproduces_grid_samples():
    period = 2.0
    omega = 2 * np.pi / period

    def sampler(t):
        return np.array([[1 + np.cos(omega * t), 0.5 * np.sin(3 * omega * t)], [np.cos(7 * omega * t), -2.0]])

    a = from_function(sampler, period, 4)
    times = period * np.arange(16) / 16
    assert np.allclose(a.eval_time(period, times), np.stack([sampler(t) for t in times]), atol=1e-12)
    assert abs(PhasorArray.cos().eval_time(period, period / 4)[0, 0]) < 1e-15
