import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaynull import (DelayKernel, MState, expansion_coefficient, expansion_coefficients,
                       find_roots, m_inner, m_norm)
from delaynull.state import filon_weights
from oracles import gauss_legendre

finite = st.floats(-5, 5, allow_nan=False)


def test_norm_examples():
    assert m_norm(MState.zero(8)) == 0
    assert m_norm(MState(1.0, np.zeros(9))) == 1
    assert abs(m_norm(MState.constant(0, 1, 8)) - 1) < 1e-15
    assert m_inner(MState.zero(8), MState.constant(2, 3j, 8)) == 0


def test_grid_validation():
    with pytest.raises(ValueError):
        MState(0, np.zeros(4))
    with pytest.raises(ValueError):
        MState(np.inf, np.zeros(3))
    with pytest.raises(ValueError):
        m_inner(MState.zero(4), MState.zero(8))


@settings(max_examples=40, deadline=None)
@given(finite, finite, finite, finite, finite, finite)
def test_inner_product_hermitian(a, b, c, d, e, f):
    x = MState.from_function(complex(a, b), lambda t: c * np.cos(t) + 1j * d * t, 16)
    y = MState.from_function(complex(e, f), lambda t: np.exp(1j * e * t), 16)
    assert abs(m_inner(x, y) - np.conj(m_inner(y, x))) <= 1e-12 * (1 + abs(m_inner(x, y)))
    assert m_inner(x, x).real >= 0 and abs(m_inner(x, x).imag) < 1e-12 * (1 + m_norm(x) ** 2)


def test_simpson_order():
    f = lambda t: np.exp(1j * 3 * t) * np.cos(t)  # noqa: E731
    exact = MState.from_function(0, f, 4096)
    one = MState.constant(0, 1, 4096)
    ref = m_inner(exact, one)
    errs = [abs(m_inner(MState.from_function(0, f, p), MState.constant(0, 1, p)) - ref)
            for p in (16, 32)]
    assert 14 < errs[0] / errs[1] < 18


def test_state_arithmetic_and_csv(tmp_path):
    x = MState.from_function(1 + 2j, np.sin, 8)
    y = MState.constant(-1, 0.5, 8)
    z = 2 * x - y + (-x)
    assert np.allclose(z.tail, x.tail - y.tail)
    p = tmp_path / "x.csv"
    text = x.to_csv(p)
    assert text.splitlines()[0] == "head_re,head_im"
    assert text.splitlines()[2] == "t,re_x,im_x"
    back = MState.from_csv(p)
    assert back.head == x.head and np.array_equal(back.tail, x.tail)


def test_eigenvector():
    e = MState.eigenvector(2 + 1j, 16)
    assert e.head == 1
    assert np.allclose(e.tail, np.exp(1j * (2 + 1j) * e.tau))


def test_filon_weights_against_gauss_legendre():
    for lam in (0.0, 0.3 + 0.1j, 40 + 3j, 900 + 7j):
        w = filon_weights([lam], 64)[0]
        tau = np.linspace(-1, 0, 65)
        # exact for quadratics on each panel pair
        f = tau ** 2 - 2 * tau + 0.5
        ref = gauss_legendre(lambda t: (t ** 2 - 2 * t + 0.5) * np.exp(-1j * lam * t), -1, 0,
                             panels=256)
        assert abs(w @ f - ref) < 1e-11 * max(1, abs(ref))


def test_coefficient_of_head_unit(zero_kernel):
    rec = find_roots(zero_kernel, range(1, 2))[0]
    c = expansion_coefficient(MState(1, np.zeros(513)), rec, zero_kernel)
    assert abs(c - rec.xi_bar) < 1e-15
    assert abs(abs(c) - 0.22688) < 1e-5


def test_coefficients_of_constant_state(wide_spectrum, zero_kernel):
    lams = wide_spectrum.lambdas
    c = expansion_coefficients(MState.constant(1, 1, 512), wide_spectrum.records, zero_kernel)
    assert np.max(np.abs(c + 1 / (lams * (lams - 1j)))) < 1e-13


def test_eigenvector_coefficients_are_kronecker(model_spectrum, zero_kernel):
    recs = list(model_spectrum)
    for mu in recs[::5]:
        c = expansion_coefficients(MState.eigenvector(mu.lam, 4096), recs, zero_kernel)
        target = np.array([1.0 if r is mu else 0.0 for r in recs])
        assert np.max(np.abs(c - target)) < 1e-8


def test_sampled_kernel_biorthogonality():
    k = DelayKernel.from_function(lambda t: 1 + 0.5 * t, 2048)
    spec = find_roots(k, range(-4, 5))
    G = np.array([expansion_coefficients(MState.eigenvector(mu.lam, 2048), spec.records, k)
                  for mu in spec])
    assert np.max(np.abs(G - np.eye(len(spec)))) < 1e-8
