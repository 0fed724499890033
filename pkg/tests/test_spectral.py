import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from delaynull import (DelayKernel, EigenRecord, RootFindingError, SpectrumSet, biorth_tail,
                       biorth_tail_model, biorth_tail_transform, eval_charfn,
                       eval_charfn_derivative, find_roots)
from delaynull.spectral import asymptotic_seed, branch_of, count_zeros, residual_tol, strip_bounds
from oracles import gauss_legendre, lambert_w, model_root

LAM0 = -0.5671432904097838j
LAM1 = 4.375185153061898 + 1.5339133197935746j


def test_charfn_examples():
    z = DelayKernel.zero()
    assert eval_charfn(0, z) == 1
    assert abs(eval_charfn(1j, z) - (1 + math.e)) < 1e-15
    ones = DelayKernel.from_function(lambda t: np.ones_like(t), 64)
    assert abs(eval_charfn(0, ones) - 2) < 1e-14


def test_charfn_vectorised_and_overflow():
    z = DelayKernel.zero()
    vals = eval_charfn(np.array([0, 1j]), z)
    assert vals.shape == (2,)
    with pytest.raises(OverflowError, match="800j"):
        eval_charfn(1j * 800, z)
    with pytest.raises(OverflowError):
        eval_charfn_derivative(-750j, z)


def test_derivative_examples():
    z = DelayKernel.zero()
    assert eval_charfn_derivative(0, z) == -2j
    assert abs(eval_charfn_derivative(LAM0, z) - (LAM0 - 1j)) < 1e-12


@pytest.mark.parametrize("kernel", [DelayKernel.zero(),
                                    DelayKernel.from_function(lambda t: np.cos(3 * t) + 2, 256)])
def test_derivative_finite_difference_second_order(kernel):
    z0 = 1.3 + 0.7j
    d = eval_charfn_derivative(z0, kernel)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (eval_charfn(z0 + h, kernel) - eval_charfn(z0 - h, kernel)) / (2 * h)
        errs.append(abs(fd - d))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_kernel_validation():
    with pytest.raises(ValueError):
        DelayKernel.sampled(np.ones(4))          # odd panel count
    with pytest.raises(ValueError):
        DelayKernel("zero", np.ones(3))
    with pytest.raises(ValueError):
        DelayKernel.sampled([1.0, np.nan, 1.0])
    k = DelayKernel.sampled(np.ones(5))
    assert k.panels == 4 and k.grid_step == 0.25 and k.is_real


def test_halley_oracle_agrees_with_scipy():
    for k in range(-50, 51):
        assert abs(lambert_w(k) - lambertw(1, k)) <= 1e-13 * abs(lambert_w(k))


def test_find_roots_model_case(zero_kernel):
    spec = find_roots(zero_kernel, range(-1, 2))
    assert len(spec) == 3
    lams = spec.lambdas
    assert abs(spec.by_branch(0).lam - LAM0) < 1e-12
    assert abs(spec.by_branch(1).lam - LAM1) < 1e-12
    assert np.all(np.diff(lams.real) > 0)
    assert spec.by_branch(0).exceptional and not spec.by_branch(1).exceptional


def test_root_oracle_and_residuals(zero_kernel):
    spec = find_roots(zero_kernel, range(-50, 51))
    for r in spec:
        ref = model_root(r.branch)
        assert abs(r.lam - ref) <= 1e-10 * abs(ref)
        assert abs(eval_charfn(r.lam, zero_kernel)) < 1e-11
        assert r.xi_bar == -1j / r.d_prime


def test_large_branches_meet_rounding_floor(zero_kernel):
    spec = find_roots(zero_kernel, range(200, 211))
    for r in spec:
        assert abs(eval_charfn(r.lam, zero_kernel)) < residual_tol(r.lam, r.d_prime)
        assert abs(r.lam - model_root(r.branch)) <= 1e-12 * abs(r.lam)


def test_asymptotics(zero_kernel):
    ns = [5, 10, 20, 40]
    spec = find_roots(zero_kernel, range(1, 41))
    lams = np.array([spec.by_branch(n).lam for n in ns])
    re_gap = np.abs(lams.real - (-math.pi / 2 + 2 * math.pi * np.array(ns)))
    im_gap = np.abs(lams.imag - np.log(2 * math.pi * np.array(ns)))
    assert np.all(np.diff(re_gap) < 0)
    assert np.all(np.diff(im_gap) < 0)


def test_reflection_symmetry_sampled_kernel():
    k = DelayKernel.from_function(lambda t: 1 + 0.5 * t, 512)
    spec = find_roots(k, range(-6, 7))
    lams = spec.lambdas
    for lam in lams:
        assert np.min(np.abs(lams + np.conj(lam))) < 1e-10
        assert abs(eval_charfn(lam, k)) < 1e-11


def test_complex_kernel_roots_counted():
    k = DelayKernel.from_function(lambda t: 0.5j * np.exp(t), 256)
    spec = find_roots(k, range(-3, 4))
    assert len(spec) == count_zeros(k, (strip_bounds(-3)[0], strip_bounds(3)[1], -4, 8))


def test_empty_and_noncontiguous_ranges(zero_kernel):
    assert len(find_roots(zero_kernel, [])) == 0
    with pytest.raises(ValueError):
        find_roots(zero_kernel, [1, 3])


def test_duplicate_collapse_is_rejected(zero_kernel):
    r = EigenRecord.from_root(LAM1, zero_kernel)
    with pytest.raises(RootFindingError, match="possible multiple zero"):
        SpectrumSet((r, r), zero_kernel)


def test_branch_helpers():
    for n in range(-20, 21):
        lo, hi = strip_bounds(n)
        assert lo < hi
        if n:
            assert branch_of(asymptotic_seed(n)) == n
    assert branch_of(0.1) == 0


def test_spectrum_csv_roundtrip(tmp_path, model_spectrum, zero_kernel):
    p = tmp_path / "s.csv"
    text = model_spectrum.to_csv(p)
    assert text.splitlines()[0] == "branch,re_lambda,im_lambda,re_dprime,im_dprime,re_xibar,im_xibar"
    back = SpectrumSet.from_csv(p, zero_kernel)
    assert np.array_equal(back.lambdas, model_spectrum.lambdas)


def test_transform_matches_closed_form_tail(zero_kernel):
    lam = LAM1
    rec = EigenRecord.from_root(lam, zero_kernel)
    for z in (0.0, 2.0 + 0.5j, -7.0 + 1j):
        direct = gauss_legendre(lambda t: np.exp(1j * z * t) * lam * np.exp(-1j * lam * t)
                                / (lam - 1j), -1, 0)
        assert abs(biorth_tail_transform(rec, z, zero_kernel) - direct) < 1e-10


def test_transform_closed_form_symbolic():
    sp = pytest.importorskip("sympy")
    t, z, lam = sp.symbols("t z lam")
    integral = sp.integrate(sp.exp(sp.I * (z - lam) * t), (t, -1, 0), conds="none")
    closed = lam / (lam - sp.I) * integral
    # the transform formula uses exp(-i lam) = i lam and D'(lam) = lam - i
    formula = (sp.exp(-sp.I * z) - sp.I * lam) / ((lam - sp.I) * (z - lam))
    for zv in (0.3 + 0.2j, -5.0 + 2j):
        subs = {lam: LAM1, z: zv}
        assert abs(complex(closed.subs(subs).evalf()) - complex(formula.subs(subs).evalf())) < 1e-12


def test_transform_removable_singularity(zero_kernel):
    rec = EigenRecord.from_root(LAM1, zero_kernel)
    inside = biorth_tail_transform(rec, LAM1 + 0.99e-6, zero_kernel)
    outside = biorth_tail_transform(rec, LAM1 + 1.01e-6, zero_kernel)
    assert abs(inside - outside) / abs(inside) < 1e-8
    # value at the point itself: int exp(i lam t) x_bar(t) dt = 1 - xi_bar
    assert abs(biorth_tail_transform(rec, LAM1, zero_kernel) - (1 - rec.xi_bar)) < 1e-12


def test_tail_model_examples(zero_kernel):
    assert abs(biorth_tail_model(LAM0, 0.0) - 0.5671433 / 1.5671433) < 1e-7
    with pytest.raises(ValueError):
        biorth_tail_model(LAM1, 0.0, DelayKernel.from_function(np.cos, 8))


def test_biorthogonality_model_case(model_spectrum, zero_kernel):
    recs = list(model_spectrum)[:30]
    for r in recs:
        for mu in recs:
            g = r.xi_bar + gauss_legendre(
                lambda t: np.exp(1j * mu.lam * t) * biorth_tail_model(r, t), -1, 0)
            assert abs(g - (1.0 if r is mu else 0.0)) < 1e-8


def test_general_tail_reduces_to_model(zero_kernel):
    rec = EigenRecord.from_root(LAM1, zero_kernel)
    tau = np.linspace(-1, 0, 65)
    assert np.max(np.abs(biorth_tail(rec, 64, zero_kernel) - biorth_tail_model(rec, tau))) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(-30, 30), st.floats(-2, 6))
def test_transform_consistent_with_general_tail(x, y):
    k = DelayKernel.from_function(lambda t: 1 + 0.5 * t, 1024)
    rec = find_roots(k, range(1, 2))[0]
    z = complex(x, y)
    if abs(z - rec.lam) < 1e-3:
        return
    tail = biorth_tail(rec, 1024, k)
    tau = np.linspace(-1, 0, 1025)
    from delaynull._grid import simpson_weights
    direct = np.sum(simpson_weights(1024, 1 / 1024) * np.exp(1j * z * tau) * tail)
    assert abs(direct - biorth_tail_transform(rec, z, k)) < 1e-6 * max(1, abs(direct))
