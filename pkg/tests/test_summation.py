import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaynull import (MState, SpectrumTooShortError, SummationSchedule, find_roots, m_norm,
                       partial_sum, reconstruction_error, weight_fn, weight_for_eigenvalue,
                       weight_table)
from delaynull.summation import required_branch, summation_order, weighted_terms

S = SummationSchedule()
upper = st.tuples(st.floats(-50, 50), st.floats(1e-3, 50)).map(lambda p: complex(*p))


def test_weight_on_imaginary_axis():
    for n in range(1, 12):
        w = weight_fn(n, 1j * n, S)
        assert abs(w - math.exp(-math.pi * S.l(n) / 2)) < 1e-12
        assert abs(w.imag) < 1e-15


def test_weight_domain():
    with pytest.raises(ValueError):
        weight_fn(3, 3.0, S)
    with pytest.raises(ValueError):
        weight_fn(3, -3.0, S)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), upper)
def test_weight_bounded_and_symmetric(n, z):
    w = weight_fn(n, z, S)
    assert abs(w) <= 1 + 1e-15
    assert abs(weight_fn(n, -z.conjugate(), S) - w.conjugate()) <= 1e-14 * max(1, abs(w))


def test_weight_modulus_formula():
    z = 3 + 2j
    n = 4
    m = (z - n) / (z + n)
    l = float(S.l(n))
    assert abs(abs(weight_fn(n, z, S)) - math.exp(l * (np.angle(m) - math.pi))) < 1e-14


def test_weight_tends_to_one():
    z = 4.375 + 1.534j
    gaps = [abs(weight_fn(n, z, S) - 1) for n in (100, 1000, 10000)]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_circle_bound(n):
    R = float(S.radius(n))
    theta = np.linspace(0, math.pi, 64 + 2)[1:-1]
    w = weight_fn(n, R * np.exp(1j * theta), S)
    assert np.all(np.abs(w) < math.exp(-math.pi * S.l(n) / 2))


def test_weight_for_eigenvalue_rules(model_spectrum):
    lam0 = model_spectrum.by_branch(0)
    lam1 = model_spectrum.by_branch(1)
    assert weight_for_eigenvalue(2, lam0, S) == 1
    assert weight_for_eigenvalue(1, lam1, S) == 0        # |lam1| >= R_1 = 1
    w = weight_for_eigenvalue(10, lam1, S)
    assert w == weight_fn(10, lam1.lam, S) and abs(w) <= 1


def test_pointwise_convergence_of_weights(model_spectrum):
    # monotone once n is well beyond |lam| (|lam| < 100 here)
    for r in model_spectrum:
        gaps = [abs(weight_for_eigenvalue(n, r, S) - 1) for n in (200, 400, 800, 1600)]
        if r.exceptional:
            assert gaps == [0, 0, 0, 0]
        else:
            assert gaps[0] > gaps[1] > gaps[2] > gaps[3]


def test_schedule_growth_conditions():
    S.validate()
    onset = S.decay_onset()
    assert 10000 < onset < 11000
    env = S.envelope(np.array([4, 5, 100, onset - 1, onset + 1, 2 * onset]))
    assert env[1] > env[0]                    # still rising at small n
    assert env[-1] < env[-2]                  # decaying past the turning point
    with pytest.raises(ValueError, match="r_exp"):
        SummationSchedule(r_exp=1.0).validate()
    with pytest.raises(ValueError, match="l_exp"):
        SummationSchedule(l_exp=0.6).validate()
    with pytest.raises(ValueError):
        SummationSchedule(l_coef=0)


def test_truncation_count(wide_spectrum):
    for n in (2, 4, 6):
        table = weight_table(n, wide_spectrum, S)
        inside = np.sum(np.abs(wide_spectrum.lambdas) < S.radius(n))
        assert table.nonzero() == inside


def test_weight_table_csv(model_spectrum):
    text = weight_table(2, model_spectrum, S).to_csv()
    assert text.splitlines()[0] == "n,branch,re_lambda,im_lambda,re_w,im_w"
    assert len(text.splitlines()) == len(model_spectrum) + 1


def test_required_branch():
    assert required_branch(1.0) == 0
    assert required_branch(16.0) == 3
    assert required_branch(1296.0) == 207


def test_coverage_error(model_spectrum):
    x = MState.constant(1, 1, 64)
    with pytest.raises(SpectrumTooShortError, match="1296"):
        partial_sum(x, 6, model_spectrum, S)


def test_zero_and_eigen_collapse(wide_spectrum):
    assert m_norm(partial_sum(MState.zero(512), 4, wide_spectrum, S)) == 0
    mu = wide_spectrum.by_branch(1)
    e = MState.eigenvector(mu.lam, 512)
    for n in (2, 4, 6):
        y = partial_sum(e, n, wide_spectrum, S)
        assert m_norm(y - weight_for_eigenvalue(n, mu, S) * e) < 1e-7


def test_summation_order_is_by_modulus(model_spectrum):
    recs = summation_order(model_spectrum.records)
    mods = [abs(r.lam) for r in recs]
    assert mods == sorted(mods)


def test_reconstruction_error_matches_sampled_norm(wide_spectrum):
    x = MState.constant(1, 1, 512)
    # at n = 2 the partial sum has five smooth terms, so the grid norm is accurate
    direct = m_norm(partial_sum(x, 2, wide_spectrum, S) - x)
    assert abs(direct - reconstruction_error(x, 2, wide_spectrum, S)) < 1e-9


def test_weighted_terms_for_real_data_are_conjugate_pairs(wide_spectrum):
    x = MState.from_function(0.5, np.cos, 512)
    recs, a = weighted_terms(x, 4, wide_spectrum, S)
    lookup = {r.lam: c for r, c in zip(recs, a)}
    for r, c in zip(recs, a):
        mirror = -np.conj(r.lam)
        match = min(lookup, key=lambda z: abs(z - mirror))
        assert abs(lookup[match] - np.conj(c)) < 1e-12 * max(1, abs(c))


def test_plain_truncation_converges(zero_kernel):
    """Sanity check of the expansion itself: unweighted truncations approach x."""
    spec = find_roots(zero_kernel, range(-60, 61))
    x = MState.constant(1, 1, 512)
    loose = SummationSchedule(l_coef=1e-12, r_coef=1.0, r_exp=4.0)
    errs = [reconstruction_error(x, n, spec, loose) for n in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2]
