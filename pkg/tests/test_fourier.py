import cmath
import itertools
import math
import warnings

import mpmath
import numpy as np
import pytest

from modone.errors import DecayUnknown, DomainError, PrecisionInfeasible, SlowDecayWarning
from modone.fourier import (
    FourierWindow,
    FrequencyDomain,
    PhaseTable,
    cross_validate,
    exp_sum,
    r2_fourier,
    rk_fourier_term,
    truncation_error_bound,
    u_of_n,
    write_crossval_json,
    write_spectrum_csv,
)
from modone.localstats import c_factor, k_level_correlation
from modone.seqgen import PointSet, PrecisionPolicy, SequenceSpec, frac_parts
from modone.windows import Window


def mp_exp_sum(n, alpha, beta, N, dps=80):
    with mpmath.workdps(dps):
        s = mpmath.fsum(mpmath.expjpi(2 * n * beta * mpmath.power(x, alpha)) for x in range(1, N + 1))
        return complex(s)


def test_exp_sum_examples():
    assert exp_sum(0, SequenceSpec(3.3, 1, 17)) == 17
    assert exp_sum(1, SequenceSpec(1, 1, 9)) == 9
    ref = 1 + cmath.exp(2j * math.pi * math.sqrt(2)) + cmath.exp(2j * math.pi * math.sqrt(3))
    assert abs(exp_sum(1, SequenceSpec(0.5, 1, 3)) - ref) < 1e-12


@pytest.mark.parametrize("n,alpha,beta,N", [(7, 2.5, 1, 40), (-123, 7.3, 1, 60), (5000, 9.8, 0.5, 30), (2.5, 1.7, 1, 25)])
def test_exp_sum_against_mpmath(n, alpha, beta, N):
    got = exp_sum(n, SequenceSpec(alpha, beta, N))
    assert abs(got - mp_exp_sum(n, alpha, beta, N)) <= N * 2 * math.pi * 2.0**-40


def test_conjugate_symmetry_and_modulus():
    spec = SequenceSpec(6.1, 1, 300)
    t = PhaseTable(spec, 50)
    S = t.sums(np.arange(-50, 51))
    assert np.all(np.abs(S) <= 300 + 1e-9)
    assert np.allclose(S[::-1], np.conj(S), atol=1e-10)


def test_phase_table_refuses_uncertified_frequency():
    t = PhaseTable(SequenceSpec(3.0, 1.5, 100), 10)
    with pytest.raises(PrecisionInfeasible):
        t.sums([11])
    with pytest.raises(PrecisionInfeasible):
        exp_sum(1000, SequenceSpec(8, 1.1, 1000), PrecisionPolicy.fixed(60))


def test_u_of_n_examples():
    assert u_of_n((5,)) == (5, -5)
    assert u_of_n((2, 7)) == (2, 5, -7)
    assert u_of_n((0, 0)) == (0, 0, 0)


def test_u_of_n_injective_and_zero_sum():
    for k in (2, 3, 4):
        seen = set()
        B = 20 if k < 4 else 6
        for n in itertools.product(range(-B, B + 1), repeat=k - 1):
            u = u_of_n(n)
            assert sum(u) == 0
            assert max(map(abs, u)) <= 2 * max(map(abs, n))
            seen.add(u)
        assert len(seen) == (2 * B + 1) ** (k - 1)


def brute_rk(n, vals):
    u = u_of_n(n)
    total = 0j
    for t in itertools.permutations(range(len(vals)), len(u)):
        total += cmath.exp(2j * math.pi * sum(ui * vals[i] for ui, i in zip(u, t)))
    return total


def test_rk_fourier_term_k2_identity():
    spec = SequenceSpec(4.4, 1, 80)
    S = exp_sum(13, spec)
    assert abs(rk_fourier_term((13,), spec) - (abs(S) ** 2 - 80)) < 1e-8


def test_rk_fourier_term_k3_brute():
    spec = SequenceSpec(3.7, 1, 50)
    vals = frac_parts(spec).values
    rng = np.random.default_rng(3)
    for _ in range(2):
        n = tuple(int(v) for v in rng.integers(-30, 31, size=2))
        assert abs(rk_fourier_term(n, spec) - brute_rk(n, vals)) < 1e-7


def test_rk_fourier_term_k4_brute_small():
    spec = SequenceSpec(2.2, 1, 12)
    vals = frac_parts(spec).values
    assert abs(rk_fourier_term((3, -1, 4), spec) - brute_rk((3, -1, 4), vals)) < 1e-8


def test_rk_fourier_term_equal_coordinates():
    # n = (c, c): u = (c, 0, -c); the zero slot only counts the remaining N - 2 indices
    spec = SequenceSpec(5.5, 1, 60)
    S = exp_sum(9, spec)
    assert abs(rk_fourier_term((9, 9), spec) - (60 - 2) * (abs(S) ** 2 - 60)) < 1e-7


def test_rk_fourier_term_rejects_zero():
    with pytest.raises(DomainError):
        rk_fourier_term((0, 0), SequenceSpec(2, 1, 10))


def test_r2_fourier_degenerate_sequence():
    N = 40
    spec = SequenceSpec(1, 1, N)
    w = Window.gaussian(1.0, 8.0)
    four = r2_fourier(w, spec, 0.5).value
    direct = k_level_correlation(PointSet.external(np.zeros(N)), w, 2).value
    assert abs(four - direct) <= 1e-8


@pytest.mark.parametrize("alpha", [2.5, 7.3])
def test_r2_fourier_matches_direct(alpha):
    res = cross_validate(Window.gaussian(1.0, 8.0), SequenceSpec(alpha, 1, 600), 0.2)
    assert res["pass"]
    assert res["difference"] <= 1e-9


def test_r2_fourier_bump_window():
    w = Window.bump(2.0, 4)
    spec = SequenceSpec(6.6, 1, 400)
    four = r2_fourier(w, spec, 0.6).value
    direct = k_level_correlation(frac_parts(spec), w, 2).value
    bound = truncation_error_bound(w, 400, 0.6, s=4.5)
    assert abs(four - direct) <= bound + 1e-9


def test_n_zero_term_is_c2_times_integral():
    # with epsilon so small that only n = 0 survives, the sum is C_2(N) * f^(0)
    spec = SequenceSpec(3.3, 1, 50)
    w = Window.gaussian(1.0, 8.0)
    est = r2_fourier(w, spec, 1e-9).value
    M = math.floor(50 ** (1 + 1e-9))
    assert M == 50
    t = PhaseTable(spec, M)
    ns = np.arange(1, M + 1)
    S = t.sums(ns)
    tail = 2 * np.sum(np.exp(-2 * math.pi**2 * (ns / 50) ** 2) * (np.abs(S) ** 2 - 50)) / 2500
    assert est == pytest.approx(c_factor(2, 50) * 1.0 + tail, abs=1e-12)


def test_box_window_warns():
    with pytest.warns(SlowDecayWarning):
        FourierWindow(Window.box((-0.5, 0.5)))
    with pytest.raises(DomainError):
        FourierWindow(Window.simplex(1.0, 2))


def test_truncation_bound_examples():
    # s >= 91 gives 1 + eps - eps s < -8 at eps = 0.1
    s = 91
    assert 1 + 0.1 - 0.1 * s <= -8 + 1e-9
    w = Window.gaussian(1.0, 8.0)
    vals = [truncation_error_bound(w, 1000, e, s=20) for e in (0.1, 0.5, 1.0, 4.0)]
    assert all(b > a for a, b in zip(vals[1:], vals))
    assert truncation_error_bound(w, 1000, 50.0, s=20) < 1e-300
    with pytest.raises(DecayUnknown):
        truncation_error_bound(Window.box((-1, 1)), 100, 0.1, s=3)


@pytest.mark.parametrize("N,eps", [(200, 0.1), (1000, 0.05), (50, 0.3)])
def test_gaussian_bound_dominates_actual_tail(N, eps):
    w = Window.gaussian(0.3, 3.0)
    M = math.floor(N ** (1 + eps))
    n = np.arange(M + 1, M + 200_000)
    # |(|S|^2 - N)| <= N^2, so the normalised tail is at most sum |f^(n/N)|
    tail = 2 * np.sum(np.abs(w.fourier_1d(n / N)))
    assert tail <= truncation_error_bound(w, N, eps)


def test_frequency_domain_sets():
    assert len(list(FrequencyDomain(3, 2, 0.0))) == 25
    U = list(FrequencyDomain(3, 2, 0.0, "U-set"))
    assert all(sum(u) == 0 and 1 <= max(map(abs, u)) <= 4 for u in U)


def test_outputs(tmp_path):
    write_spectrum_csv(tmp_path / "s.csv", [1, 2], [1 + 2j, -0.5j])
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "n,re_S,im_S,abs_S2"
    assert rows[1].split(",")[3] == "5"
    write_crossval_json(tmp_path / "c.json", [{"direct": 1.0, "fourier": 1.0, "bound": 0.1, "pass": True}])
    assert '"pass": true' in (tmp_path / "c.json").read_text()
