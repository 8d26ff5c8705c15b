import numpy as np
import pytest

from shgspec.monodromy import integrate_many, lam_zero
from shgspec.potential import Potential
from shgspec.quadrature import ContourSpec
from shgspec.spectrum import (
    DiscFamily,
    SpectrumTable,
    _field,
    build_isolating,
    build_table,
    certify_counts,
    count_annulus,
    count_roots,
    locate_delta_dot_star,
    locate_dirichlet,
    locate_periodic,
    order_le,
    trace_formula_tau,
)

# quadratic-formula oracle: lambda_1(0) = (pi + sqrt(pi^2 + 1/4))/2
LAM1_ZERO = 3.1613626096867287


def test_zero_potential_periodic_oracle(tab0):
    assert abs(lam_zero(1) - LAM1_ZERO) < 1e-15
    for n in range(-8, 9):
        lm, lp = tab0.lam_pm(n)
        assert abs(lm - lam_zero(n)) < 1e-9
        assert abs(lp - lam_zero(n)) < 1e-9
    # eq:kap3.170 pairing lambda_{-k}^+ = 1/(16 lambda_k^+)
    assert abs(tab0.lam_pm(-1)[1] - 1.0 / (16.0 * LAM1_ZERO)) < 1e-11


def test_zero_potential_dirichlet_and_star(v_zero):
    assert abs(locate_dirichlet(v_zero, 1) - LAM1_ZERO) < 1e-10
    assert abs(locate_delta_dot_star(v_zero) - 0.25j) < 1e-12


def test_locate_periodic_single(v_zero):
    lm, lp = locate_periodic(v_zero, 0)
    assert abs(lm - 0.25) < 1e-11 and abs(lp - 0.25) < 1e-11


def test_count_roots_simple(v_seed):
    # chi_p has a double root in D_1 at the zero potential
    f = _field(Potential.zero(), "chi_p", 1e-11)
    cnt, dist = count_roots(f, ContourSpec(np.pi, np.pi / 3, 64))
    assert cnt == 2 and dist < 1e-8


def test_annulus_counts(v_seed, v_zero):
    for v in (v_zero, v_seed):
        cnt = count_annulus(v, 4, tol=1e-11)
        assert cnt["chi_p"][0] == 4 + 8 * 4
        assert cnt["chi_D"][0] == 2 + 4 * 4
        assert cnt["ddelta"][0] == 4 + 4 * 4


def test_certified_counts(v_seed, tab16, iso16):
    rep = certify_counts(v_seed, tab16, iso16, n_range=range(-3, 4))
    assert all(got == {"chi_p": 2, "chi_D": 1, "ddelta": 1}
               for n, got in rep.items() if n != "star")


def _direct_period2_eigenvalues(v, nmodes=40):
    """Independent oracle: Fourier-matrix discretization of the first-order
    operator on period-2 functions, linearized in the spectral parameter by a
    companion form (the lambda and 1/lambda terms make it quadratic)."""
    ks = np.arange(-nmodes, nmodes + 1)
    Nk = ks.size
    ngrid = 512
    x = np.arange(ngrid) / ngrid
    w = v.w_at(x)
    emq, eq = v.exp_q_at(x)
    wm = np.fft.fft(w) / ngrid
    em = np.fft.fft(emq) / ngrid
    ep = np.fft.fft(eq) / ngrid

    def coef(cs, m):
        return cs[m % ngrid] if abs(m) <= ngrid // 2 else 0.0

    J = np.array([[0, 1], [-1, 0]], complex)
    Z = np.array([[0, 1], [1, 0]], complex)
    T = np.zeros((2 * Nk, 2 * Nk), complex)
    B2 = np.zeros((2 * Nk, 2 * Nk), complex)
    for i, k in enumerate(ks):
        T[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] += -J * (1j * np.pi * k)
        for j, k2 in enumerate(ks):
            if (k - k2) % 2:
                continue
            m = (k - k2) // 2
            cw = coef(wm, m)
            if cw != 0:
                T[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] += -(cw / 4.0) * Z
            B2[2 * i, 2 * j] += coef(em, m) / 16.0
            B2[2 * i + 1, 2 * j + 1] += coef(ep, m) / 16.0
    Np = 2 * Nk
    C = np.zeros((2 * Np, 2 * Np), complex)
    C[:Np, Np:] = np.eye(Np)
    C[Np:, :Np] = B2
    C[Np:, Np:] = T
    ev = np.linalg.eigvals(C)
    return np.sort(ev[(ev.real > 0.05) & (np.abs(ev.imag) < 1e-7)].real)


def test_periodic_against_direct_discretization(v_seed, tab16):
    ev = _direct_period2_eigenvalues(v_seed)
    for n in (1, 2, 3):
        lm, lp = tab16.lam_pm(n)
        close_m = np.min(np.abs(ev - lm.real))
        close_p = np.min(np.abs(ev - lp.real))
        assert close_m < 5e-6 and close_p < 5e-6
    # the n=1 gap is open and its width matches the discretization
    block = ev[(ev > 3.0) & (ev < 3.4)]
    assert abs((block.max() - block.min()) - abs(tab16.gamma(1))) < 5e-6


def test_order_relation():
    from shgspec.spectrum import _sort_order

    assert order_le(1.0, 2.0)
    assert not order_le(2.0, 1.0)
    # moduli tie (within 1e-12) falls back to the imaginary part
    assert order_le(complex(0, -1), complex(0, 1))
    assert not order_le(complex(0, 1), complex(0, -1))
    vals = [2.2, 0.5, 1.0, 1.0 + 0.3j, 0.02]
    ref = _sort_order(vals)
    # deterministic under perturbations below the tie tolerance
    rng = np.random.default_rng(1)
    for _ in range(5):
        pert = [z + complex(*rng.uniform(-1e-13, 1e-13, 2)) for z in vals]
        got = _sort_order(pert)
        assert [round(abs(z), 6) for z in got] == [round(abs(z), 6) for z in ref]


def test_two_index_relabelings(tab16):
    for j in (1, 2):
        for k in (1, 3, 7):
            assert tab16.lam2(j, -k, +1) == -tab16.lam2(j, k, -1)
            assert tab16.lam2(j, -k, -1) == -tab16.lam2(j, k, +1)
            assert tab16.gamma2(j, -k) == tab16.gamma2(j, k)
            assert tab16.tau2(j, -k) == -tab16.tau2(j, k)
    # lam_{1,0}^+ = 1/(16 lam_{2,0}^-)
    assert abs(tab16.lam2(1, 0, +1) - 1.0 / (16.0 * tab16.lam2(2, 0, -1))) < 1e-12


def test_reciprocity_of_spectra(tab16, reflected):
    _, tabr, _ = reflected
    for n in range(-6, 7):
        lm, lp = tab16.lam_pm(n)
        lmr, lpr = tabr.lam_pm(-n)
        assert abs(16.0 * lp * lmr - 1.0) < 1e-8
        assert abs(16.0 * lm * lpr - 1.0) < 1e-8
        assert abs(16.0 * tab16.mu_n(n) * tabr.mu_n(-n) - 1.0) < 1e-8
        assert abs(16.0 * tab16.lam_dot_n(n) * tabr.lam_dot_n(-n) - 1.0) < 1e-8
    assert abs(16.0 * tab16.lam_dot_star * (-tabr.lam_dot_star) - 1.0) < 1e-8


def test_reality_and_interlacing(v_seed, tab16):
    for n in range(-16, 17):
        lm, lp = tab16.lam_pm(n)
        mu = tab16.mu_n(n)
        ld = tab16.lam_dot_n(n)
        for z in (lm, lp, mu, ld):
            assert abs(z.imag) < 1e-9
        if abs(tab16.gamma(n)) > 1e-9:
            assert lm.real - 1e-10 <= mu.real <= lp.real + 1e-10
            assert lm.real - 1e-10 <= ld.real <= lp.real + 1e-10
    for n in range(-16, 16):
        assert tab16.lam_pm(n)[1].real < tab16.lam_pm(n + 1)[0].real


def test_delta_sign_at_periodic(v_seed, tab16):
    lams = np.array([tab16.lam_pm(n)[1] for n in range(-5, 6)])
    res = integrate_many(v_seed, lams, order=0, tol=1e-12)
    signs = np.array([(-1.0) ** n for n in range(-5, 6)])
    assert np.max(np.abs(res.Delta - signs)) < 1e-8


def test_disc_family():
    assert DiscFamily.pairwise_disjoint(range(-4, 5))
    c, r = DiscFamily.D(0)
    assert c == 0.25 and abs(r - 1 / (4 * np.pi)) < 1e-15
    c, r = DiscFamily.D(-1)
    assert 0 < c.real < 0.1 and r < c.real  # excludes the origin


def test_isolating_invariants(tab16, iso16):
    N = tab16.n_max
    # (I-1) holds by construction (checked in build); verify a sample
    for n in (-3, 0, 2):
        c, r = iso16.U(n)
        lm, lp = tab16.lam_pm(n)
        assert abs(lm - c) < r and abs(lp - c) < r
        assert abs(tab16.mu_n(n) - c) < r
        assert abs(tab16.lam_dot_n(n) - c) < r
    assert abs(tab16.lam_dot_star - iso16.star_center) < iso16.star_radius
    # (I-2): distance scaling with the reported constant
    cc = iso16.c_const
    for m in range(0, N + 1):
        for n in range(m + 1, N + 1):
            cm, rm = iso16.U(m)
            cn, rn = iso16.U(n)
            d = abs(cm - cn) - rm - rn
            assert d >= (n - m) / cc - 1e-12
            assert d <= cc * (n - m) + 1e-12
    # (I-4): beyond the table the discs are the reference D_n
    assert iso16.U(N + 3) == DiscFamily.D(N + 3)
    # (I-5)
    for n in range(-N, N + 1):
        cn, rn = iso16.U(n)
        assert abs(iso16.star_center - cn) - iso16.star_radius - rn >= 1.0 / cc - 1e-12


def test_contours_inside_discs(tab16, iso16):
    for j in (1, 2):
        for m in (-5, -1, 0, 2, 16):
            g = iso16.contour(j, m, scale=1.5)
            c, r = iso16.U2(j, m)
            assert abs(g.center - c) + g.radius <= r + 1e-12
            lo, hi = tab16.gap2(j, m)
            assert abs(lo - g.center) < g.radius and abs(hi - g.center) < g.radius


def test_trace_formula_zero(v_zero, iso0, tab0):
    c, r = iso0.U(1)
    tau, g2 = trace_formula_tau(v_zero, 1, ContourSpec(c, 0.9 * r, 128), tol=1e-12)
    assert abs(tau - LAM1_ZERO) < 1e-9
    assert abs(g2) < 1e-10


def test_trace_formula_small_v(v_seed, tab16, iso16):
    for n in (0, 1, -2):
        c, r = iso16.U(n)
        tau, g2 = trace_formula_tau(v_seed, n, ContourSpec(c, 0.9 * r, 128), tol=1e-12)
        assert abs(tau.imag) < 1e-10
        assert g2.real > -1e-12
        assert abs(tau - tab16.tau(n)) < 1e-7
        assert abs(g2 - tab16.gamma(n) ** 2) < 1e-7


def test_table_json_round_trip(tab16):
    clone = SpectrumTable.from_json(tab16.to_json())
    assert clone.n_max == tab16.n_max
    assert np.array_equal(clone.lam_minus, tab16.lam_minus)
    assert np.array_equal(clone.mu, tab16.mu)
    assert clone.lam_dot_star == tab16.lam_dot_star


def test_isolating_failure_far_from_real():
    # overlapping clusters: isolating neighborhoods must be refused
    lam_m = np.array([0.24, 2.0], complex)
    lam_p = np.array([0.26, 4.5], complex)  # n=1 hull swallows its neighbors
    mu = np.array([0.25, 3.0], complex)
    ld = np.array([0.25, 3.2], complex)
    bad = SpectrumTable(0, lam_m[:1], lam_p[:1], mu[:1], ld[:1], 0.25j)
    # n_max=0 table with a huge fake cluster against the surrogate neighbors
    bad.lam_minus[0] = 0.1
    bad.lam_plus[0] = 3.3
    with pytest.raises(ValueError, match="not constructible|overlap"):
        build_isolating(Potential.cosine(0.1), bad)


def test_adaptive_n_count(v_seed):
    from shgspec.spectrum import adaptive_n_count

    assert adaptive_n_count(v_seed, n_start=2, max_tries=3) == 2
