"""Standard roots, canonical square roots and infinite-product representations.

The standard root of the quadratic gap factor is

    w_{1,n}(lambda) = (tau_{1,n} - lambda) * sqrt+(1 - gamma_{1,n}^2 /
                      (4 (tau_{1,n} - lambda)^2)),

analytic off the gap segment G_{1,n}; w_{2,n} is the same expression in the
reciprocal variable mu = -1/(16 lambda) with the (2,n) nodes.  Canonical
roots are truncated products of standard roots over |k| <= K closed by the
exact zero-potential tail

    prod_{|k|>K} (t_k - z)/pi_k
        = [-sin(z) / prod_{|k|<=K} (k pi - z)/pi_k] * R_K(z),

where t_k are the zero-potential gap midpoints (omega(t_k) = k pi) and the
correction R_K = prod_{k>K} (z^2-t_k^2)/(z^2-k^2 pi^2) is summed to machine
precision with Hurwitz-zeta tail estimates.  The first factor is the sine
product over the integer lattice; R_K accounts for t_k - k pi = O(1/k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from .monodromy import lam_zero, omega, tau_zero
from .potential import pi_k

__all__ = [
    "zero_tail",
    "standard_root",
    "f1n",
    "NodeFamily",
    "CanonicalRootEvaluator",
    "canonical_root_chi1",
    "canonical_root_chi2",
    "canonical_root_chip",
    "sign_tables",
    "verify_product_reps",
    "constraint_products",
    "interpolate_reconstruct",
]

_TAIL_M_EXTRA = 64


def zero_tail(z, K: int, M: int | None = None):
    """prod over |k| > K of (t_k - z)/pi_k with t_k the zero-potential nodes.

    Vectorized in z; exact to ~1e-12 relative.  z must stay away from the
    tail lattice points k pi, |k| > K.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if M is None:
        M = K + _TAIL_M_EXTRA
    ks = np.arange(-K, K + 1)
    piks = pi_k(ks)

    # beyond the truncation ring the sine factor and R_K trade zeros against
    # poles; that is well-conditioned except essentially on a lattice node
    near = np.abs(z.real - np.pi * np.rint(z.real / np.pi)) < 1e-12
    big = np.abs(z) > (K + 0.45) * np.pi
    if np.any(big & near & (np.abs(z.imag) < 1e-12)):
        raise ValueError("tail evaluation on a lattice node beyond the ring")

    P = np.prod((ks * np.pi - z[:, None]) / piks, axis=1)
    sin_part = np.where(z == 0, 1.0, -np.sin(z) / np.where(P == 0, 1.0, P))

    kk = np.arange(K + 1, M + 1)
    t2 = lam_zero(kk) ** 2
    a2 = (kk * np.pi) ** 2
    zz = z[:, None] ** 2
    R = np.prod((zz - t2) / (zz - a2), axis=1)

    # remainder of log R over k > M: sum d_k/(a_k^2 - z^2) - (1/2) sum (...)^2,
    # d_k = t_k^2 - k^2 pi^2 = 1/8 - 1/(256 k^2 pi^2) + O(k^-4)
    w2 = (z / np.pi) ** 2
    S1 = sum(w2**j * _hurwitz_zeta(2 * j + 2, M + 1) for j in range(6)) / np.pi**2
    S1b = (
        sum((j + 1) * w2**j * _hurwitz_zeta(2 * j + 4, M + 1) for j in range(4))
        / np.pi**4
    )
    logrem = (
        0.125 * S1
        - _hurwitz_zeta(4, M + 1) / (256.0 * np.pi**4)
        - 0.5 * (1.0 / 64.0) * S1b
    )
    return sin_part * R * np.exp(logrem)


def _sroot(tau, gamma, z):
    """(tau - z) sqrt+(1 - gamma^2/(4 (tau-z)^2)); branch cut on the gap only.

    z exactly at a collapsed node (gamma = 0, z = tau) is a regular zero.
    """
    d = tau - z
    dd = 4.0 * d * d
    safe = np.where(dd == 0, 1.0, dd)
    return d * np.sqrt(1.0 - gamma**2 / safe + 0j)


def standard_root(j: int, n: int, lam, table):
    """The standard root w_{j,n}(lambda) for the given spectrum table."""
    lam = np.asarray(lam, dtype=complex)
    if j == 1:
        return _sroot(table.tau2(1, n), table.gamma2(1, n), lam)
    if j == 2:
        return _sroot(table.tau2(2, n), table.gamma2(2, n), -1.0 / (16.0 * lam))
    raise ValueError("j must be 1 or 2")


def f1n(table, n: int, lam, K: int):
    """f_{1,n}(lambda) = (1/pi_n) prod_{m != n} w_{1,m}(lambda)/pi_m."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ks = np.array([k for k in range(-K, K + 1) if k != n])
    taus = np.array([table.tau2(1, k) for k in ks])
    gams = np.array([table.gamma2(1, k) for k in ks])
    piks = pi_k(ks)
    w = _sroot(taus, gams, lam[:, None])
    return np.prod(w / piks, axis=1) * zero_tail(lam, K) / pi_k(n)


class CanonicalRootEvaluator:
    """Branch-consistent square roots sqrt_c of chi_1, chi_2 and chi_p.

    Nodes for |k| <= K come from the spectrum table (zero-potential
    surrogates beyond its range); the |k| > K tail is closed exactly.  All
    evaluators are vectorized over lambda and pure.
    """

    def __init__(self, table, K: int):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.table = table
        self.K = int(K)
        ks = np.arange(-K, K + 1)
        self.ks = ks
        self.piks = pi_k(ks)
        self.tau1 = np.array([table.tau2(1, k) for k in ks])
        self.gam1 = np.array([table.gamma2(1, k) for k in ks])
        self.tau2 = np.array([table.tau2(2, k) for k in ks])
        self.gam2 = np.array([table.gamma2(2, k) for k in ks])
        # branch ambiguity exists only at endpoints of open gaps; collapsed
        # gaps are removable points of the root
        ends = []
        for j in (1, 2):
            for k in ks:
                lo, hi = table.gap2(j, int(k))
                if abs(hi - lo) > 1e-9:
                    ends += [lo, hi]
        self._gap_ends = np.asarray(ends if ends else [np.inf], dtype=complex)
        self.chi1_zero = complex(self.chi1(np.array([0.0 + 0j]))[0])

    def w1(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        return _sroot(self.tau1, self.gam1, lam[:, None])

    def w2(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        mu = -1.0 / (16.0 * lam)
        return _sroot(self.tau2, self.gam2, mu[:, None])

    def chi1(self, lam):
        """sqrt_c of chi_{p,1}: the product of all w_{1,k}/pi_k (analytic at 0)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        return np.prod(self.w1(lam) / self.piks, axis=1) * zero_tail(lam, self.K)

    def chi2(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        mu = -1.0 / (16.0 * lam)
        return np.prod(self.w2(lam) / self.piks, axis=1) * zero_tail(mu, self.K)

    def chi2_inf(self) -> complex:
        w = _sroot(self.tau2, self.gam2, np.zeros(1)[:, None] * 0j)
        return complex(
            np.prod(w / self.piks, axis=1)[0] * zero_tail(np.array([0.0 + 0j]), self.K)[0]
        )

    def chip(self, lam, check_gaps: bool = True):
        """sqrt_c of chi_p = i * sqrt_c(chi_1) sqrt_c(chi_2) / sqrt_c(chi_1)(0)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        if check_gaps:
            d = np.abs(lam[:, None] - self._gap_ends[None, :])
            if np.any(d < 1e-10):
                raise ValueError(
                    "lambda within 1e-10 of a gap endpoint: branch ambiguous"
                )
        return 1j * self.chi1(lam) * self.chi2(lam) / self.chi1_zero

    def chip_from_below(self, lam_real, seg_len):
        """Gap-interior values as the limit from below, Im lambda -> 0^-."""
        eps = 1e-7 * max(float(seg_len), 1e-30)
        lam = np.atleast_1d(np.asarray(lam_real, dtype=complex)) - 1j * eps
        return self.chip(lam, check_gaps=False)


def canonical_root_chi1(lam, table, K: int):
    """sqrt_c of chi_{p,1} at lam (truncation K, sine-closed tails)."""
    return CanonicalRootEvaluator(table, K).chi1(lam)


def canonical_root_chi2(lam, table, K: int):
    return CanonicalRootEvaluator(table, K).chi2(lam)


def canonical_root_chip(lam, table, K: int):
    """The canonical square root of chi_p = Delta^2 - 1 off the gaps."""
    return CanonicalRootEvaluator(table, K).chip(lam)


# ---------------------------------------------------------------------------
# sign tables (real potentials)


def sign_tables(v, table, K: int | None = None, samples_per_band: int = 3):
    """Verify the sign conventions of sqrt_c(chi_p) and f_{1,n} on the real axis.

    Checks, for a real potential:
      * between consecutive gaps on the positive axis (both families),
        (-1)^n Im sqrt_c(chi_p) > 0 with n the index of the right-hand gap;
      * inside open gaps approached from below, (-1)^(n+1) sqrt_c(chi_p) > 0,
        for the 1- and 2-family alike (skipped when the gap is numerically a
        point);
      * (-1)^n f_{1,n} > 0 between the flanking gaps of index n.
    Returns a report dict; raises nothing, failures are listed.
    """
    if not v.real:
        raise ValueError("sign tables are defined for real potentials")
    N = table.n_max
    if K is None:
        K = max(N, 8)
    ev = CanonicalRootEvaluator(table, K)
    failures = []
    checked = 0
    skipped = 0

    # positive-axis gaps, sorted: (family, index, lo, hi)
    gaps = []
    for n in range(0, N + 1):
        lo, hi = table.gap2(1, n)
        gaps.append((1, n, lo.real, hi.real))
    for m in range(1, N + 1):
        lo, hi = table.gap2(2, -m)
        gaps.append((2, -m, lo.real, hi.real))
    gaps.sort(key=lambda g: g[2])

    # (i) inter-band signs
    for left, right in zip(gaps[:-1], gaps[1:]):
        a, b = left[3], right[2]
        if b - a <= 0:
            continue
        xs = a + (b - a) * np.linspace(0.15, 0.85, samples_per_band)
        vals = ev.chip(xs.astype(complex))
        want = (-1.0) ** right[1]
        checked += 1
        if not np.all(want * vals.imag > 0):
            failures.append(
                ("interband", right[0], right[1], xs[np.argmin(want * vals.imag)])
            )

    # (ii) gap-interior signs, from below
    for j in (1, 2):
        for n in range(-N, N + 1):
            lo, hi = table.gap2(j, n)
            seg = abs(hi - lo)
            if seg <= 1e-9 * (1.0 + abs(lo)):
                skipped += 1
                continue
            xs = lo.real + (hi.real - lo.real) * np.linspace(
                0.2, 0.8, samples_per_band
            )
            vals = ev.chip_from_below(xs, seg)
            want = (-1.0) ** (n + 1)
            checked += 1
            if not np.all(want * vals.real > 0):
                failures.append(("gap-interior", j, n, xs[np.argmin(want * vals.real)]))

    # (iii) f_{1,n} between flanking gaps
    for n in range(-N + 1, N):
        a = table.lam2(1, n - 1, +1).real
        b = table.lam2(1, n + 1, -1).real
        xs = a + (b - a) * np.linspace(0.1, 0.9, samples_per_band)
        vals = f1n(table, n, xs.astype(complex), K)
        want = (-1.0) ** n
        checked += 1
        if not np.all(want * vals.real > 0):
            failures.append(("f1n", 1, n, xs[np.argmin(want * vals.real)]))

    return {"checked": checked, "skipped": skipped, "failures": failures}


# ---------------------------------------------------------------------------
# product representations


def product_chi_p(table, K, lam):
    """chi_p by its product representation -c_p chi_{p,1} chi_{p,2}."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ks = np.arange(-K, K + 1)
    piks = pi_k(ks)
    lp1 = np.array([table.lam2(1, int(k), +1) for k in ks])
    lm1 = np.array([table.lam2(1, int(k), -1) for k in ks])
    lp2 = np.array([table.lam2(2, int(k), +1) for k in ks])
    lm2 = np.array([table.lam2(2, int(k), -1) for k in ks])
    t1 = zero_tail(lam, K)
    chi_p1 = (
        np.prod((lp1 - lam[:, None]) * (lm1 - lam[:, None]) / piks**2, axis=1)
        * t1
        * t1
    )
    mu = -1.0 / (16.0 * lam)
    t2 = zero_tail(mu, K)
    chi_p2 = (
        np.prod((lp2 - mu[:, None]) * (lm2 - mu[:, None]) / piks**2, axis=1) * t2 * t2
    )
    t0 = zero_tail(np.array([0.0 + 0j]), K)[0]
    chi_p1_zero = np.prod(lp1 * lm1 / piks**2) * t0 * t0
    return -chi_p1 * chi_p2 / chi_p1_zero


def product_chi_D(table, K, lam):
    """chi_D by its product representation -c_D chi_{D,1} chi_{D,2}."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ks = np.arange(-K, K + 1)
    piks = pi_k(ks)
    mu1 = np.array([table.mu2(1, int(k)) for k in ks])
    chi_D1 = np.prod((mu1 - lam[:, None]) / piks, axis=1) * zero_tail(lam, K)
    mu = -1.0 / (16.0 * lam)
    mu2 = np.array([table.mu2(2, int(k)) for k in ks])
    chi_D2 = np.prod((mu2 - mu[:, None]) / piks, axis=1) * zero_tail(mu, K)
    t0 = zero_tail(np.array([0.0 + 0j]), K)[0]
    chi_D2_inf = np.prod(mu2 / piks) * t0
    return -chi_D1 * chi_D2 / chi_D2_inf


def product_delta_dot(table, K, lam):
    """Delta_dot by its product representation
    c * (1 - lam_dot_*^2/lam^2) * Ddot_1 * Ddot_2."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ks = np.arange(-K, K + 1)
    piks = pi_k(ks)
    d1 = np.array([table.lam_dot2(1, int(k)) for k in ks])
    dd1 = np.prod((d1 - lam[:, None]) / piks, axis=1) * zero_tail(lam, K)
    mu = -1.0 / (16.0 * lam)
    d2 = np.array([table.lam_dot2(2, int(k)) for k in ks])
    dd2 = np.prod((d2 - mu[:, None]) / piks, axis=1) * zero_tail(mu, K)
    t0 = zero_tail(np.array([0.0 + 0j]), K)[0]
    dd2_inf = np.prod(d2 / piks) * t0
    star = table.lam_dot_star
    return (1.0 - star**2 / lam**2) * dd1 * dd2 / dd2_inf


def constraint_products(table, K):
    """The three truncated constraint identities, each expected -> 1.

    Tail factors beyond the table range pair to exactly 1 by the
    zero-potential reciprocity lambda_{-k} = 1/(16 lambda_k), so only the
    tabulated range contributes.  The Dirichlet identity carries e^{-q(0)}:
    numerically chi_{D,2}(inf) = e^{-q(0)} chi_{D,1}(0) to machine precision.
    """
    ns = np.arange(1, K + 1)
    # periodic: (16 lam_0^+ lam_0^-)^2 prod (lam_n^+ 16 lam_-n^+)^2 (lam_n^- 16 lam_-n^-)^2
    l0m, l0p = table.lam_pm(0)
    per = (16.0 * l0p * l0m) ** 2
    for n in ns:
        lpm, lpp = table.lam_pm(int(n))
        lmm, lmp = table.lam_pm(int(-n))
        per *= (lpp * 16.0 * lmp) ** 2 * (lpm * 16.0 * lmm) ** 2
    # Dirichlet: e^{-q(0)} 16 mu_0^2 prod (mu_n 16 mu_-n)^2
    dir_ = np.exp(-table.q0) * 16.0 * table.mu_n(0) ** 2
    for n in ns:
        dir_ *= (table.mu_n(int(n)) * 16.0 * table.mu_n(int(-n))) ** 2
    # Delta_dot: -ld_*^2 (16 ld_0)^2 prod (ld_n 16 ld_-n)^2
    ddot = -table.lam_dot_star**2 * (16.0 * table.lam_dot_n(0)) ** 2
    for n in ns:
        ddot *= (table.lam_dot_n(int(n)) * 16.0 * table.lam_dot_n(int(-n))) ** 2
    return {"periodic": complex(per), "dirichlet": complex(dir_), "delta_dot": complex(ddot)}


def verify_product_reps(v, table, K, lams=None, tol_ode=1e-11):
    """Relative residuals of the three product representations against the
    integrator at off-gap sample points, plus the constraint products."""
    from .monodromy import integrate_many

    if lams is None:
        lams = np.array(
            [0.7, 1.9, 2.6 + 0.3j, 4.1, 5.6 - 0.2j, 7.3, 8.8 + 0.4j, 10.2, 0.11, 11.9]
        )
    lams = np.asarray(lams, dtype=complex)
    res = integrate_many(v, lams, order=1, tol=tol_ode)
    rel = lambda a, b: float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12)))
    out = {
        "chi_p": rel(product_chi_p(table, K, lams), res.chi_p),
        "chi_D": rel(product_chi_D(table, K, lams), res.chi_D),
        "delta_dot": rel(product_delta_dot(table, K, lams), res.Delta_dot),
    }
    cons = constraint_products(table, K)
    out["constraint_periodic"] = abs(cons["periodic"] - 1.0)
    out["constraint_dirichlet"] = abs(cons["dirichlet"] - 1.0)
    out["constraint_delta_dot"] = abs(cons["delta_dot"] - 1.0)
    return out


# ---------------------------------------------------------------------------
# interpolation (residue reconstruction on the node family)


@dataclass(frozen=True)
class NodeFamily:
    """Two node sequences sigma_{1,k}, sigma_{2,k} (|k| <= K) with
    zero-potential tails; kappa_{2,k} = -1/(16 sigma_{2,k})."""

    sigma1: np.ndarray
    sigma2: np.ndarray
    K: int

    def __post_init__(self):
        if self.sigma1.shape != (2 * self.K + 1,) or self.sigma2.shape != (
            2 * self.K + 1,
        ):
            raise ValueError("node arrays must cover k = -K..K")
        if np.any(self.sigma1 == 0) or np.any(self.sigma2 == 0):
            raise ValueError("nodes must be nonzero")

    @property
    def ks(self):
        return np.arange(-self.K, self.K + 1)

    @property
    def kappa2(self):
        return -1.0 / (16.0 * self.sigma2)

    def tail_deviation(self):
        """Monitored, not asserted: cumulative sums of |sigma_{j,k} - k pi|^2,
        whose increments should die out toward the edge of the window."""
        d1 = np.abs(self.sigma1 - self.ks * np.pi) ** 2
        d2 = np.abs(self.sigma2 - self.ks * np.pi) ** 2
        return np.cumsum(d1), np.cumsum(d2)

    @staticmethod
    def from_table(table, K) -> "NodeFamily":
        ks = np.arange(-K, K + 1)
        s1 = np.array([table.tau2(1, int(k)) for k in ks])
        s2 = np.array([table.tau2(2, int(k)) for k in ks])
        return NodeFamily(s1, s2, K)

    def f1(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        piks = pi_k(self.ks)
        return np.prod((self.sigma1 - z[:, None]) / piks, axis=1) * zero_tail(
            z, self.K
        )

    def f2(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        mu = -1.0 / (16.0 * z)
        piks = pi_k(self.ks)
        return np.prod((self.sigma2 - mu[:, None]) / piks, axis=1) * zero_tail(
            mu, self.K
        )

    def f2_inf(self) -> complex:
        piks = pi_k(self.ks)
        return complex(
            np.prod(self.sigma2 / piks)
            * zero_tail(np.array([0.0 + 0j]), self.K)[0]
        )

    def f(self, z):
        return self.f1(z) * self.f2(z)

    def fdot_at_sigma1(self, n):
        """d/dz [f1 f2] at z = sigma_{1,n}: product with the n-factor removed."""
        i = n + self.K
        z = self.sigma1[i : i + 1]
        piks = pi_k(self.ks)
        mask = np.ones(2 * self.K + 1, dtype=bool)
        mask[i] = False
        reduced = (
            np.prod((self.sigma1[mask] - z[:, None]) / piks[mask], axis=1)[0]
            * zero_tail(z, self.K)[0]
        )
        return complex(-reduced / pi_k(n) * self.f2(z)[0])

    def fdot_at_kappa2(self, n):
        """d/dz [f1 f2] at z = kappa_{2,n}; only the n-factor of f2 vanishes."""
        i = n + self.K
        z = self.kappa2[i : i + 1]
        mu = -1.0 / (16.0 * z)
        piks = pi_k(self.ks)
        mask = np.ones(2 * self.K + 1, dtype=bool)
        mask[i] = False
        reduced = (
            np.prod((self.sigma2[mask] - mu[:, None]) / piks[mask], axis=1)[0]
            * zero_tail(mu, self.K)[0]
        )
        dfactor = -1.0 / (16.0 * z[0] ** 2) / pi_k(n)
        return complex(self.f1(z)[0] * reduced * dfactor)


def _zero_chi1(z):
    """The full zero-potential node product prod_k (t_k - z)/pi_k, |z| small."""
    return (tau_zero(0) - np.asarray(z, complex)) * zero_tail(z, 0)


def _w_removed(n):
    """prod over k != n of (t_k - t_n)/pi_k, in closed form.

    With h(z) = prod_k (t_k - z)/pi_k = -sin(omega(z)) h(0)/h(-(16 z)^{-1}),
    the removed-factor product equals -pi_n h'(t_n).
    """
    tn = complex(tau_zero(n))
    h0 = complex(_zero_chi1(np.array([0.0 + 0j]))[0])
    h2 = complex(_zero_chi1(np.array([-1.0 / (16.0 * tn)]))[0])
    return pi_k(n) * (-1.0) ** n * (1.0 + 1.0 / (16.0 * tn**2)) * h0 / h2


def interpolate_reconstruct(
    nodes: NodeFamily, phi_sigma1, phi_kappa2, z, phi_fn=None, sum_window=None
) -> complex:
    """Residue-sum reconstruction of an analytic function from its node values:

        phi(z) ~= sum_n phi(sigma_{1,n})/f'(sigma_{1,n}) * f(z)/(z - sigma_{1,n})
                 + phi(kappa_{2,n})/f'(kappa_{2,n}) * f(z)/(z - kappa_{2,n})

    The sum over |n| <= K uses the supplied node values.  When phi_fn is
    given, the residue sum is extended over the zero-potential tail nodes up
    to |n| <= sum_window (default 3K); the tail weights f'(t_n), f'(kappa_n)
    are assembled from the closed-form removed-factor products.
    """
    z = complex(z)
    allnodes = np.concatenate([nodes.sigma1, nodes.kappa2])
    d = np.abs(allnodes[:, None] - allnodes[None, :])
    np.fill_diagonal(d, np.inf)
    if d.min() < 1e-12:
        raise ValueError("node collision: nodes must be pairwise distinct")
    if np.min(np.abs(allnodes - z)) < 1e-12:
        raise ValueError("z coincides with a node")
    fz = complex(nodes.f(np.array([z]))[0])
    total = 0.0 + 0.0j
    for idx, n in enumerate(nodes.ks):
        p1 = phi_sigma1[idx]
        if p1 != 0:
            total += p1 / nodes.fdot_at_sigma1(int(n)) * fz / (z - nodes.sigma1[idx])
        p2 = phi_kappa2[idx]
        if p2 != 0:
            total += p2 / nodes.fdot_at_kappa2(int(n)) * fz / (z - nodes.kappa2[idx])
    if phi_fn is None:
        return total

    K = nodes.K
    window = sum_window or 3 * K
    piks = pi_k(nodes.ks)
    for n in [m for m in range(-window, window + 1) if abs(m) > K]:
        tn = complex(tau_zero(n))
        w_red = _w_removed(n) / np.prod((tau_zero(nodes.ks) - tn) / piks)
        # sigma-ring tail node t_n: f' = -(1/pi_n) * reduced f1 * f2
        red1 = np.prod((nodes.sigma1 - tn) / piks) * w_red
        fdot_s = -red1 / pi_k(n) * complex(nodes.f2(np.array([tn]))[0])
        p1 = complex(phi_fn(tn))
        if p1 != 0:
            total += p1 / fdot_s * fz / (z - tn)
        # kappa-ring tail node -1/(16 t_n): f' = f1 * reduced f2 * d mu/dz / pi_n
        kap = -1.0 / (16.0 * tn)
        mu = tn  # -1/(16 kap)
        red2 = np.prod((nodes.sigma2 - mu) / piks) * w_red
        fdot_k = (
            complex(nodes.f1(np.array([kap]))[0])
            * red2
            * (-1.0 / (16.0 * kap**2))
            / pi_k(n)
        )
        p2 = complex(phi_fn(kap))
        if p2 != 0:
            total += p2 / fdot_k * fz / (z - kap)
    return total
