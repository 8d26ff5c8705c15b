"""Localization and labeling of the spectral data.

Periodic eigenvalues lambda_n^+- are the roots of chi_p = Delta^2 - 1,
Dirichlet eigenvalues mu_n the roots of chi_D, and lambda_dot_n the roots of
d Delta/d lambda, all certified by argument-principle counts and refined by
Newton iteration on the exact monodromy functions.  The module also builds
the two-index relabelings used by the product representations, and the
isolating neighborhoods (discs U_n, U_* and contours Gamma_{j,m}) on which
every contour integral downstream lives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .monodromy import integrate_many, lam_zero
from .potential import Potential
from .quadrature import ContourSpec, winding_number

__all__ = [
    "DiscFamily",
    "SpectrumTable",
    "IsolatingNeighborhoods",
    "order_le",
    "count_roots",
    "count_annulus",
    "locate_periodic",
    "locate_dirichlet",
    "locate_delta_dot",
    "locate_delta_dot_star",
    "build_table",
    "build_isolating",
    "certify_counts",
    "adaptive_n_count",
    "delta_sign_check",
    "trace_formula_tau",
]

ORDER_TIE_TOL = 1e-12
DOUBLE_ROOT_TOL = 1e-10


def order_le(a, b, tol=ORDER_TIE_TOL) -> bool:
    """The order on C+: compare moduli first (with a tie tolerance), then Im."""
    a, b = complex(a), complex(b)
    if abs(a) - abs(b) < -tol:
        return True
    if abs(a) - abs(b) > tol:
        return False
    return a.imag <= b.imag


def _sort_order(values):
    vals = list(values)
    out = []
    while vals:
        m = vals[0]
        for w in vals[1:]:
            if order_le(w, m):
                m = w
        vals.remove(m)
        out.append(m)
    return out


# ---------------------------------------------------------------------------
# domains D_n, B_n, A_N


def _mobius_disc(center, radius):
    """Image of the disc |z - c| < r (0 outside) under z -> 1/(16 z)."""
    c = complex(center)
    r = float(radius)
    d = abs(c) ** 2 - r**2
    if d <= 0:
        raise ValueError("disc contains the origin; reciprocal image not a disc")
    return np.conj(c) / (16.0 * d), r / (16.0 * d)


class DiscFamily:
    """The reference discs D_n and balls B_n used for root counting."""

    @staticmethod
    def D(n):
        """D_0 around 1/4, D_n around n*pi (n>=1), D_{-n} = reciprocal image."""
        if n == 0:
            return 0.25 + 0j, 1.0 / (4.0 * np.pi)
        if n > 0:
            return n * np.pi + 0j, np.pi / 3.0
        c, r = DiscFamily.D(-n)
        return _mobius_disc(c, r)

    @staticmethod
    def B_radius(n):
        if n == 0:
            return np.pi / 2.0
        if n > 0:
            return n * np.pi + np.pi / 2.0
        return 1.0 / (16.0 * (abs(n) * np.pi + np.pi / 2.0))

    @staticmethod
    def pairwise_disjoint(n_range) -> bool:
        discs = [DiscFamily.D(n) for n in n_range]
        for i in range(len(discs)):
            for j in range(i + 1, len(discs)):
                (c1, r1), (c2, r2) = discs[i], discs[j]
                if abs(c1 - c2) <= r1 + r2:
                    return False
        return True


# ---------------------------------------------------------------------------
# argument-principle counting


def _field(v, kind, tol):
    """Callable lams -> (f, df/dlam) backed by the monodromy integrator."""

    def f_df(lams):
        order = 2 if kind == "ddelta" else 1
        res = integrate_many(v, lams, order=order, tol=tol)
        if kind == "chi_p":
            return res.chi_p, res.chi_p_dot
        if kind == "chi_D":
            return res.chi_D, res.chi_D_dot
        if kind == "ddelta":
            return res.Delta_dot, res.Delta_ddot
        raise ValueError(kind)

    return f_df


def count_roots(f_df, contour: ContourSpec, min_abs: float = 1e-8):
    """Number of roots inside the contour by the argument principle.

    f_df maps an array of lambda to (f, f'); returns (count, dist-from-integer).
    """
    return winding_number(f_df, contour, min_abs=min_abs)


def count_annulus(v: Potential, N: int, tol=1e-11, nodes=None):
    """Root counts of chi_p, chi_D and Delta_dot in the annulus A_N.

    For potentials in the working neighborhood the annulus holds exactly
    4+8N periodic eigenvalues, 2+4N Dirichlet eigenvalues and 4+4N roots of
    the discriminant derivative.
    """
    if nodes is None:
        nodes = max(256, 96 * N)
    outer = ContourSpec(0.0, DiscFamily.B_radius(N), nodes)
    inner = ContourSpec(0.0, DiscFamily.B_radius(-N), nodes)
    out = {}
    for kind in ("chi_p", "chi_D", "ddelta"):
        f_df = _field(v, kind, tol)
        n_out, d1 = winding_number(f_df, outer)
        n_in, d2 = winding_number(f_df, inner)
        out[kind] = (n_out - n_in, max(d1, d2))
    return out


def adaptive_n_count(v: Potential, n_start=1, max_tries=6, tol=1e-11) -> int:
    """Smallest cutoff N whose annulus counts match the expected totals.

    Fails with a working-neighborhood error if no N up to n_start+max_tries
    produces a clean count.
    """
    for N in range(n_start, n_start + max_tries):
        try:
            cnt = count_annulus(v, N, tol=tol)
        except ValueError:
            continue
        if (
            cnt["chi_p"][0] == 4 + 8 * N
            and cnt["chi_D"][0] == 2 + 4 * N
            and cnt["ddelta"][0] == 4 + 4 * N
        ):
            return N
    raise RuntimeError(
        "no annulus cutoff with clean counts found; potential outside the "
        "working neighborhood"
    )


# ---------------------------------------------------------------------------
# Newton localization (batched over indices)


def _newton_batch(v, seeds, kind, tol=1e-12, max_iter=40):
    """Batched Newton on a monodromy scalar; stops per element on a tiny step
    or on stagnation at the integrator noise floor."""
    lam = np.array(seeds, dtype=complex)
    active = np.ones(lam.size, dtype=bool)
    prev = np.full(lam.size, np.inf)
    f_df = _field(v, kind, tol)
    for it in range(max_iter):
        if not active.any():
            break
        f, df = f_df(lam[active])
        step = f / df
        cap = np.minimum(0.5, 0.2 * np.abs(lam[active]) + 1e-4)
        big = np.abs(step) > cap
        if big.any():
            step[big] *= cap[big] / np.abs(step[big])
        lam[active] = lam[active] - step
        s = np.abs(step)
        done = s <= 1e-13 * (1.0 + np.abs(lam[active]))
        if it >= 3:
            done |= s >= 0.5 * prev[active]
        prev[active] = s
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    if active.any():
        raise RuntimeError(
            f"Newton localization for {kind} did not converge at indices "
            f"{np.flatnonzero(active)}"
        )
    return lam


def locate_delta_dot(v: Potential, n: int, tol=1e-12) -> complex:
    """The root of d Delta/d lambda in U_n (simple for real v)."""
    return complex(_newton_batch(v, [lam_zero(n)], "ddelta", tol=tol)[0])


def locate_delta_dot_star(v: Potential, tol=1e-12) -> complex:
    """The extra Delta_dot root on the positive imaginary axis (i/4 at v=0)."""
    return complex(_newton_batch(v, [0.25j], "ddelta", tol=tol)[0])


def locate_dirichlet(v: Potential, n: int, tol=1e-12) -> complex:
    return complex(_newton_batch(v, [lam_zero(n)], "chi_D", tol=tol)[0])


def _periodic_pair_from_ddot(v, lam_dots, tol=1e-13, tol_double=DOUBLE_ROOT_TOL):
    """Quadratic model of chi_p at the Delta_dot roots, then Newton polish.

    chi_p'(lam_dot)=0, so chi_p ~ chi_p(ld) + chi_p''(ld)(lam-ld)^2/2 with
    chi_p'' = 2(Delta_dot^2 + Delta*Delta_ddot); the two roots sit at
    ld +- h, h = sqrt(-2 chi_p / chi_p'').  The squared half-width h^2 is
    measured down to the integrator noise (estimated by re-running at a
    coarser tolerance); below max(tol_double, noise) the pair is a double
    eigenvalue.  Newton polish on chi_p is only applied to well-open gaps,
    where the roots are comfortably simple; for barely-open gaps the
    quadratic model is already more accurate than Newton on a nearly double
    root can be.
    """
    lam_dots = np.asarray(lam_dots, dtype=complex)
    res = integrate_many(v, lam_dots, order=2, tol=tol)
    res_coarse = integrate_many(v, lam_dots, order=2, tol=min(100 * tol, 1e-6))
    chi = res.chi_p
    noise = np.abs(chi - res_coarse.chi_p) + 1e-15 * (1.0 + np.abs(lam_dots))
    chi_dd = 2.0 * (res.Delta_dot**2 + res.Delta * res.Delta_ddot)
    h2 = -2.0 * chi / chi_dd
    h = np.sqrt(h2 + 0j)
    scale = 1.0 + np.abs(lam_dots)
    dbl = np.abs(h2) < np.maximum(tol_double * scale, 25.0 * noise / np.abs(chi_dd))
    minus = np.where(dbl, lam_dots, lam_dots - h)
    plus = np.where(dbl, lam_dots, lam_dots + h)
    # the quadratic model degrades on the local oscillation scale omega';
    # near the reciprocal end omega' ~ 1/(16 lambda^2) is large, so the
    # polish decision uses the rescaled half-width
    freq = np.abs(1.0 + 1.0 / (16.0 * lam_dots**2))
    polish = (~dbl) & (np.abs(h) * freq > 1e-4 * scale)
    if polish.any():
        seeds = np.concatenate([minus[polish], plus[polish]])
        polished = _newton_batch(v, seeds, "chi_p", tol=tol)
        k = polished.size // 2
        minus[polish] = polished[:k]
        plus[polish] = polished[k:]
    # enforce the C+ listing order
    swap = np.array(
        [not order_le(a, b) for a, b in zip(minus, plus)], dtype=bool
    )
    minus[swap], plus[swap] = plus[swap].copy(), minus[swap].copy()
    return minus, plus, dbl


def locate_periodic(v: Potential, n: int, tol=1e-12, tol_double=DOUBLE_ROOT_TOL):
    """The pair (lambda_n^-, lambda_n^+), ordered; equal for a double root."""
    ld = locate_delta_dot(v, n, tol=tol)
    minus, plus, _ = _periodic_pair_from_ddot(v, [ld], tol=tol, tol_double=tol_double)
    return complex(minus[0]), complex(plus[0])


# ---------------------------------------------------------------------------
# the spectrum table


@dataclass
class SpectrumTable:
    """Labeled spectral data for |n| <= n_max, with zero-potential surrogates
    beyond (used only as product tails)."""

    n_max: int
    lam_minus: np.ndarray  # index n+n_max
    lam_plus: np.ndarray
    mu: np.ndarray
    lam_dot: np.ndarray
    lam_dot_star: complex
    real_potential: bool = True
    q0: complex = 0.0  # q(0), enters the Dirichlet constraint product
    _iso: "IsolatingNeighborhoods | None" = field(default=None, repr=False)

    # -- single-index access with surrogates --------------------------------

    def _get(self, arr, n):
        if abs(n) <= self.n_max:
            return complex(arr[n + self.n_max])
        return complex(lam_zero(n))

    def lam_pm(self, n):
        return self._get(self.lam_minus, n), self._get(self.lam_plus, n)

    def mu_n(self, n):
        return self._get(self.mu, n)

    def lam_dot_n(self, n):
        return self._get(self.lam_dot, n)

    def tau(self, n):
        lm, lp = self.lam_pm(n)
        return 0.5 * (lm + lp)

    def gamma(self, n):
        lm, lp = self.lam_pm(n)
        return lp - lm

    # -- two-index relabelings ----------------------------------------------

    def lam2(self, j, k, sign):
        s = +1 if sign in (+1, "+") else -1
        if j == 1:
            if k >= 0:
                lm, lp = self.lam_pm(k)
                return lp if s > 0 else lm
            lm, lp = self.lam_pm(-k)
            return -lm if s > 0 else -lp
        if j == 2:
            if k >= 0:
                lm, lp = self.lam_pm(-k)
                return 1.0 / (16.0 * (lm if s > 0 else lp))
            lm, lp = self.lam_pm(k)
            return -1.0 / (16.0 * (lp if s > 0 else lm))
        raise ValueError("j must be 1 or 2")

    def tau2(self, j, k):
        return 0.5 * (self.lam2(j, k, +1) + self.lam2(j, k, -1))

    def gamma2(self, j, k):
        return self.lam2(j, k, +1) - self.lam2(j, k, -1)

    def mu2(self, j, k):
        if j == 1:
            return self.mu_n(k) if k >= 0 else -self.mu_n(-k)
        if j == 2:
            return (
                1.0 / (16.0 * self.mu_n(-k))
                if k >= 0
                else -1.0 / (16.0 * self.mu_n(k))
            )
        raise ValueError("j must be 1 or 2")

    def lam_dot2(self, j, k):
        if j == 1:
            return self.lam_dot_n(k) if k >= 0 else -self.lam_dot_n(-k)
        if j == 2:
            return (
                1.0 / (16.0 * self.lam_dot_n(-k))
                if k >= 0
                else -1.0 / (16.0 * self.lam_dot_n(k))
            )
        raise ValueError("j must be 1 or 2")

    def gap2(self, j, m):
        """Endpoints of the gap segment G_{j,m} in the lambda plane."""
        if j == 1:
            if m >= 0:
                lm, lp = self.lam_pm(m)
                return lm, lp
            lm, lp = self.lam_pm(-m)
            return -lp, -lm
        if j == 2:
            if m >= 0:
                lm, lp = self.lam_pm(-m)
                return -lp, -lm
            lm, lp = self.lam_pm(m)
            return lm, lp
        raise ValueError("j must be 1 or 2")

    def truncated(self, n_max: int) -> "SpectrumTable":
        """A view with a smaller tabulated range (surrogates beyond)."""
        if n_max > self.n_max:
            raise ValueError("cannot extend a table by truncation")
        sl = slice(self.n_max - n_max, self.n_max + n_max + 1)
        return SpectrumTable(
            n_max,
            self.lam_minus[sl],
            self.lam_plus[sl],
            self.mu[sl],
            self.lam_dot[sl],
            self.lam_dot_star,
            self.real_potential,
            self.q0,
        )

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        def c2(z):
            z = complex(z)
            return [z.real, z.imag]

        ns = list(range(-self.n_max, self.n_max + 1))
        return json.dumps(
            {
                "N_max": self.n_max,
                "real": bool(self.real_potential),
                "q0": c2(self.q0),
                "lambda": [
                    {
                        "n": n,
                        "minus": c2(self.lam_minus[n + self.n_max]),
                        "plus": c2(self.lam_plus[n + self.n_max]),
                    }
                    for n in ns
                ],
                "mu": [c2(self.mu[n + self.n_max]) for n in ns],
                "lambda_dot": [c2(self.lam_dot[n + self.n_max]) for n in ns],
                "lambda_dot_star": c2(self.lam_dot_star),
                "tau": [c2(self.tau(n)) for n in ns],
                "gamma": [c2(self.gamma(n)) for n in ns],
            }
        )

    @staticmethod
    def from_json(text: str) -> "SpectrumTable":
        d = json.loads(text)
        N = int(d["N_max"])

        def cplx(pair):
            return complex(pair[0], pair[1])

        lam_minus = np.zeros(2 * N + 1, dtype=complex)
        lam_plus = np.zeros(2 * N + 1, dtype=complex)
        for row in d["lambda"]:
            lam_minus[row["n"] + N] = cplx(row["minus"])
            lam_plus[row["n"] + N] = cplx(row["plus"])
        mu = np.array([cplx(z) for z in d["mu"]])
        ld = np.array([cplx(z) for z in d["lambda_dot"]])
        return SpectrumTable(
            N,
            lam_minus,
            lam_plus,
            mu,
            ld,
            cplx(d["lambda_dot_star"]),
            bool(d.get("real", True)),
            cplx(d.get("q0", [0.0, 0.0])),
        )


def build_table(
    v: Potential,
    n_max: int,
    tol=1e-12,
    tol_double=DOUBLE_ROOT_TOL,
) -> SpectrumTable:
    """Localize all spectral data for |n| <= n_max and label it.

    Delta_dot roots are found first (they seed the quadratic model for the
    periodic pairs), then the periodic and Dirichlet eigenvalues; all Newton
    runs are batched over the index range.
    """
    v.validate()
    ns = np.arange(-n_max, n_max + 1)
    lam_dots = _newton_batch(v, lam_zero(ns), "ddelta", tol=tol)
    minus, plus, _ = _periodic_pair_from_ddot(
        v, lam_dots, tol=tol, tol_double=tol_double
    )
    mus = _newton_batch(v, lam_dots, "chi_D", tol=tol)
    ld_star = locate_delta_dot_star(v, tol=tol)
    if ld_star.imag < 0:
        ld_star = -ld_star
    for arr in (minus, plus, mus, lam_dots):
        bad = ~((arr.real > 0) | ((np.abs(arr.real) < 1e-12) & (arr.imag > 0)))
        if bad.any():
            raise RuntimeError(
                f"eigenvalue left the right half-plane at n="
                f"{np.flatnonzero(bad) - n_max}; outside working neighborhood"
            )
    return SpectrumTable(
        n_max,
        minus,
        plus,
        mus,
        lam_dots,
        ld_star,
        v.real,
        v.q0(),
    )


def delta_sign_check(v: Potential, table: SpectrumTable, tol=1e-11):
    """max_n |Delta(lambda_n^+-) - (-1)^n| over the table (real potentials)."""
    ns = np.arange(-table.n_max, table.n_max + 1)
    lams = np.concatenate([table.lam_minus, table.lam_plus])
    res = integrate_many(v, lams, order=0, tol=tol)
    signs = np.concatenate([(-1.0) ** ns, (-1.0) ** ns])
    return float(np.max(np.abs(res.Delta - signs)))


# ---------------------------------------------------------------------------
# isolating neighborhoods


@dataclass
class IsolatingNeighborhoods:
    """Discs U_n (|n| <= n_max), the disc U_* and the contours Gamma_{j,m}."""

    n_max: int
    centers: np.ndarray  # U_n centers, index n+n_max
    radii: np.ndarray
    star_center: complex
    star_radius: float
    c_const: float
    contour_centers: np.ndarray  # Gamma_m circle data, single-index
    contour_radii: np.ndarray
    nodes: int = 64

    def U(self, n):
        if abs(n) <= self.n_max:
            return complex(self.centers[n + self.n_max]), float(
                self.radii[n + self.n_max]
            )
        return DiscFamily.D(n)

    def U2(self, j, m):
        """Two-index discs: U_{1,m}=U_m, U_{1,-m}=-U_m, U_{2,m}=-U_{-m}, U_{2,-m}=U_{-m}."""
        if j == 1:
            c, r = self.U(abs(m)) if m >= 0 else self.U(-m)
            return (c, r) if m >= 0 else (-c, r)
        if j == 2:
            c, r = self.U(-abs(m))
            return (-c, r) if m >= 0 else (c, r)
        raise ValueError("j must be 1 or 2")

    def gamma_single(self, m, nodes=None, scale=1.0) -> ContourSpec:
        """The contour Gamma_m around the single-index gap G_m."""
        if abs(m) <= self.n_max:
            c = complex(self.contour_centers[m + self.n_max])
            r = float(self.contour_radii[m + self.n_max])
        else:
            if m > 0:
                c, r = lam_zero(m) + 0j, np.pi / 5.0
            else:
                c, r = _mobius_disc(lam_zero(-m), np.pi / 5.0)
                c = complex(c)
        return ContourSpec(c, r * scale, nodes or self.nodes)

    def contour(self, j, m, nodes=None, scale=1.0) -> ContourSpec:
        """Gamma_{1,m} / Gamma_{2,m} per the two-index conventions."""
        if j == 1:
            g = self.gamma_single(abs(m) if m >= 0 else -m, nodes, scale)
            return g if m >= 0 else g.mirrored()
        if j == 2:
            g = self.gamma_single(-abs(m), nodes, scale)
            return g.mirrored() if m >= 0 else g
        raise ValueError("j must be 1 or 2")


def _cluster(table, n):
    lm, lp = table.lam_pm(n)
    pts = [lm, lp, table.mu_n(n), table.lam_dot_n(n)]
    xs = np.real(pts)
    return min(xs), max(xs)


def _disc_row(hulls):
    """Disc centers/radii from cluster hulls with one-third neighbor clearance.

    The first and last hull only serve as neighbors; no discs for them.
    """
    centers, radii = [], []
    for i in range(1, len(hulls) - 1):
        lo, hi = hulls[i]
        c = 0.5 * (lo + hi)
        s = 0.5 * (hi - lo)
        g = min(lo - hulls[i - 1][1], hulls[i + 1][0] - hi)
        if g <= 0:
            raise ValueError(
                "cluster hulls overlap; potential too far from real, "
                "isolating neighborhoods not constructible"
            )
        centers.append(c)
        radii.append(s + g / 3.0)
    return centers, radii


def build_isolating(
    v: Potential, table: SpectrumTable, nodes=64
) -> IsolatingNeighborhoods:
    """Construct discs U_n, U_* and contours Gamma_m satisfying (I-1)-(I-5).

    Discs for n >= 0 are built directly on the real axis; discs for n < 0 are
    built in the reciprocal coordinate 1/(16 lambda) (where the clusters sit
    near |n| pi) and mapped back, which makes property (I-3) hold by
    construction.  Contours are circles centered at the gap midpoints with
    radius max(2|gamma|, clearance/3) capped inside U_n, which keeps
    |gamma^2 / 4 (tau - lambda)^2| <= 1/16 on every contour.
    """
    N = table.n_max
    # positive row n = 0..N, with the n=-1 cluster as left neighbor and the
    # n = N+1 surrogate as right neighbor
    hull0 = _cluster(table, 0)
    hulls_pos = [_cluster(table, n) for n in range(-1, N + 2)]
    cpos, rpos = _disc_row(hulls_pos)  # discs for n = 0..N
    # reciprocal-space row for n = -1..-N: clusters 1/(16 lambda) sit near
    # |n| pi; the image of the n=0 cluster is the left neighbor
    rec_hulls = [tuple(sorted((1.0 / (16.0 * hull0[1]), 1.0 / (16.0 * hull0[0]))))]
    for n in range(1, N + 2):
        lo, hi = _cluster(table, -n)
        rec_hulls.append((1.0 / (16.0 * hi), 1.0 / (16.0 * lo)))
    crec, rrec = _disc_row(rec_hulls)  # discs for n = -1..-N

    centers = np.zeros(2 * N + 1, dtype=complex)
    radii = np.zeros(2 * N + 1, dtype=float)
    for n in range(0, N + 1):
        centers[n + N] = cpos[n]
        radii[n + N] = rpos[n]
    for n in range(1, N + 1):
        c, r = _mobius_disc(crec[n - 1], rrec[n - 1])
        centers[-n + N] = c
        radii[-n + N] = r

    # U_*: disc on the positive imaginary axis around lambda_dot_star
    star = complex(table.lam_dot_star)
    d0 = min(
        abs(star - centers[n + N]) - radii[n + N] for n in range(-N, N + 1)
    )
    star_radius = min(0.5 * star.imag, 0.5 * d0)
    if star_radius <= 0:
        raise ValueError("U_* not constructible; lambda_dot_star too close to U_n")

    # achieved separation constant c for (I-2), (I-3), (I-5)
    c_req = 1.0

    def dist(c1, r1, c2, r2):
        return abs(c1 - c2) - r1 - r2

    # the (I-3) family: reciprocal images of U_{-n}, n >= 0 (n=0 included)
    rec_family = [_mobius_disc(centers[N], radii[N])] + [
        (crec[i], rrec[i]) for i in range(N)
    ]
    for m in range(0, N + 1):
        for n in range(m + 1, N + 1):
            d = dist(cpos[m], rpos[m], cpos[n], rpos[n])
            if d <= 0:
                raise ValueError("U discs overlap on the positive row")
            c_req = max(c_req, (n - m) / d, d / (n - m))
            drec = dist(*rec_family[m], *rec_family[n])
            if drec <= 0:
                raise ValueError("reciprocal U discs overlap")
            c_req = max(c_req, (n - m) / drec, drec / (n - m))
    for n in range(-N, N + 1):
        d = abs(star - centers[n + N]) - star_radius - radii[n + N]
        if d <= 0:
            raise ValueError("U_* intersects a U_n")
        c_req = max(c_req, 1.0 / d)

    # contours around the single-index gaps
    ccent = np.zeros(2 * N + 1, dtype=complex)
    crad = np.zeros(2 * N + 1, dtype=float)
    for n in range(-N, N + 1):
        tau = table.tau(n)
        gam = abs(table.gamma(n))
        cen, R = centers[n + N], radii[n + N]
        clear = R - abs(tau - cen)
        r = max(2.0 * gam, clear / 3.0)
        r = min(r, 0.62 * clear)
        ccent[n + N] = tau
        crad[n + N] = r

    iso = IsolatingNeighborhoods(
        N,
        centers,
        radii,
        star,
        float(star_radius),
        float(c_req),
        ccent,
        crad,
        nodes,
    )
    _check_inclusion(table, iso)
    table._iso = iso
    return iso


def _check_inclusion(table, iso):
    """(I-1): gap, mu_n and lambda_dot_n inside U_n; lambda_dot_star in U_*."""
    N = iso.n_max
    for n in range(-N, N + 1):
        c, r = iso.U(n)
        lm, lp = table.lam_pm(n)
        for z in (lm, lp, table.mu_n(n), table.lam_dot_n(n)):
            if abs(z - c) >= r:
                raise ValueError(f"(I-1) violated at n={n}: {z} outside U_n")
    if abs(table.lam_dot_star - iso.star_center) >= iso.star_radius:
        raise ValueError("(I-1) violated: lambda_dot_star outside U_*")


def certify_counts(v, table, iso, n_range=None, tol=1e-11):
    """Argument-principle certification: 2 chi_p roots, 1 chi_D root and
    1 Delta_dot root in each U_n; 1 Delta_dot root in U_*."""
    if n_range is None:
        n_range = range(-min(iso.n_max, 6), min(iso.n_max, 6) + 1)
    report = {}
    for n in n_range:
        c, r = iso.U(n)
        spec = ContourSpec(c, r * 0.98, iso.nodes)
        got = {}
        for kind, expect in (("chi_p", 2), ("chi_D", 1), ("ddelta", 1)):
            cnt, dist = count_roots(_field(v, kind, tol), spec)
            got[kind] = cnt
            if cnt != expect:
                raise RuntimeError(
                    f"count of {kind} roots in U_{n} is {cnt}, expected {expect}"
                )
        report[n] = got
    cnt, _ = count_roots(
        _field(v, "ddelta", tol),
        ContourSpec(iso.star_center, iso.star_radius * 0.98, iso.nodes),
    )
    if cnt != 1:
        raise RuntimeError(f"count of Delta_dot roots in U_* is {cnt}, expected 1")
    report["star"] = cnt
    return report


# ---------------------------------------------------------------------------
# trace formula


def trace_formula_tau(v: Potential, n: int, contour: ContourSpec, tol=1e-11):
    """tau_n and gamma_n^2 from the argument-principle moments

        (lambda_n^+)^k + (lambda_n^-)^k
            = (1/2 pi i) oint lambda^k 2 Delta Delta_dot/(Delta^2-1) dlambda.
    """
    z, dz = contour.points()
    res = integrate_many(v, z, order=1, tol=tol)
    kern = res.chi_p_dot / res.chi_p
    m1 = np.sum(z * kern * dz) / (2j * np.pi)
    m2 = np.sum(z * z * kern * dz) / (2j * np.pi)
    tau = m1 / 2.0
    gamma_sq = 2.0 * m2 - m1 * m1
    return complex(tau), complex(gamma_sq)
