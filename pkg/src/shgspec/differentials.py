"""Assembly and Newton solution of the contour-integral normalization system.

For index n >= 0 the unknowns are the roots sigma_{1,k} (k != n) and
sigma_{2,k} of the candidate differential numerator

    psi_n(lambda) = -(1/pi_n) (1/f_{n,2}(inf)) f_{n,1}(lambda) f_{n,2}(lambda),

    f_{n,1} = prod_{k != n} (sigma_{1,k} - lambda)/pi_k,
    f_{n,2} = prod_k (sigma_{2,k} + 1/(16 lambda))/pi_k,

and the equations demand vanishing contour integrals of psi_n/sqrt_c(chi_p)
over Gamma_{1,m} (m != n) and Gamma_{2,m} (all m):

    F_{1,m} = (n-m)        oint_{Gamma_{1,m}} psi_n/sqrt_c(chi_p) dlambda,
    F_{2,m} = 16 pi_m^2 pi_n oint_{Gamma_{2,m}} psi_n/sqrt_c(chi_p) dlambda.

The unit integral over Gamma_{1,n} then holds automatically.  The analytic
Jacobian inserts 1/(sigma_{1,r}-lambda), resp.
1/(sigma_{2,r}+1/(16 lambda)) - 1/sigma_{2,r}, under the same integrals, so
one sweep over the cached contour nodes assembles residual and Jacobian
together.  Unknowns are truncated to |k| <= K with the zero-potential tail
closure; iterates leaving the isolating discs are clamped back to a boundary
ring and the event is counted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .potential import pi_k
from .quadrature import ContourSpec, contour_integral
from .roots_products import CanonicalRootEvaluator, zero_tail

__all__ = [
    "SigmaSolution",
    "JacobianBlocks",
    "SigmaWorkspace",
    "assemble_F",
    "assemble_jacobian",
    "solve_sigma",
    "eval_psi",
    "verify_normalization",
    "psi_negative",
    "ContourSpec",
    "contour_integral",
]

COND_LIMIT = 1e12


@dataclass
class SigmaSolution:
    """Converged root families of psi_n and solver diagnostics."""

    n: int
    K: int
    sigma1: np.ndarray  # (2K+1,), entry at k=n pinned to tau_{1,n}
    sigma2: np.ndarray  # (2K+1,)
    residual_norm: float
    newton_iters: int
    C_n: complex
    clamp_events: int = 0

    def sigma1_at(self, k):
        return complex(self.sigma1[k + self.K])

    def sigma2_at(self, k):
        return complex(self.sigma2[k + self.K])

    def to_json(self, normalization_max_dev=None) -> str:
        c2 = lambda z: [complex(z).real, complex(z).imag]
        return json.dumps(
            {
                "n": self.n,
                "K": self.K,
                "sigma1": [c2(z) for z in self.sigma1],
                "sigma2": [c2(z) for z in self.sigma2],
                "residual": self.residual_norm,
                "iters": self.newton_iters,
                "C_n": c2(self.C_n),
                "normalization_max_dev": normalization_max_dev,
            }
        )


@dataclass
class JacobianBlocks:
    """Dense Jacobian of the truncated system, split for diagnostics."""

    Q: np.ndarray
    idx1: np.ndarray  # unknown indices k (sigma1 slots)
    idx2: np.ndarray
    n: int

    @property
    def diagonal(self):
        return np.diag(self.Q)

    def q11_diag(self):
        m = len(self.idx1)
        return np.diag(self.Q[:m, :m])

    def q22_diag(self):
        m = len(self.idx1)
        return np.diag(self.Q[m:, m:])

    def offdiag_frobenius(self) -> float:
        K = self.Q - np.diag(np.diag(self.Q))
        return float(np.linalg.norm(K))


class SigmaWorkspace:
    """Cached contours, quadrature nodes and sqrt_c(chi_p) values for one n."""

    def __init__(self, table, iso, n, K, nodes=64, contour_scale=1.0):
        if K < table.n_max:
            raise ValueError("truncation K must be >= the table range N_max")
        self.table = table
        self.iso = iso
        self.n = int(n)
        self.K = int(K)
        self.nodes = nodes
        ks = np.arange(-K, K + 1)
        self.ks = ks
        self.idx1 = np.array([k for k in ks if k != n])
        self.idx2 = ks.copy()
        self.piks = pi_k(ks)
        self.evaluator = CanonicalRootEvaluator(table, K)
        self.tau1 = np.array([table.tau2(1, int(k)) for k in ks])
        self.tau2 = np.array([table.tau2(2, int(k)) for k in ks])
        # contour node data; family 1 rows for m != n, family 2 rows for all m
        self.rows = []
        for m in self.idx1:
            spec = iso.contour(1, int(m), nodes=nodes, scale=contour_scale)
            z, dz = spec.points()
            self.rows.append((1, int(m), z, dz, (n - m)))
        for m in ks:
            spec = iso.contour(2, int(m), nodes=nodes, scale=contour_scale)
            z, dz = spec.points()
            self.rows.append((2, int(m), z, dz, 16.0 * pi_k(m) ** 2 * pi_k(n)))
        self.z_all = np.concatenate([r[2] for r in self.rows])
        self.chip_all = self.evaluator.chip(self.z_all)
        self.tail1_all = zero_tail(self.z_all, K)
        self.tail2_all = zero_tail(-1.0 / (16.0 * self.z_all), K)
        self.tail2_zero = complex(zero_tail(np.array([0.0 + 0j]), K)[0])

    # -- state vector mapping ------------------------------------------------

    def pack(self, sigma1, sigma2):
        return np.concatenate([sigma1[self.idx1 + self.K], sigma2])

    def unpack(self, u):
        m = len(self.idx1)
        sigma1 = np.empty(2 * self.K + 1, dtype=complex)
        sigma1[self.idx1 + self.K] = u[:m]
        sigma1[self.n + self.K] = self.tau1[self.n + self.K]  # pinned
        return sigma1, u[m:].copy()

    def initial_state(self):
        return self.pack(self.tau1.astype(complex), self.tau2.astype(complex))

    # -- psi evaluation --------------------------------------------------------

    def _fn_on(self, sigma1, sigma2, z, tail1, tail2):
        mask = self.ks != self.n
        a = (sigma1[mask] - z[:, None]) / self.piks[mask]
        f1 = np.prod(a, axis=1) * tail1
        mu = -1.0 / (16.0 * z)
        b = (sigma2 - mu[:, None]) / self.piks
        f2 = np.prod(b, axis=1) * tail2
        f2_inf = np.prod(sigma2 / self.piks) * self.tail2_zero
        return -(1.0 / pi_k(self.n)) * f1 * f2 / f2_inf, f2_inf

    def psi(self, sigma1, sigma2, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        t1 = zero_tail(lam, self.K)
        t2 = zero_tail(-1.0 / (16.0 * lam), self.K)
        val, _ = self._fn_on(sigma1, sigma2, lam, t1, t2)
        return val

    # -- residual and Jacobian -------------------------------------------------

    def admissible(self, sigma1, sigma2, clamp=False):
        """Check (and optionally restore) sigma_{1,k} in U_{1,k} and
        (-16 sigma_{2,k})^{-1} in U_{2,k}."""
        events = 0
        s1 = sigma1.copy()
        s2 = sigma2.copy()
        for i, k in enumerate(self.ks):
            if k != self.n:
                c, r = self.iso.U2(1, int(k))
                d = abs(s1[i] - c)
                if d > 0.9 * r:
                    if not clamp:
                        raise ValueError(f"sigma_1,{k} left its isolating disc")
                    s1[i] = c + (s1[i] - c) * (0.9 * r / d)
                    events += 1
            c, r = self.iso.U2(2, int(k))
            u = -1.0 / (16.0 * s2[i])
            d = abs(u - c)
            if d > 0.9 * r:
                if not clamp:
                    raise ValueError(f"sigma_2,{k} image left its isolating disc")
                u = c + (u - c) * (0.9 * r / d)
                s2[i] = -1.0 / (16.0 * u)
                events += 1
        return s1, s2, events

    def residual_and_jacobian(self, u, want_jacobian=True):
        sigma1, sigma2 = self.unpack(u)
        n_unk = u.size
        F = np.empty(n_unk, dtype=complex)
        Q = np.empty((n_unk, n_unk), dtype=complex) if want_jacobian else None
        pos = 0
        m1 = len(self.idx1)
        for (fam, m, z, dz, pref), sl in zip(self.rows, self._slices()):
            g, _ = self._fn_on(
                sigma1,
                sigma2,
                z,
                self.tail1_all[sl],
                self.tail2_all[sl],
            )
            g = g / self.chip_all[sl]
            gdz = g * dz
            F[pos] = pref * np.sum(gdz)
            if want_jacobian:
                mask = self.ks != self.n
                B1 = 1.0 / (sigma1[mask] - z[:, None])
                mu = -1.0 / (16.0 * z)
                B2 = 1.0 / (sigma2 - mu[:, None]) - 1.0 / sigma2
                Q[pos, :m1] = pref * (gdz @ B1)
                Q[pos, m1:] = pref * (gdz @ B2)
            pos += 1
        return F, Q

    def _slices(self):
        out = []
        start = 0
        for r in self.rows:
            out.append(slice(start, start + r[2].size))
            start += r[2].size
        return out


def assemble_F(table, iso, n, sigma1, sigma2, K, nodes=64):
    """Residual vector of the truncated system at the given root families."""
    ws = SigmaWorkspace(table, iso, n, K, nodes)
    ws.admissible(np.asarray(sigma1, complex), np.asarray(sigma2, complex))
    u = ws.pack(np.asarray(sigma1, complex), np.asarray(sigma2, complex))
    F, _ = ws.residual_and_jacobian(u, want_jacobian=False)
    return F, ws


def assemble_jacobian(table, iso, n, sigma1, sigma2, K, nodes=64):
    ws = SigmaWorkspace(table, iso, n, K, nodes)
    u = ws.pack(np.asarray(sigma1, complex), np.asarray(sigma2, complex))
    F, Q = ws.residual_and_jacobian(u)
    return JacobianBlocks(Q, ws.idx1, ws.idx2, n), F, ws


def solve_sigma(
    table,
    iso,
    n,
    K,
    tol=1e-9,
    max_iter=12,
    nodes=64,
    max_halvings=6,
) -> SigmaSolution:
    """Damped Newton solve of F^n = 0 from the tau initializer.

    At the zero potential the initializer is already the solution (zero
    Newton steps); otherwise convergence in a handful of iterations is the
    expected behavior for potentials in the solvable neighborhood.
    """
    ws = SigmaWorkspace(table, iso, n, K, nodes)
    u = ws.initial_state()
    clamps = 0
    F, _ = ws.residual_and_jacobian(u, want_jacobian=False)
    rnorm = float(np.linalg.norm(F))
    iters = 0
    while rnorm > tol:
        if iters >= max_iter:
            raise RuntimeError(
                f"Newton did not reach tol={tol:g} in {max_iter} iterations "
                f"(residual {rnorm:.3e}); outside solvable neighborhood"
            )
        F, Q = ws.residual_and_jacobian(u)
        cond = np.linalg.cond(Q)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise RuntimeError(
                f"Jacobian conditioning {cond:.3e} beyond limit; "
                "outside solvable neighborhood"
            )
        step = lu_solve(lu_factor(Q), F)
        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = u - scale * step
            s1, s2 = ws.unpack(trial)
            s1, s2, ev = ws.admissible(s1, s2, clamp=True)
            trial = ws.pack(s1, s2)
            Ft, _ = ws.residual_and_jacobian(trial, want_jacobian=False)
            tnorm = float(np.linalg.norm(Ft))
            if tnorm < rnorm or scale <= 2.0 ** (-max_halvings):
                break
            scale *= 0.5
        u = trial
        clamps += ev
        F, rnorm = Ft, tnorm
        iters += 1
    sigma1, sigma2 = ws.unpack(u)
    f2_inf = np.prod(sigma2 / ws.piks) * ws.tail2_zero
    return SigmaSolution(
        n, K, sigma1, sigma2, rnorm, iters, complex(1.0 / f2_inf), clamps
    )


def eval_psi(sol: SigmaSolution, table, iso, lam):
    """psi_n(lambda) for a converged solution."""
    ws = SigmaWorkspace(table, iso, sol.n, sol.K)
    return ws.psi(sol.sigma1, sol.sigma2, lam)


def _psi_over_chip_integrals(psi_fn, evaluator, iso, K, nodes, scale):
    """(1/2 pi) oint psi/sqrt_c(chi_p) over both contour families."""
    out = {}
    for j in (1, 2):
        for m in range(-K, K + 1):
            spec = iso.contour(j, m, nodes=nodes, scale=scale)
            z, dz = spec.points()
            vals = psi_fn(z) / evaluator.chip(z)
            out[(j, m)] = complex(np.sum(vals * dz) / (2.0 * np.pi))
    return out


def verify_normalization(
    sol: SigmaSolution, table, iso, nodes=96, contour_scale=1.5
):
    """Normalization integrals on fresh contours (scaled radii).

    Returns the matrix {(j,m): (1/2 pi) oint psi_n/sqrt_c(chi_p)} and the
    maximum deviation from delta_{nm} (family 1) resp. 0 (family 2).
    """
    ws = SigmaWorkspace(table, iso, sol.n, sol.K)
    psi_fn = lambda z: ws.psi(sol.sigma1, sol.sigma2, z)
    mat = _psi_over_chip_integrals(
        psi_fn, ws.evaluator, iso, sol.K, nodes, contour_scale
    )
    dev = 0.0
    for (j, m), val in mat.items():
        want = 1.0 if (j == 1 and m == sol.n) else 0.0
        dev = max(dev, abs(val - want))
    return mat, dev


def psi_negative(sol_reflected: SigmaSolution, table_reflected, iso_reflected, lam):
    """psi_{-n}(lambda, q, p) := psi_n(1/(16 lambda), -q, p) / (16 lambda^2).

    sol_reflected must be the solution for index n at the reflected
    potential (-q, p).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ws = SigmaWorkspace(table_reflected, iso_reflected, sol_reflected.n, sol_reflected.K)
    return ws.psi(
        sol_reflected.sigma1, sol_reflected.sigma2, 1.0 / (16.0 * lam)
    ) / (16.0 * lam**2)


def verify_negative_normalization(
    sol_reflected, table_reflected, iso_reflected, table, iso, nodes=96, contour_scale=1.5
):
    """Normalization of psi_{-n} over the contours of the base potential:
    zero over Gamma_{1,m}, delta_{-n,m} over Gamma_{2,m}."""
    n = sol_reflected.n
    K = sol_reflected.K
    ev = CanonicalRootEvaluator(table, K)
    psi_fn = lambda z: psi_negative(sol_reflected, table_reflected, iso_reflected, z)
    mat = _psi_over_chip_integrals(psi_fn, ev, iso, K, nodes, contour_scale)
    dev = 0.0
    for (j, m), val in mat.items():
        want = 1.0 if (j == 2 and m == -n) else 0.0
        dev = max(dev, abs(val - want))
    return mat, dev
