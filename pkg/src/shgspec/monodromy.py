"""Fundamental solution M(x,lambda,v) of the reduced Lax system and its
Floquet data.

The 2x2 system is

    dM/dx = J (lambda - A(x) - B(x)^2/lambda) M,   M(0) = I,

integrated together with its first (and optionally second) derivative in
lambda via the variational equations

    dM'/dx  = L M'  + L' M,
    dM''/dx = L M'' + 2 L' M' + L'' M,

where L = J(lambda - A - B^2/lambda), L' = J(1 + B^2/lambda^2) and
L'' = -2 J B^2/lambda^3.  The lambda-derivative of the discriminant obtained
this way is exact up to integrator tolerance; the sign and branch logic of the
root modules depends on it.

At the zero potential, M(x,lambda,0) = E_{omega(lambda)}(x) with
omega(lambda) = lambda - 1/(16 lambda); those closed forms serve as the oracle
for the integrator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .potential import Potential

__all__ = [
    "omega",
    "E_nu",
    "MonodromyResult",
    "closed_form_zero",
    "integrate",
    "integrate_many",
    "chi_p",
    "chi_D",
    "lam_zero",
    "tau_zero",
]

LAM_MIN = 1e-8
LAM_MAX = 1e8
DEFAULT_TOL = 1e-11


def omega(lam):
    """omega(lambda) = lambda - 1/(16 lambda); frequency of the free rotation."""
    lam = np.asarray(lam, dtype=complex)
    return lam - 1.0 / (16.0 * lam)


def E_nu(nu, x):
    """Rotation matrix E_nu(x) = [[cos nu x, sin nu x], [-sin nu x, cos nu x]]."""
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=complex)
    c = np.cos(nu * x)
    s = np.sin(nu * x)
    out = np.empty(np.broadcast(c, s).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def lam_zero(n):
    """Zero-potential periodic eigenvalue in C+ (double root of chi_p):
    the C+ solution of omega(lambda) = n*pi, i.e. (n pi + sqrt(n^2 pi^2 + 1/4))/2.
    """
    n = np.asarray(n, dtype=float)
    return (n * np.pi + np.sqrt((n * np.pi) ** 2 + 0.25)) / 2.0


def tau_zero(k):
    """Zero-potential two-index gap midpoints: tau_{j,k}(0) for j=1,2 (equal).

    For k >= 0 this is lam_zero(k); for k < 0 it is -lam_zero(-k), consistent
    with tau_{j,-k} = -tau_{j,k}.
    """
    k = np.asarray(k)
    return np.where(k >= 0, lam_zero(np.abs(k)), -lam_zero(np.abs(k)))


def _check_lambda(lams):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    a = np.abs(lams)
    if np.any(a < LAM_MIN) or np.any(a > LAM_MAX):
        raise ValueError(
            f"|lambda| outside working annulus [{LAM_MIN:g}, {LAM_MAX:g}]; "
            "use the reciprocity map lambda -> -1/(16 lambda) instead"
        )
    return lams


@dataclass
class MonodromyResult:
    """Floquet matrix and derived scalars at one spectral parameter."""

    lam: complex
    Mgrave: np.ndarray  # 2x2, M(1, lam)
    Mgrave_dot: np.ndarray | None  # 2x2, d/dlam M(1, lam)
    Mgrave_ddot: np.ndarray | None = None
    trace_path: np.ndarray | None = None  # (n_nodes, 2, 2) M(x_i) samples
    trace_x: np.ndarray | None = None

    @property
    def Delta(self) -> complex:
        return 0.5 * (self.Mgrave[0, 0] + self.Mgrave[1, 1])

    @property
    def delta_anti(self) -> complex:
        return 0.5 * (self.Mgrave[0, 0] - self.Mgrave[1, 1])

    @property
    def Delta_dot(self) -> complex:
        if self.Mgrave_dot is None:
            raise ValueError("lambda-derivative was not integrated")
        return 0.5 * (self.Mgrave_dot[0, 0] + self.Mgrave_dot[1, 1])

    @property
    def Delta_ddot(self) -> complex:
        if self.Mgrave_ddot is None:
            raise ValueError("second lambda-derivative was not integrated")
        return 0.5 * (self.Mgrave_ddot[0, 0] + self.Mgrave_ddot[1, 1])

    @property
    def chi_p(self) -> complex:
        return self.Delta**2 - 1.0

    @property
    def chi_D(self) -> complex:
        return self.Mgrave[0, 1]

    @property
    def xi_plus(self) -> complex:
        return self.Delta + np.sqrt(self.Delta**2 - 1.0 + 0j)

    @property
    def xi_minus(self) -> complex:
        return self.Delta - np.sqrt(self.Delta**2 - 1.0 + 0j)

    def det_Mgrave(self) -> complex:
        return np.linalg.det(self.Mgrave)


def closed_form_zero(lam, order=2) -> MonodromyResult:
    """Exact monodromy data at the zero potential.

    Delta = cos(omega), chi_D = sin(omega),
    Delta_dot = -(1 + 1/(16 lambda^2)) sin(omega).
    """
    lam = complex(_check_lambda(lam)[0])
    om = complex(omega(lam))
    omp = 1.0 + 1.0 / (16.0 * lam**2)  # d omega / d lambda
    ompp = -1.0 / (8.0 * lam**3)
    M = E_nu(om, 1.0)
    dE = np.array(
        [[-np.sin(om), np.cos(om)], [-np.cos(om), -np.sin(om)]], dtype=complex
    )
    Md = omp * dE
    if order >= 2:
        d2E = -E_nu(om, 1.0)
        Mdd = ompp * dE + omp**2 * d2E
    else:
        Mdd = None
    return MonodromyResult(lam, M, Md, Mdd)


class BatchResult:
    """Monodromy data for a batch of spectral parameters (arrays over lambda)."""

    def __init__(self, lams, Mg, Mgd, Mgdd=None, path=None, path_x=None):
        self.lams = lams
        self.Mgrave = Mg
        self.Mgrave_dot = Mgd
        self.Mgrave_ddot = Mgdd
        self.path = path  # (L, n_nodes, 2, 2) or None
        self.path_x = path_x

    @property
    def Delta(self):
        return 0.5 * (self.Mgrave[:, 0, 0] + self.Mgrave[:, 1, 1])

    @property
    def delta_anti(self):
        return 0.5 * (self.Mgrave[:, 0, 0] - self.Mgrave[:, 1, 1])

    @property
    def Delta_dot(self):
        return 0.5 * (self.Mgrave_dot[:, 0, 0] + self.Mgrave_dot[:, 1, 1])

    @property
    def Delta_ddot(self):
        return 0.5 * (self.Mgrave_ddot[:, 0, 0] + self.Mgrave_ddot[:, 1, 1])

    @property
    def chi_p(self):
        return self.Delta**2 - 1.0

    @property
    def chi_p_dot(self):
        return 2.0 * self.Delta * self.Delta_dot

    @property
    def chi_D(self):
        return self.Mgrave[:, 0, 1]

    @property
    def chi_D_dot(self):
        return self.Mgrave_dot[:, 0, 1]

    def single(self, i) -> MonodromyResult:
        return MonodromyResult(
            complex(self.lams[i]),
            self.Mgrave[i],
            None if self.Mgrave_dot is None else self.Mgrave_dot[i],
            None if self.Mgrave_ddot is None else self.Mgrave_ddot[i],
            None if self.path is None else self.path[i],
            self.path_x,
        )


def integrate_many(
    v: Potential,
    lams,
    order: int = 1,
    tol: float = DEFAULT_TOL,
    path_nodes=None,
) -> BatchResult:
    """Integrate the monodromy system for a batch of lambda simultaneously.

    order=1 adds the variational system for d/dlam M, order=2 also the second
    derivative.  path_nodes, if given, is an array of x in [0,1] at which
    M(x) is recorded via dense output (used by the gradient kernels).
    """
    if not (1e-13 <= tol <= 1e-6):
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    lams = _check_lambda(lams)
    L = lams.size
    nblk = order + 1
    inv = 1.0 / lams
    inv2 = inv * inv
    inv3 = inv2 * inv

    def rhs(x, y):
        Y = y.reshape(L, nblk, 2, 2)
        w = v.w_at(x)
        emq, eq = v.exp_q_at(x)
        Lm = np.empty((L, 2, 2), dtype=complex)
        Lm[:, 0, 0] = 0.25 * w
        Lm[:, 1, 1] = -0.25 * w
        Lm[:, 0, 1] = lams - eq * inv / 16.0
        Lm[:, 1, 0] = -lams + emq * inv / 16.0
        out = np.empty_like(Y)
        out[:, 0] = Lm @ Y[:, 0]
        if order >= 1:
            Ld = np.zeros((L, 2, 2), dtype=complex)
            Ld[:, 0, 1] = 1.0 + eq * inv2 / 16.0
            Ld[:, 1, 0] = -1.0 - emq * inv2 / 16.0
            out[:, 1] = Lm @ Y[:, 1] + Ld @ Y[:, 0]
        if order >= 2:
            Ldd = np.zeros((L, 2, 2), dtype=complex)
            Ldd[:, 0, 1] = -eq * inv3 / 8.0
            Ldd[:, 1, 0] = emq * inv3 / 8.0
            out[:, 2] = Lm @ Y[:, 2] + 2.0 * (Ld @ Y[:, 1]) + Ldd @ Y[:, 0]
        return out.ravel()

    y0 = np.zeros((L, nblk, 2, 2), dtype=complex)
    y0[:, 0] = np.eye(2)
    want_path = path_nodes is not None
    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        y0.ravel(),
        method="DOP853",
        rtol=tol,
        atol=tol,
        dense_output=want_path,
    )
    if not sol.success:
        raise RuntimeError(
            f"monodromy integration failed: {sol.message}; "
            f"last accepted x = {sol.t[-1]:.6g}"
        )
    Y1 = sol.y[:, -1].reshape(L, nblk, 2, 2)
    path = None
    path_x = None
    if want_path:
        path_x = np.asarray(path_nodes, dtype=float)
        ys = sol.sol(path_x)  # (ncomp, P)
        path = ys.reshape(L, nblk, 2, 2, path_x.size)[:, 0]
        path = np.moveaxis(path, -1, 1)  # (L, P, 2, 2)
    return BatchResult(
        lams,
        Y1[:, 0],
        Y1[:, 1] if order >= 1 else None,
        Y1[:, 2] if order >= 2 else None,
        path,
        path_x,
    )


def integrate(
    v: Potential,
    lam,
    order: int = 1,
    tol: float = DEFAULT_TOL,
    path_nodes=None,
) -> MonodromyResult:
    """Monodromy data at a single lambda; see integrate_many."""
    return integrate_many(v, [lam], order=order, tol=tol, path_nodes=path_nodes).single(
        0
    )


def chi_p(v: Potential, lam, tol: float = DEFAULT_TOL) -> complex:
    """Characteristic function of the periodic spectrum, Delta^2 - 1."""
    return complex(integrate(v, lam, order=0, tol=tol).chi_p)


def chi_D(v: Potential, lam, tol: float = DEFAULT_TOL) -> complex:
    """Characteristic function of the Dirichlet spectrum, entry m2 of M(1)."""
    return complex(integrate(v, lam, order=0, tol=tol).chi_D)
