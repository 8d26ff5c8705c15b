"""Periodic potentials v=(q,p) on the unit torus and the Lax coefficient fields.

A potential is stored as a pair of truncated Fourier series

    q(x) = sum_{|k|<=Kf} q_k e^{2 pi i k x},    p(x) likewise.

All downstream field evaluations (q, dq/dx, the smoothing operator P applied
to p, exp(+-q)) are spectral: derivatives and the Fourier multiplier
P = sqrt(1 - d_x^2) act diagonally on coefficients, and exp(+-q) is expanded
on the sample grid by FFT once per potential and then evaluated anywhere by
trigonometric interpolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Potential",
    "LaxCoefficients",
    "eval_fields",
    "I2",
    "J2",
    "Z2",
    "R2",
    "pi_k",
]

# constant 2x2 matrices of the Lax operator
I2 = np.eye(2, dtype=complex)
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
Z2 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
R2 = np.array([[1j, 0.0], [0.0, -1j]], dtype=complex)

REAL_SYM_TOL = 1e-14


def pi_k(k):
    """Normalizing denominators of the infinite products: k*pi, except 1 at k=0."""
    k = np.asarray(k, dtype=float)
    return np.where(k == 0, 1.0, k * np.pi)


def p_multiplier(k):
    """Fourier symbol of P = sqrt(1 - d_x^2) at frequency k (period 1)."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(1.0 + 4.0 * np.pi**2 * k**2)


def _as_coeff_array(coeffs, Kf):
    out = np.zeros(2 * Kf + 1, dtype=complex)
    if isinstance(coeffs, dict):
        for k, c in coeffs.items():
            if abs(int(k)) > Kf:
                raise ValueError(f"mode {k} outside band limit Kf={Kf}")
            out[int(k) + Kf] = c
    else:
        arr = np.asarray(coeffs, dtype=complex)
        if arr.shape != (2 * Kf + 1,):
            raise ValueError(f"expected {2*Kf+1} coefficients, got {arr.shape}")
        out[:] = arr
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite Fourier coefficient")
    return out


@dataclass(frozen=True)
class Potential:
    """Band-limited periodic potential v=(q,p), coefficients indexed k=-Kf..Kf."""

    q_coeffs: np.ndarray
    p_coeffs: np.ndarray
    Kf: int
    grid_size: int = 64
    real: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def from_modes(q=None, p=None, Kf=None, grid_size=64, real=True) -> "Potential":
        """Build from {frequency: coefficient} maps (missing modes are zero)."""
        q = dict(q or {})
        p = dict(p or {})
        if Kf is None:
            Kf = max([abs(int(k)) for k in list(q) + list(p)] + [1])
        if real:
            # fill conjugate partners so real maps may list only k >= 0
            for coeffs in (q, p):
                for k in list(coeffs):
                    if -int(k) not in coeffs:
                        coeffs[-int(k)] = np.conj(coeffs[k])
        v = Potential(
            _as_coeff_array(q, Kf), _as_coeff_array(p, Kf), Kf, grid_size, real
        )
        v.validate()
        return v

    @staticmethod
    def zero(grid_size=64) -> "Potential":
        return Potential.from_modes({}, {}, Kf=1, grid_size=grid_size)

    @staticmethod
    def cosine(amplitude_q=0.1, mode=1, amplitude_p=0.0, grid_size=64) -> "Potential":
        """Real potential q = a*cos(2 pi m x), p = b*cos(2 pi m x)."""
        return Potential.from_modes(
            {mode: amplitude_q / 2.0, -mode: amplitude_q / 2.0},
            {mode: amplitude_p / 2.0, -mode: amplitude_p / 2.0},
            Kf=max(mode, 1),
            grid_size=grid_size,
        )

    def validate(self):
        if self.grid_size < 4 * self.Kf:
            raise ValueError("grid_size must be >= 4*Kf to avoid aliasing")
        if not (
            np.all(np.isfinite(self.q_coeffs)) and np.all(np.isfinite(self.p_coeffs))
        ):
            raise ValueError("non-finite Fourier coefficient")
        if self.real:
            for c in (self.q_coeffs, self.p_coeffs):
                if np.max(np.abs(c[::-1] - np.conj(c))) > REAL_SYM_TOL:
                    raise ValueError(
                        "potential flagged real but coefficients are not "
                        "conjugate-symmetric"
                    )

    # -- involutions -------------------------------------------------------

    def reflected(self) -> "Potential":
        """The reciprocity image (q,p) -> (-q,p); exact on coefficients."""
        return Potential(
            -self.q_coeffs.copy(),
            self.p_coeffs.copy(),
            self.Kf,
            self.grid_size,
            self.real,
        )

    # -- pointwise evaluation ----------------------------------------------

    @property
    def modes(self):
        return np.arange(-self.Kf, self.Kf + 1)

    def q_at(self, x):
        return _trig_eval(self.q_coeffs, self.modes, x)

    def p_at(self, x):
        return _trig_eval(self.p_coeffs, self.modes, x)

    def dq_at(self, x):
        return _trig_eval(self.q_coeffs * (2j * np.pi * self.modes), self.modes, x)

    def Pp_at(self, x):
        return _trig_eval(self.p_coeffs * p_multiplier(self.modes), self.modes, x)

    def w_at(self, x):
        """The off-diagonal Lax field w = P p + q_x."""
        return self.Pp_at(x) + self.dq_at(x)

    def q0(self):
        """q(0), the boundary value entering the EV_0 gradient terms."""
        return complex(np.sum(self.q_coeffs))

    def exp_q_coeffs(self):
        """Fourier coefficients of (exp(-q), exp(q)) on the sample grid, cached."""
        if "expq" not in self._cache:
            x = np.arange(self.grid_size) / self.grid_size
            qx = self.q_at(x)
            cm = np.fft.fft(np.exp(-qx)) / self.grid_size
            cp = np.fft.fft(np.exp(qx)) / self.grid_size
            ks = np.fft.fftfreq(self.grid_size, d=1.0 / self.grid_size)
            # drop numerically negligible modes; shortens interpolation sums
            keep = (np.abs(cm) + np.abs(cp)) > 1e-17 * max(
                1.0, np.abs(cp).max(), np.abs(cm).max()
            )
            self._cache["expq"] = (ks[keep], cm[keep], cp[keep])
        return self._cache["expq"]

    def exp_q_at(self, x):
        """(exp(-q)(x), exp(q)(x)) by spectral interpolation of the cached series."""
        ks, cm, cp = self.exp_q_coeffs()
        ph = np.exp(2j * np.pi * np.multiply.outer(np.asarray(x, dtype=float), ks))
        return ph @ cm, ph @ cp

    def h1_norm(self) -> float:
        m = p_multiplier(self.modes) ** 2
        return float(
            np.sqrt(
                np.sum(m * np.abs(self.q_coeffs) ** 2)
                + np.sum(m * np.abs(self.p_coeffs) ** 2)
            )
        )

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "real": bool(self.real),
                "Kf": int(self.Kf),
                "q": [[float(c.real), float(c.imag)] for c in self.q_coeffs],
                "p": [[float(c.real), float(c.imag)] for c in self.p_coeffs],
                "grid": int(self.grid_size),
            }
        )

    @staticmethod
    def from_json(text: str) -> "Potential":
        d = json.loads(text)
        Kf = int(d["Kf"])
        q = np.array([complex(re, im) for re, im in d["q"]])
        p = np.array([complex(re, im) for re, im in d["p"]])
        v = Potential(
            _as_coeff_array(q, Kf),
            _as_coeff_array(p, Kf),
            Kf,
            int(d.get("grid", 64)),
            bool(d.get("real", True)),
        )
        v.validate()
        return v


def _trig_eval(coeffs, modes, x):
    x = np.asarray(x, dtype=float)
    ph = np.exp(2j * np.pi * np.multiply.outer(x, modes.astype(float)))
    return ph @ coeffs


def eval_fields(v: Potential):
    """Sample q, dq/dx, P p, exp(q), exp(-q) on the uniform grid of v.

    P acts diagonally in Fourier space with symbol sqrt(1 + 4 pi^2 k^2).
    """
    v.validate()
    x = np.arange(v.grid_size) / v.grid_size
    q = v.q_at(x)
    return {
        "x": x,
        "q": q,
        "dq": v.dq_at(x),
        "Pp": v.Pp_at(x),
        "exp_q": np.exp(q),
        "exp_mq": np.exp(-q),
    }


class LaxCoefficients:
    """Matrix coefficients A(x) = -(Pp+q_x)/4 * Z and B(x) = diag(e^{-q/2}, e^{q/2})/4."""

    def __init__(self, v: Potential):
        self.v = v

    def A_at(self, x):
        w = self.v.w_at(x)
        return -0.25 * np.multiply.outer(w, Z2)

    def B_at(self, x):
        q = self.v.q_at(x)
        B = np.zeros(np.shape(q) + (2, 2), dtype=complex)
        B[..., 0, 0] = 0.25 * np.exp(-q / 2.0)
        B[..., 1, 1] = 0.25 * np.exp(q / 2.0)
        return B

    @staticmethod
    def pi_n(n):
        return pi_k(n)
