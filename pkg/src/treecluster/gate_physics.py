"""Gate errors from finite photon bandwidth and the cooperativity threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special


@dataclass
class WavepacketParams:
    gamma_B: float
    gamma_R: float
    t_ph: float = 1.0

    def __post_init__(self):
        if self.gamma_B <= 0 or self.gamma_R <= 0:
            raise ValueError("bandwidths must be positive")

    @classmethod
    def from_ratios(cls, ratio: float = 0.0014, gbtph: float = 6.2, gamma_R: float = 1.0):
        gb = ratio * gamma_R
        return cls(gb, gamma_R, gbtph / gb)


def gaussian_profile(gamma_B: float) -> Callable[[np.ndarray], np.ndarray]:
    """Real, even temporal amplitude with |f(t)|^2 = gamma_B/sqrt(pi) exp(-gamma_B^2 t^2)."""
    if gamma_B <= 0:
        raise ValueError("gamma_B must be positive")
    amp = math.sqrt(gamma_B / math.sqrt(math.pi))

    def f(t):
        return amp * np.exp(-0.5 * (gamma_B * np.asarray(t)) ** 2)

    return f


def spectral_density(omega, gamma_B: float):
    """|f~(omega)|^2 for the Gaussian profile, normalised over omega."""
    return np.exp(-(np.asarray(omega) / gamma_B) ** 2) / (gamma_B * math.sqrt(math.pi))


def transmission(omega, gamma_R: float):
    """Reflection phase factor of the coupled emitter: (w - i g/2) / (w + i g/2)."""
    if gamma_R <= 0:
        raise ValueError("gamma_R must be positive")
    w = np.asarray(omega, dtype=float)
    return (w - 0.5j * gamma_R) / (w + 0.5j * gamma_R)


def _one_plus_t(x):
    # 1 + t written without cancellation, x = omega / gamma_R
    return 2 * x / (x + 0.5j)


def _overlap_delta(ratio: float, span: float = 8.0, epsrel: float = 1e-12) -> complex:
    """(1 + c)/4 where c is the spectral average of the transmission phase."""
    def integrand(u, part):
        # u = omega / gamma_B
        x = ratio * u
        val = math.exp(-u * u) / math.sqrt(math.pi) * _one_plus_t(x)
        return val.real if part == 0 else val.imag

    out = []
    for part in (0, 1):
        # split at zero so the narrow resonant feature lands on an endpoint
        v = 0.0
        for lo, hi in ((-span, 0.0), (0.0, span)):
            r, _err = integrate.quad(integrand, lo, hi, args=(part,), epsabs=0, epsrel=epsrel, limit=400)
            v += r
        out.append(v)
    return complex(out[0], out[1]) / 4


def cz_overlap(ratio: float, span: float = 8.0) -> complex:
    """c = int f*(t) g_11(t) dt evaluated in the frequency domain."""
    return 4 * _overlap_delta(ratio, span) - 1


def eps_cz_numeric(ratio: float, span: float = 8.0) -> float:
    """CZ infidelity 1 - |(3 - c)/4|^2 for a Gaussian photon of relative bandwidth ``ratio``."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    d = _overlap_delta(ratio, span)
    # (3 - c)/4 = 1 - d, so 1 - |1 - d|^2 = 2 Re d - |d|^2
    return 2 * d.real - abs(d) ** 2


def eps_cz_closed(ratio: float) -> float:
    return 2 * ratio ** 2


def cz_overlap_time_domain(ratio: float, n: int = 2 ** 16, span: float = 40.0) -> complex:
    """Independent route: FFT the pulse, apply the phase, transform back, overlap in time."""
    gamma_B = 1.0
    gamma_R = gamma_B / ratio
    t = np.linspace(-span, span, n, endpoint=False)
    dt = t[1] - t[0]
    f = gaussian_profile(gamma_B)(t)
    omega = 2 * np.pi * np.fft.fftfreq(n, d=dt)
    g11 = np.fft.ifft(np.fft.fft(f) * transmission(omega, gamma_R))
    return complex(np.sum(f.conj() * g11) * dt)


def eps_overlap(gbtph: float) -> float:
    """Tail weight of one time-bin wavepacket leaking into its neighbour."""
    if gbtph <= 0:
        raise ValueError("gamma_B * t_ph must be positive")
    return 0.5 * special.erfc(gbtph / 2)


def eps_overlap_quad(gbtph: float) -> float:
    """Same quantity by direct integration of |f(t)|^2 beyond t_ph/2 (gamma_B = 1)."""
    f = gaussian_profile(1.0)
    val, _ = integrate.quad(lambda t: f(t) ** 2, gbtph / 2, np.inf, epsabs=1e-15, epsrel=1e-12)
    return val


# ---------------------------------------------------------------------------
# cooperativity

@dataclass
class CooperativityModel:
    """Internal loss as a function of cooperativity.

    ``form="inverse"`` is loss = a / C.  A custom callable may be given via
    ``loss_fn``; it must be strictly decreasing and vanish at large C.
    """

    form: str = "inverse"
    a: float = 5.0
    loss_fn: Callable[[float], float] | None = field(default=None, repr=False)

    def loss(self, c: float) -> float:
        if self.loss_fn is not None:
            return float(self.loss_fn(c))
        if self.form == "inverse":
            return self.a / c
        raise ValueError(f"unknown cooperativity model {self.form!r}")

    @property
    def label(self) -> str:
        if self.loss_fn is not None:
            return f"custom:{self.form}"
        return f"{self.form}(a={self.a:g})"


def cooperativity_threshold(p_int: float, model: CooperativityModel | None = None,
                            c_max: float = 1e15) -> float:
    """Smallest C with loss(C) <= p_int."""
    model = model or CooperativityModel()
    if not 0 < p_int < 1:
        raise ValueError("p_int must lie in (0, 1)")
    if model.loss_fn is None and model.form == "inverse":
        return model.a / p_int
    lo, hi = 1e-12, 1.0
    while model.loss(hi) > p_int:
        hi *= 2
        if hi > c_max:
            raise ValueError("model never reaches the requested loss")
    return optimize.brentq(lambda c: model.loss(c) - p_int, lo, hi, xtol=1e-12, rtol=1e-14)
