"""Middleton Class-A impulsive noise.

The infinite Poisson mixture is truncated to ``M`` states and the state
probabilities are renormalized, so that sampling and every analytical sum
share one probability model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .specfun import QuadratureSpec, quad_semi_infinite

__all__ = [
    "McaParams",
    "NoiseEnvironment",
    "SpatialModel",
    "FrameNoiseStates",
    "ENVIRONMENTS",
    "AWGN_DELTA",
    "state_probabilities",
    "raw_state_probabilities",
    "variance_factor",
    "variance_factors",
    "sample_frame_states",
    "sample_states",
    "sample_noise",
    "pdf",
    "mean_variance_factor",
    "mixture_variance",
    "required_samples",
    "sample_mean_power",
    "pdf_total_mass",
]

#: Gaussian factor used to emulate the AWGN limit (beta_m -> 1).
AWGN_DELTA = 1e9


@dataclass(frozen=True)
class McaParams:
    """Class-A parameters: impulsive index ``A``, Gaussian factor ``delta``,
    truncation ``M`` and mean noise power ``N0`` (watts)."""

    impulsive_index_A: float
    gaussian_factor_delta: float
    truncation_M: int = 5
    mean_noise_power_N0: float = 1.0

    def __post_init__(self):
        if not self.impulsive_index_A > 0:
            raise ValueError("impulsive index A must be positive")
        if not self.gaussian_factor_delta > 0:
            raise ValueError("Gaussian factor delta must be positive")
        if int(self.truncation_M) != self.truncation_M or self.truncation_M < 1:
            raise ValueError("truncation M must be an integer >= 1")
        if not self.mean_noise_power_N0 > 0:
            raise ValueError("mean noise power N0 must be positive")

    @property
    def A(self):
        return self.impulsive_index_A

    @property
    def delta(self):
        return self.gaussian_factor_delta

    @property
    def M(self):
        return int(self.truncation_M)

    @property
    def N0(self):
        return self.mean_noise_power_N0

    def with_noise_power(self, N0):
        return McaParams(self.A, self.delta, self.M, N0)

    @cached_property
    def alpha(self) -> np.ndarray:
        return state_probabilities(self)

    @cached_property
    def beta(self) -> np.ndarray:
        return variance_factors(self)


class NoiseEnvironment(str, Enum):
    """Named noise presets (highly/moderately impulsive, near-Gaussian, AWGN)."""

    HI = "HI"
    MI = "MI"
    NG = "NG"
    AWGN_LIMIT = "AWGN"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        if key in ("AWGN", "AWGN_LIMIT"):
            return cls.AWGN_LIMIT
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown noise environment {value!r}; expected HI, MI, NG or AWGN") from None

    def params(self, M=5, N0=1.0) -> McaParams:
        A, delta = ENVIRONMENTS[self]
        return McaParams(A, delta, M, N0)


ENVIRONMENTS = {
    NoiseEnvironment.HI: (0.001, 0.1),
    NoiseEnvironment.MI: (0.1, 0.1),
    NoiseEnvironment.NG: (1.0, 0.1),
    NoiseEnvironment.AWGN_LIMIT: (1.0, AWGN_DELTA),
}


class SpatialModel(str, Enum):
    """Model I shares one impulse state across R1, R2 and D; Model II draws
    three independent states."""

    MODEL_I = "model1"
    MODEL_II = "model2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace(" ", "")
        aliases = {"model1": cls.MODEL_I, "modeli": cls.MODEL_I, "i": cls.MODEL_I, "1": cls.MODEL_I,
                   "dependent": cls.MODEL_I, "model2": cls.MODEL_II, "modelii": cls.MODEL_II,
                   "ii": cls.MODEL_II, "2": cls.MODEL_II, "independent": cls.MODEL_II}
        if key not in aliases:
            raise ValueError(f"unknown spatial model {value!r}; expected model1 or model2")
        return aliases[key]


@dataclass(frozen=True)
class FrameNoiseStates:
    """Impulse states at D, R1 and R2, held for the four slots of a frame."""

    m_d: int
    m_r1: int
    m_r2: int


def raw_state_probabilities(params: McaParams) -> np.ndarray:
    """Untruncated-pmf values ``exp(-A) A^m / m!`` for ``m < M``."""
    m = np.arange(params.M)
    log_p = -params.A + m * math.log(params.A) - np.array([math.lgamma(k + 1) for k in m])
    return np.exp(log_p)


def state_probabilities(params: McaParams) -> np.ndarray:
    """Renormalized state probabilities ``alpha_m``, ``m = 0..M-1``."""
    raw = raw_state_probabilities(params)
    return raw / math.fsum(raw)


def variance_factors(params: McaParams) -> np.ndarray:
    m = np.arange(params.M)
    return (m / params.A + params.delta) / (1.0 + params.delta)


def variance_factor(params: McaParams, m: int) -> float:
    """``beta_m = (m / A + delta) / (1 + delta)``."""
    if int(m) != m or not 0 <= m < params.M:
        raise ValueError(f"state index {m!r} outside [0, {params.M - 1}]")
    return (m / params.A + params.delta) / (1.0 + params.delta)


def sample_states(params: McaParams, spatial: SpatialModel, rng: np.random.Generator, size: int):
    """Vectorized frame-state draws; returns ``(m_d, m_r1, m_r2)`` arrays."""
    alpha = params.alpha
    if SpatialModel.parse(spatial) is SpatialModel.MODEL_I:
        m = rng.choice(params.M, size=size, p=alpha)
        return m, m, m
    m = rng.choice(params.M, size=(3, size), p=alpha)
    return m[0], m[1], m[2]


def sample_frame_states(params: McaParams, spatial: SpatialModel, rng: np.random.Generator) -> FrameNoiseStates:
    m_d, m_r1, m_r2 = sample_states(params, spatial, rng, 1)
    return FrameNoiseStates(int(m_d[0]), int(m_r1[0]), int(m_r2[0]))


def sample_noise(m, power, params: McaParams, rng: np.random.Generator, size=None):
    """Circularly-symmetric complex Gaussian noise with variance ``beta_m * power``.

    ``m`` may be an integer array (one state per sample); ``size`` defaults
    to the shape of ``m``.
    """
    m = np.asarray(m)
    if size is None:
        size = m.shape
    var = params.beta[m] * power
    scale = np.sqrt(0.5 * var)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def pdf(params: McaParams, n) -> np.ndarray:
    """Truncated Class-A density of a complex noise sample (mean power ``N0``)."""
    r2 = np.abs(np.asarray(n)) ** 2
    sig2 = params.beta * params.N0
    terms = params.alpha / (np.pi * sig2) * np.exp(-np.multiply.outer(r2, 1.0 / sig2))
    return terms.sum(axis=-1)


def mean_variance_factor(beta_d, beta_r1, beta_r2):
    """Frame-averaged variance factor for independent per-node states.

    ``(2 (beta_r1 + beta_r2) + 4 beta_d) / 8``; works elementwise on arrays.
    """
    return (2.0 * (np.asarray(beta_r1) + beta_r2) + 4.0 * np.asarray(beta_d)) / 8.0


def mixture_variance(params: McaParams) -> float:
    """Mean power ``sum_m alpha_m beta_m N0`` of the truncated mixture."""
    return math.fsum(params.alpha * params.beta) * params.N0


def required_samples(params: McaParams, rel_tol=0.01, z=3.0) -> int:
    """Sample count for which the mean of ``|n|^2`` is within ``rel_tol``
    of its expectation at ``z`` standard errors.

    Uses ``E|n|^4 = 2 sum_m alpha_m beta_m^2 N0^2`` for the complex
    Gaussian mixture.
    """
    mean = math.fsum(params.alpha * params.beta)
    fourth = 2.0 * math.fsum(params.alpha * params.beta ** 2)
    cv2 = (fourth - mean * mean) / (mean * mean)
    return int(math.ceil(cv2 * (z / rel_tol) ** 2))


def sample_mean_power(params: McaParams, samples: int, seed: int = 0, chunk: int = 1 << 20) -> float:
    """Average ``|n|^2`` over ``samples`` i.i.d. mixture draws.

    Chunk ``k`` uses ``SeedSequence([seed, k])`` so the result is
    reproducible and memory stays bounded.
    """
    total = []
    done = 0
    k = 0
    while done < samples:
        n = min(chunk, samples - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        m = rng.choice(params.M, size=n, p=params.alpha)
        x = sample_noise(m, params.N0, params, rng)
        total.append(math.fsum(np.abs(x) ** 2))
        done += n
        k += 1
    return math.fsum(total) / samples


def pdf_total_mass(params: McaParams) -> float:
    """Integral of :func:`pdf` over the complex plane.

    With ``u = |n|^2`` the area element is ``pi du``.
    """
    spec = QuadratureSpec(relative_tolerance=1e-12, absolute_tolerance=1e-300)
    points = params.beta * params.N0
    return math.pi * quad_semi_infinite(lambda u: pdf(params, np.sqrt(u)), spec, points=points)
