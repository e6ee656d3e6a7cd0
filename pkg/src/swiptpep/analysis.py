"""Pairwise error probability bounds for the four relaying schemes.

Each unconditional bound has the form

    sum_m alpha_m * (Delta P_s / (4 beta_m N0) + 1)^-1 * prod_n K_n(beta_m)

where ``K_n`` is a one-dimensional fading average over the relay link.  The
``K_n`` are evaluated by semi-infinite quadrature of their defining
integrals; the special-function closed forms are kept as an independent
cross-check (``closed_form=True``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy import special

from .mca_noise import McaParams, SpatialModel, mean_variance_factor
from .phy import (
    CodewordPair,
    SchemeVariant,
    SystemConfig,
    WORST_CASE_PAIR,
    distance_sq,
    effective_gains,
)
from .channel import FadingRealization
from .specfun import QuadratureSpec, quad_semi_infinite, scaled_gamma_upper_zero

__all__ = [
    "PepMethod",
    "PepEstimate",
    "KERNEL_QUADRATURE",
    "DiversityError",
    "conditional_pep_exact",
    "conditional_pep_chernoff",
    "conditional_pep_given_variance",
    "kernel_blind_ieh",
    "kernel_blind_aeh",
    "kernel_csi_ieh",
    "kernel_csi_aeh",
    "pep_state_term",
    "pep_blind_ieh",
    "pep_blind_aeh",
    "pep_csi_ieh",
    "pep_csi_aeh",
    "pep_model2",
    "pep_bound",
    "evaluate",
    "fading_average",
    "diversity_order",
]

MAX_MODEL2_STATES = 8

# Kernel values reach 1e-12 at 80 dB, so the absolute floor must not bind.
KERNEL_QUADRATURE = QuadratureSpec(relative_tolerance=1e-11, absolute_tolerance=1e-300, max_subdivisions=4000)


class PepMethod(str, Enum):
    EXACT_CONDITIONAL_AVG = "exact-conditional-avg"
    CHERNOFF_CLOSED_FORM = "chernoff-closed-form"
    CHERNOFF_QUADRATURE = "chernoff-quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class PepEstimate:
    """A PEP value with provenance. Bounds are reported unclamped."""

    value: float
    method: PepMethod
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    trials: Optional[int] = None

    @property
    def saturated(self) -> bool:
        """The Chernoff bound exceeds one (uninformative at low SNR)."""
        return self.value > 1.0

    @property
    def clamped(self) -> float:
        return min(max(self.value, 0.0), 1.0)


# --- conditional PEP -----------------------------------------------------

def conditional_pep_exact(d2, params: McaParams):
    """``sum_m alpha_m Q(sqrt(d^2 / (2 beta_m N0)))``; broadcasts over ``d2``."""
    d2 = np.asarray(d2, dtype=float)
    arg = np.sqrt(np.multiply.outer(d2, 1.0 / (2.0 * params.beta * params.N0)))
    return special.ndtr(-arg) @ params.alpha


def conditional_pep_chernoff(d2, params: McaParams):
    """``sum_m alpha_m exp(-d^2 / (4 beta_m N0))``."""
    d2 = np.asarray(d2, dtype=float)
    return np.exp(-np.multiply.outer(d2, 1.0 / (4.0 * params.beta * params.N0))) @ params.alpha


def conditional_pep_given_variance(d2, variance):
    """Gaussian pairwise error ``Q(sqrt(d^2 / (2 var)))`` for an arbitrary
    projected noise variance."""
    d2 = np.asarray(d2, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        arg = np.sqrt(d2 / (2.0 * np.asarray(variance)))
    return special.ndtr(-np.nan_to_num(arg, nan=0.0))


# --- relay-link kernels --------------------------------------------------

def kernel_blind_ieh(c, closed_form=False, spec=KERNEL_QUADRATURE):
    """``int_0^inf exp(-t) / (c t^2 + 1) dt`` (fading average with |h_sr|^4)."""
    if c <= 0:
        return 1.0
    if closed_form:
        g = mpmath.meijerg([[0.5, 0, 0], []], [[0], []], 4 * c)
        return float(g / mpmath.sqrt(mpmath.pi))
    return quad_semi_infinite(lambda t: np.exp(-t) / (c * t * t + 1.0), spec, points=[1.0 / math.sqrt(c)])


def kernel_blind_aeh(c, closed_form=False, spec=KERNEL_QUADRATURE):
    """``int_0^inf exp(-t) / (c t + 1) dt = exp(1/c) Gamma(0, 1/c) / c``."""
    if c <= 0:
        return 1.0
    if closed_form:
        return scaled_gamma_upper_zero(1.0 / c) / c
    return quad_semi_infinite(lambda t: np.exp(-t) / (c * t + 1.0), spec, points=[1.0 / c])


def _csi_ieh_closed(xi, B):
    disc = xi * xi - 4.0 * B
    if disc <= 0:
        return None
    psi = math.sqrt(disc)
    lam = (xi + psi) / (2.0 * B)
    big_psi = (xi - psi) / (2.0 * B)
    D1 = -xi * xi - xi * psi + 2.0 * B
    D2 = xi * xi - xi * psi - 2.0 * B
    # exp(r) Ei(-r) = -exp(r) Gamma(0, r) for the two negative roots -r
    return (-scaled_gamma_upper_zero(lam) * D1 - scaled_gamma_upper_zero(big_psi) * D2) / (2.0 * B * psi)


def kernel_csi_ieh(xi, B, closed_form=False, spec=KERNEL_QUADRATURE):
    """``int_0^inf exp(-t) (xi t + 1) / (B t^2 + xi t + 1) dt``.

    With ``closed_form=True`` the exponential-integral expression is used
    when its roots are real (``xi^2 > 4 B``); otherwise ``None`` is returned
    and the caller falls back to quadrature.
    """
    if B <= 0:
        return 1.0
    if closed_form:
        return _csi_ieh_closed(xi, B)
    pts = [1.0 / math.sqrt(B), xi / B]
    if xi > 0:
        pts.append(1.0 / xi)
    return quad_semi_infinite(lambda t: np.exp(-t) * (xi * t + 1.0) / ((B * t + xi) * t + 1.0), spec, points=pts)


def kernel_csi_aeh(xi, B, closed_form=False, spec=KERNEL_QUADRATURE):
    """``int_0^inf exp(-t) (xi t + 1) / (gamma t + 1) dt`` with ``gamma = B + xi``."""
    gamma = B + xi
    if B <= 0:
        return 1.0
    if closed_form:
        g1 = mpmath.meijerg([[1, 1], []], [[1], []], gamma)
        g2 = mpmath.meijerg([[1, 2], []], [[2], []], gamma)
        return float(g1 / gamma + xi * g2 / gamma ** 2)
    return quad_semi_infinite(lambda t: np.exp(-t) * (xi * t + 1.0) / (gamma * t + 1.0), spec, points=[1.0 / gamma])


# --- unconditional bounds ------------------------------------------------

def _relay_kernel(config: SystemConfig, n, gains, beta, N0, eps, closed_form):
    variant = config.variant
    scale = eps / (4.0 * beta * N0)
    if variant.blind:
        c = scale * float(gains.Phi_sq[n])
        if variant.instantaneous:
            return kernel_blind_ieh(c, closed_form)
        return kernel_blind_aeh(c, closed_form)
    xi = float(gains.xi[n])
    B = scale * float(gains.zeta[n])
    if variant.instantaneous:
        value = kernel_csi_ieh(xi, B, closed_form)
        if value is None:
            value = kernel_csi_ieh(xi, B)
        return value
    return kernel_csi_aeh(xi, B, closed_form)


def pep_state_term(config: SystemConfig, snr_db: float, beta: float,
                   pair: CodewordPair = WORST_CASE_PAIR, closed_form=False) -> float:
    """Chernoff bound averaged over fading for one noise variance factor ``beta``."""
    N0 = float(config.noise_power(snr_db))
    gains = effective_gains(config, N0, (beta, beta))
    eps = pair.eigenvalues
    value = 1.0 / (pair.delta * config.P_s / (4.0 * beta * N0) + 1.0)
    for n in range(2):
        value *= _relay_kernel(config, n, gains, beta, N0, eps[n], closed_form)
    return value


def _model1(config, snr_db, pair, closed_form):
    params = config.noise(snr_db)
    terms = [pep_state_term(config, snr_db, float(b), pair, closed_form) for b in params.beta]
    return math.fsum(float(a) * t for a, t in zip(params.alpha, terms))


def _require(config: SystemConfig, variant: SchemeVariant):
    if config.variant != variant:
        raise ValueError(f"config variant {config.variant} does not match {variant}")


def pep_blind_ieh(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """Blind relaying, instantaneous EH (Model I)."""
    _require(config, SchemeVariant("blind", "ieh"))
    return _model1(config, snr_db, pair, closed_form)


def pep_blind_aeh(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """Blind relaying, average EH (Model I)."""
    _require(config, SchemeVariant("blind", "aeh"))
    return _model1(config, snr_db, pair, closed_form)


def pep_csi_ieh(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """CSI-assisted relaying, instantaneous EH (Model I).

    The closed form is only used where it is real valued.
    """
    _require(config, SchemeVariant("csi", "ieh"))
    return _model1(config, snr_db, pair, closed_form)


def pep_csi_aeh(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """CSI-assisted relaying, average EH (Model I)."""
    _require(config, SchemeVariant("csi", "aeh"))
    return _model1(config, snr_db, pair, closed_form)


def pep_model2(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """Independent impulse states at D, R1, R2, using the frame-averaged
    variance factor in place of a common ``beta``."""
    params = config.noise(snr_db)
    if params.M > MAX_MODEL2_STATES:
        raise ValueError(f"Model II evaluation is limited to M <= {MAX_MODEL2_STATES}")
    alpha, beta = params.alpha, params.beta
    cache = {}
    parts = []
    for i, j, k in product(range(params.M), repeat=3):
        phi = float(mean_variance_factor(beta[i], beta[j], beta[k]))
        if phi not in cache:
            cache[phi] = pep_state_term(config, snr_db, phi, pair, closed_form)
        parts.append(float(alpha[i] * alpha[j] * alpha[k]) * cache[phi])
    return math.fsum(parts)


_DISPATCH = {
    ("blind", "ieh"): pep_blind_ieh,
    ("blind", "aeh"): pep_blind_aeh,
    ("csi", "ieh"): pep_csi_ieh,
    ("csi", "aeh"): pep_csi_aeh,
}


def pep_bound(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> float:
    """Variant- and spatial-model-matched Chernoff bound."""
    if config.spatial is SpatialModel.MODEL_II:
        return pep_model2(config, snr_db, pair, closed_form)
    fn = _DISPATCH[(config.variant.relaying.value, config.variant.eh_mode.value)]
    return fn(config, snr_db, pair, closed_form)


def evaluate(config: SystemConfig, snr_db: float, pair=WORST_CASE_PAIR, closed_form=False) -> PepEstimate:
    method = PepMethod.CHERNOFF_CLOSED_FORM if closed_form else PepMethod.CHERNOFF_QUADRATURE
    return PepEstimate(pep_bound(config, snr_db, pair, closed_form), method)


# --- sample-average oracle -----------------------------------------------

def fading_average(config: SystemConfig, snr_db: float, fading: FadingRealization,
                   pair: CodewordPair = WORST_CASE_PAIR):
    """Average the conditional exact PEP and Chernoff bound over given fading draws.

    Model I only. Returns ``(exact_mean, exact_sem, chernoff_mean, chernoff_sem)``.
    """
    params = config.noise(snr_db)
    N0 = params.N0
    X = tuple(np.abs(np.asarray(h)) ** 2 for h in fading.h_sr)
    exact = 0.0
    chern = 0.0
    for a, b in zip(params.alpha, params.beta):
        gains = effective_gains(config, N0, (b, b), X)
        d2 = distance_sq(config.variant, gains, fading, pair)
        exact = exact + a * special.ndtr(-np.sqrt(d2 / (2.0 * b * N0)))
        chern = chern + a * np.exp(-d2 / (4.0 * b * N0))
    n = exact.size
    return (float(np.mean(exact)), float(np.std(exact, ddof=1) / math.sqrt(n)),
            float(np.mean(chern)), float(np.std(chern, ddof=1) / math.sqrt(n)))


# --- diversity -----------------------------------------------------------

class DiversityError(ValueError):
    """The error-probability tail is not strictly decreasing."""


def diversity_order(snr_db: Sequence[float], pep: Sequence[float], points: int = 2) -> float:
    """Negative log-log slope between the two highest SNR grid points.

    ``points > 2`` fits a least-squares line through the last ``points``
    samples instead.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    pep = np.asarray(pep, dtype=float)
    if snr_db.shape != pep.shape or snr_db.size < 2:
        raise DiversityError("need at least two (snr, pep) points")
    order = np.argsort(snr_db)
    snr_db, pep = snr_db[order], pep[order]
    tail_snr, tail_pep = snr_db[-points:], pep[-points:]
    if np.any(tail_pep <= 0) or np.any(np.diff(tail_pep) >= 0) or np.any(np.diff(tail_snr) <= 0):
        raise DiversityError("PEP tail is not strictly decreasing")
    log_snr = tail_snr / 10.0 * math.log(10.0)
    log_p = np.log(tail_pep)
    if points == 2:
        return float(-(log_p[1] - log_p[0]) / (log_snr[1] - log_snr[0]))
    slope = np.polyfit(log_snr, log_p, 1)[0]
    return float(-slope)
