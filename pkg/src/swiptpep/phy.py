"""Two-phase distributed-Alamouti SWIPT relaying chain.

Phase 1 (slots 1-2): the source sends ``s1, s2`` to both relays and the
destination.  Phase 2 (slots 3-4): each power-splitting relay amplifies and
forwards with the energy it harvested, using the Alamouti pattern.  The
destination sees ``y = h S + n`` with a single effective row ``h``.

All functions broadcast over NumPy arrays so that a whole chunk of frames
can be processed at once.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import FadingRealization, Topology, path_loss_gains
from .mca_noise import FrameNoiseStates, McaParams, NoiseEnvironment, SpatialModel

__all__ = [
    "Relaying",
    "EhMode",
    "SchemeVariant",
    "ALL_VARIANTS",
    "RelayParams",
    "SystemConfig",
    "CodewordPair",
    "CODEBOOK",
    "WORST_CASE_PAIR",
    "EffectiveGains",
    "Frame",
    "snr_to_noise_power",
    "build_code_matrix",
    "harvested_power",
    "relay_gain",
    "omega",
    "effective_phi_sq",
    "effective_gains",
    "synthesize_frame",
    "distance_sq",
    "mdr_decide",
    "pairwise_error",
    "projected_noise_variance",
]


class Relaying(str, Enum):
    BLIND = "blind"
    CSI = "csi"


class EhMode(str, Enum):
    IEH = "ieh"
    AEH = "aeh"


@dataclass(frozen=True)
class SchemeVariant:
    """Relaying scheme (blind or CSI-assisted) combined with an EH mode."""

    relaying: Relaying = Relaying.BLIND
    eh_mode: EhMode = EhMode.IEH

    def __post_init__(self):
        object.__setattr__(self, "relaying", Relaying(self.relaying))
        object.__setattr__(self, "eh_mode", EhMode(self.eh_mode))

    @classmethod
    def parse(cls, text: str, eh: Optional[str] = None) -> "SchemeVariant":
        """Accept ``"blind-aeh"``, ``"csi_ieh"`` or ``("blind", "aeh")``."""
        text = str(text).strip().lower().replace("_", "-")
        if "-" in text:
            relaying, _, eh_part = text.partition("-")
            if eh is not None and eh.strip().lower() != eh_part:
                raise ValueError(f"conflicting EH modes {eh_part!r} and {eh!r}")
            eh = eh_part
        else:
            relaying = text
        if eh is None:
            raise ValueError(f"scheme {text!r} needs an EH mode (ieh or aeh)")
        try:
            return cls(Relaying(relaying), EhMode(eh.strip().lower()))
        except ValueError:
            raise ValueError(f"unknown scheme {text!r} / EH mode {eh!r}") from None

    @property
    def blind(self) -> bool:
        return self.relaying is Relaying.BLIND

    @property
    def instantaneous(self) -> bool:
        return self.eh_mode is EhMode.IEH

    @property
    def label(self) -> str:
        return f"{self.relaying.value}-{self.eh_mode.value}"

    def __str__(self):
        return self.label


ALL_VARIANTS = tuple(SchemeVariant(r, e) for r in Relaying for e in EhMode)


@dataclass(frozen=True)
class RelayParams:
    """Power-splitting ratio ``theta`` and conversion efficiency ``eta``."""

    theta: float = 0.5
    eta: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"PS ratio theta must lie in (0, 1), got {self.theta!r}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"EH efficiency eta must lie in (0, 1), got {self.eta!r}")

    @property
    def kappa(self) -> float:
        return 1.0 - self.theta


@dataclass(frozen=True)
class SystemConfig:
    """Complete scenario. SNR is not stored: it is ``P_s / N0`` and is swept
    by changing ``N0``."""

    P_s: float = 1.0
    relays: Tuple[RelayParams, RelayParams] = (RelayParams(), RelayParams())
    topology: Topology = field(default_factory=Topology)
    variant: SchemeVariant = field(default_factory=SchemeVariant)
    environment: NoiseEnvironment = NoiseEnvironment.NG
    spatial: SpatialModel = SpatialModel.MODEL_I
    M: int = 5

    def __post_init__(self):
        if not self.P_s > 0:
            raise ValueError("source power P_s must be positive")
        if len(self.relays) != 2:
            raise ValueError("exactly two relays are supported")
        object.__setattr__(self, "relays", tuple(self.relays))
        object.__setattr__(self, "environment", NoiseEnvironment.parse(self.environment))
        object.__setattr__(self, "spatial", SpatialModel.parse(self.spatial))
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("truncation M must be an integer >= 1")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def noise_power(self, snr_db: float) -> float:
        return snr_to_noise_power(snr_db, self.P_s)

    def noise(self, snr_db: float) -> McaParams:
        return self.environment.params(self.M, self.noise_power(snr_db))

    @property
    def path_loss(self):
        L_sr1, L_sr2, L_rd1, L_rd2 = path_loss_gains(self.topology)
        return (L_sr1, L_sr2), (L_rd1, L_rd2)


def snr_to_noise_power(snr_db, P_s=1.0):
    return P_s / 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


# --- codewords -----------------------------------------------------------

CODEBOOK = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def build_code_matrix(s) -> np.ndarray:
    """4x4 code matrix: direct-link diagonal for phase 1, Alamouti block for phase 2."""
    s1, s2 = complex(s[0]), complex(s[1])
    S = np.zeros((4, 4), dtype=complex)
    S[0, 0] = s1
    S[1, 1] = s2
    S[2, 2], S[2, 3] = s1, -np.conj(s2)
    S[3, 2], S[3, 3] = s2, np.conj(s1)
    return S


@dataclass(frozen=True)
class CodewordPair:
    """Transmitted BPSK pair ``s`` and competing pair ``s_hat``."""

    s: Tuple[int, int]
    s_hat: Tuple[int, int]

    def __post_init__(self):
        for sym in (*self.s, *self.s_hat):
            if sym not in (1, -1):
                raise ValueError("BPSK symbols must be +1 or -1")
        object.__setattr__(self, "s", tuple(int(v) for v in self.s))
        object.__setattr__(self, "s_hat", tuple(int(v) for v in self.s_hat))

    @property
    def delta(self) -> float:
        return float(sum(abs(a - b) ** 2 for a, b in zip(self.s, self.s_hat)))

    @property
    def difference(self) -> np.ndarray:
        return build_code_matrix(self.s) - build_code_matrix(self.s_hat)

    @property
    def eigenvalues(self) -> Tuple[float, float]:
        """Eigenvalues of the relay block of ``(S - S_hat)(S - S_hat)^H``."""
        E = self.difference
        block = (E @ E.conj().T)[2:, 2:]
        ev = np.linalg.eigvalsh(block)
        return float(ev[1]), float(ev[0])

    @property
    def distinct(self) -> bool:
        return self.s != self.s_hat


WORST_CASE_PAIR = CodewordPair((1, 1), (-1, -1))


# --- gains ---------------------------------------------------------------

def harvested_power(config: SystemConfig, n: int, h_sr_sq=1.0):
    """Power available at relay ``n`` (0 or 1) after phase 1.

    IEH uses the instantaneous ``|h_sr|^2``; AEH uses its mean (one).
    """
    relay = config.relays[n]
    L_sr = config.path_loss[0][n]
    base = relay.eta * relay.theta * config.P_s / L_sr
    if config.variant.instantaneous:
        return base * np.asarray(h_sr_sq)
    return base * np.ones_like(np.asarray(h_sr_sq, dtype=float))


def relay_gain(config: SystemConfig, n: int, N0, h_sr_sq=1.0, beta=1.0):
    """Amplifier normalization ``G_r`` of relay ``n``.

    Blind relays normalize the average received energy and ignore ``h_sr``;
    CSI-assisted relays use the instantaneous ``|h_sr|^2`` and their noise
    state ``beta``.
    """
    relay = config.relays[n]
    L_sr = config.path_loss[0][n]
    signal = relay.kappa * config.P_s / L_sr
    if config.variant.blind:
        return np.sqrt(signal + N0) * np.ones_like(np.asarray(h_sr_sq, dtype=float))
    return np.sqrt(signal * np.asarray(h_sr_sq) + np.asarray(beta) * N0)


def _mean_gain_sq(config, n, N0, beta):
    relay = config.relays[n]
    L_sr = config.path_loss[0][n]
    signal = relay.kappa * config.P_s / L_sr
    if config.variant.blind:
        return signal + N0
    return signal + np.asarray(beta) * N0


def omega(config: SystemConfig, N0, beta_r=(1.0, 1.0)):
    """Destination normalization (average power scaling) for slots 3-4.

    ``beta_r`` holds the relays' variance factors; only CSI-assisted
    schemes depend on it.
    """
    (L_sr1, L_sr2), (L_rd1, L_rd2) = config.path_loss
    total = 1.0
    for n, (L_sr, L_rd) in enumerate(((L_sr1, L_rd1), (L_sr2, L_rd2))):
        relay = config.relays[n]
        total = total + (relay.eta * relay.theta * config.P_s * (relay.kappa + 1.0)
                         / (L_sr * L_rd * _mean_gain_sq(config, n, N0, beta_r[n])))
    return np.sqrt(total)


def _xi_zeta(config, n, N0, beta, Omega):
    relay = config.relays[n]
    L_sr = config.path_loss[0][n]
    L_rd = config.path_loss[1][n]
    eff_noise = N0 if config.variant.blind else np.asarray(beta) * N0
    snr = config.P_s / eff_noise
    xi = relay.kappa / L_sr * snr
    zeta = relay.eta * relay.theta * relay.kappa * config.P_s * snr / (Omega ** 2 * L_sr ** 2 * L_rd)
    return xi, zeta


def effective_phi_sq(config: SystemConfig, n: int, N0, beta=1.0, h_sr_sq=1.0, Omega=None):
    """Effective relayed gain ``Phi_n^2``.

    Blind: ``zeta / (xi + 1)``, independent of the channel.  CSI-assisted:
    ``zeta / (xi |h_sr|^2 + 1)``.
    """
    if Omega is None:
        Omega = omega(config, N0, (beta, beta))
    xi, zeta = _xi_zeta(config, n, N0, beta, Omega)
    if config.variant.blind:
        return zeta / (xi + 1.0) * np.ones_like(np.asarray(h_sr_sq, dtype=float))
    return zeta / (xi * np.asarray(h_sr_sq) + 1.0)


@dataclass(frozen=True)
class EffectiveGains:
    """Per-relay gains of one scheme at one noise level.

    ``G_r`` and ``Phi_sq`` are arrays for CSI-assisted relays (they track
    ``|h_sr|^2``); ``xi`` and ``zeta`` are the channel-free factors with
    ``Phi_sq = zeta / (xi X + 1)`` (blind: ``X = 1``).
    """

    G_r: Tuple
    Omega: float
    Phi_sq: Tuple
    xi: Tuple
    zeta: Tuple
    P_s: float = 1.0


def effective_gains(config: SystemConfig, N0, beta_r=(1.0, 1.0), h_sr_sq=(1.0, 1.0)) -> EffectiveGains:
    Omega = omega(config, N0, beta_r)
    G, phi, xis, zetas = [], [], [], []
    for n in range(2):
        G.append(relay_gain(config, n, N0, h_sr_sq[n], beta_r[n]))
        xi, zeta = _xi_zeta(config, n, N0, beta_r[n], Omega)
        xis.append(xi)
        zetas.append(zeta)
        phi.append(effective_phi_sq(config, n, N0, beta_r[n], h_sr_sq[n], Omega))
    return EffectiveGains(tuple(G), Omega, tuple(phi), tuple(xis), tuple(zetas), config.P_s)


# --- frame synthesis -----------------------------------------------------

@dataclass
class Frame:
    """Received 4-vector(s), effective channel row(s) and the conditional
    noise variance seen in each slot.  Leading axis indexes frames."""

    y: np.ndarray
    h: np.ndarray
    slot_variance: np.ndarray
    gains: EffectiveGains


def _states_arrays(states, size):
    if isinstance(states, FrameNoiseStates):
        states = (states.m_d, states.m_r1, states.m_r2)
    return tuple(np.broadcast_to(np.asarray(m), (size,)) for m in states)


def _cn(rng, shape):
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_frame(config: SystemConfig, fading: FadingRealization, states, s, N0,
                     rng: Optional[np.random.Generator] = None) -> Frame:
    """Build the received vectors for one frame or a block of frames.

    Parameters
    ----------
    config : SystemConfig
    fading : FadingRealization
        Scalar or array-valued channel coefficients.
    states : FrameNoiseStates or tuple of arrays
        Impulse states ``(m_d, m_r1, m_r2)``.
    s : pair of +/-1
        Transmitted BPSK pair.
    N0 : float
        Mean noise power at every node.
    rng : numpy Generator, optional
        Noise source; ``None`` gives a noiseless frame (``y = h S``).
    """
    h_sd = np.atleast_1d(np.asarray(fading.h_sd, dtype=complex))
    size = h_sd.shape[0]
    h_sr = [np.broadcast_to(np.asarray(x, dtype=complex), (size,)) for x in fading.h_sr]
    h_rd = [np.broadcast_to(np.asarray(x, dtype=complex), (size,)) for x in fading.h_rd]
    m_d, m_r1, m_r2 = _states_arrays(states, size)
    params = config.environment.params(config.M, N0)
    beta = params.beta
    beta_d, beta_r = beta[m_d], (beta[m_r1], beta[m_r2])
    X = [np.abs(h) ** 2 for h in h_sr]

    (L_sr1, L_sr2), (L_rd1, L_rd2) = config.path_loss
    L_sr, L_rd = (L_sr1, L_sr2), (L_rd1, L_rd2)
    gains = effective_gains(config, N0, beta_r, X)
    Omega = gains.Omega

    h_row = np.empty((size, 4), dtype=complex)
    h_row[:, 0] = h_row[:, 1] = np.sqrt(config.P_s) * h_sd
    noise_coef = []
    for n in range(2):
        P_r = harvested_power(config, n, X[n])
        kappa = config.relays[n].kappa
        G = gains.G_r[n]
        amp = np.sqrt(kappa * P_r * config.P_s) / (Omega * G * np.sqrt(L_rd[n] * L_sr[n]))
        h_row[:, 2 + n] = amp * h_sr[n] * h_rd[n]
        noise_coef.append(np.sqrt(P_r) / (G * np.sqrt(L_rd[n])) * h_rd[n])

    S = build_code_matrix(s)
    y = h_row @ S

    relay_var = [beta_r[n] * (config.relays[n].kappa + 1.0) * N0 for n in range(2)]
    var_d = beta_d * N0
    var_relayed = (np.abs(noise_coef[0]) ** 2 * relay_var[0] + np.abs(noise_coef[1]) ** 2 * relay_var[1]
                   + var_d) / Omega ** 2
    slot_variance = np.stack([var_d, var_d, var_relayed, var_relayed], axis=1)

    if rng is not None:
        n_d = _cn(rng, (size, 4)) * np.sqrt(var_d)[:, None]
        # relay n keeps two phase-1 samples: r[n][0] from slot 1, r[n][1] from slot 2
        r = [_cn(rng, (size, 2)) * np.sqrt(relay_var[n])[:, None] for n in range(2)]
        noise = np.empty((size, 4), dtype=complex)
        noise[:, 0] = n_d[:, 0]
        noise[:, 1] = n_d[:, 1]
        noise[:, 2] = (noise_coef[0] * r[0][:, 0] + noise_coef[1] * r[1][:, 1] + n_d[:, 2]) / Omega
        noise[:, 3] = (-noise_coef[0] * np.conj(r[0][:, 1]) + noise_coef[1] * np.conj(r[1][:, 0])
                       + n_d[:, 3]) / Omega
        y = y + noise
    return Frame(y=y, h=h_row, slot_variance=slot_variance, gains=gains)


# --- distances and decisions ---------------------------------------------

def distance_sq(variant: SchemeVariant, gains: EffectiveGains, fading: FadingRealization,
                pair: CodewordPair = WORST_CASE_PAIR):
    """Squared Euclidean distance ``d^2(s, s_hat)`` for the given scheme."""
    eps = pair.eigenvalues
    X = [np.abs(np.asarray(h)) ** 2 for h in fading.h_sr]
    Y = [np.abs(np.asarray(h)) ** 2 for h in fading.h_rd]
    d2 = pair.delta * gains.P_s * np.abs(np.asarray(fading.h_sd)) ** 2
    for n in range(2):
        x_pow = X[n] ** 2 if variant.instantaneous else X[n]
        if variant.blind:
            relay = gains.Phi_sq[n] * x_pow * Y[n]
        else:
            relay = gains.zeta[n] * x_pow * Y[n] / (gains.xi[n] * X[n] + 1.0)
        d2 = d2 + eps[n] * relay
    return d2


def mdr_decide(y, h, codebook: Sequence = CODEBOOK):
    """Minimum-distance decision; returns candidate indices (ties -> lowest)."""
    y = np.atleast_2d(y)
    h = np.atleast_2d(h)
    metrics = np.stack([np.sum(np.abs(y - h @ build_code_matrix(c)) ** 2, axis=-1) for c in codebook], axis=-1)
    return np.argmin(metrics, axis=-1)


def pairwise_error(y, h, pair: CodewordPair = WORST_CASE_PAIR):
    """True where the receiver prefers ``s_hat`` over the transmitted ``s``."""
    y = np.atleast_2d(y)
    h = np.atleast_2d(h)
    m_true = np.sum(np.abs(y - h @ build_code_matrix(pair.s)) ** 2, axis=-1)
    m_wrong = np.sum(np.abs(y - h @ build_code_matrix(pair.s_hat)) ** 2, axis=-1)
    return m_wrong < m_true


def projected_noise_variance(h, slot_variance, pair: CodewordPair = WORST_CASE_PAIR):
    """Actual distance ``d^2`` and the noise variance along ``h (S - S_hat)``.

    The pairwise test errs when ``2 Re<n, v> > |v|^2`` with ``v = h (S - S_hat)``,
    so the conditional error probability is ``Q(sqrt(d^2 / (2 var)))``.
    """
    v = np.atleast_2d(h) @ pair.difference
    w = np.abs(v) ** 2
    d2 = w.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        var = (w * np.atleast_2d(slot_variance)).sum(axis=-1) / d2
    return d2, var
