"""Relay topology, path loss and Rayleigh block fading for the five links."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Topology", "FadingRealization", "path_loss_gains", "sample_fading", "sample_fading_block"]


@dataclass(frozen=True)
class Topology:
    """Relays on the source-destination segment.

    Distances are normalized to the S-D distance, so ``d_rd = 1 - d_sr``.
    """

    d_sr1: float = 0.5
    d_sr2: float = 0.5
    path_loss_exponent_lambda: float = 2.7

    def __post_init__(self):
        for d in (self.d_sr1, self.d_sr2):
            if not 0.0 < d < 1.0:
                raise ValueError(f"relay distance must lie in (0, 1), got {d!r}")
        if not self.path_loss_exponent_lambda > 2.0:
            raise ValueError("path-loss exponent must exceed 2")

    @property
    def d_sr(self):
        return (self.d_sr1, self.d_sr2)

    @property
    def d_rd(self):
        return (1.0 - self.d_sr1, 1.0 - self.d_sr2)

    @property
    def lam(self):
        return self.path_loss_exponent_lambda


def path_loss_gains(topology: Topology):
    """Relative gains ``(L_sr1, L_sr2, L_rd1, L_rd2)`` with ``L = d ** lambda``."""
    lam = topology.lam
    d1, d2 = topology.d_sr
    return d1 ** lam, d2 ** lam, (1.0 - d1) ** lam, (1.0 - d2) ** lam


@dataclass(frozen=True)
class FadingRealization:
    """Small-scale coefficients of one block. Fields may be scalars or
    equally-shaped arrays (one entry per frame)."""

    h_sd: complex
    h_sr1: complex
    h_sr2: complex
    h_rd1: complex
    h_rd2: complex

    @property
    def h_sr(self):
        return (self.h_sr1, self.h_sr2)

    @property
    def h_rd(self):
        return (self.h_rd1, self.h_rd2)


def _cn(rng, size):
    # variance 0.5 per real dimension
    return np.sqrt(0.5) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_fading_block(rng: np.random.Generator, size: int) -> FadingRealization:
    """``size`` independent frames; each field is a complex array."""
    h = _cn(rng, (5, size))
    return FadingRealization(h[0], h[1], h[2], h[3], h[4])


def sample_fading(rng: np.random.Generator) -> FadingRealization:
    h = _cn(rng, 5)
    return FadingRealization(*(complex(x) for x in h))
