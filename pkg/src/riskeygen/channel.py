"""Block-fading channel realizations, RIS phase schedules and aggregate channels."""

from dataclasses import dataclass

import numpy as np

from .params import as_generator

LINKS = ("ab", "ba", "ae", "be")


def complex_normal(rng, var, size=None):
    """Circularly symmetric CN(0, var) samples."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class ChannelBlock:
    # h_ab is stored once and serves both directions (TDD reciprocity).
    h_ab: complex
    h_ae: complex
    h_be: complex
    h_ar: np.ndarray
    h_br: np.ndarray
    h_re: np.ndarray

    @property
    def n_elements(self):
        return self.h_ar.shape[0]


@dataclass(frozen=True)
class RisSchedule:
    phases: np.ndarray  # (M, N) angles in [0, 2*pi)

    @property
    def n_periods(self):
        return self.phases.shape[0]

    def reflection(self, period):
        """Diagonal of the reflection matrix in switching period ``period`` (1-based)."""
        return np.exp(1j * self.phases[period - 1])


@dataclass(frozen=True)
class Covariances:
    rho_ab: float
    rho_ae: float
    rho_be: float


def sample_block(rng, params) -> ChannelBlock:
    rng = as_generator(rng)
    n = params.n_elements
    # one draw for all 3 + 3N complex entries, split by link
    z = rng.standard_normal((2, 3 + 3 * n))
    z = (z[0] + 1j * z[1]) * np.sqrt(0.5)
    return ChannelBlock(
        h_ab=complex(z[0] * np.sqrt(params.beta_ab)),
        h_ae=complex(z[1] * np.sqrt(params.beta_ae)),
        h_be=complex(z[2] * np.sqrt(params.beta_be)),
        h_ar=z[3:3 + n] * np.sqrt(params.beta_ar),
        h_br=z[3 + n:3 + 2 * n] * np.sqrt(params.beta_rb),
        h_re=z[3 + 2 * n:] * np.sqrt(params.beta_re),
    )


def sample_schedule(rng, params, derived) -> RisSchedule:
    rng = as_generator(rng)
    shape = (derived.periods_per_block, params.n_elements)
    phases = rng.uniform(0.0, 2 * np.pi, shape)
    # uniform() can round up to the open endpoint
    phases[phases >= 2 * np.pi] = 0.0
    return RisSchedule(phases)


def _segments(block, link):
    if link in ("ab", "ba"):
        # h_ar^H Phi h_rb with h_rb = conj(h_br); the same expression is used
        # for both directions so reciprocity holds bit-exactly.
        return block.h_ab, block.h_ar, np.conj(block.h_br)
    if link == "ae":
        return block.h_ae, block.h_ar, block.h_re
    if link == "be":
        return block.h_be, block.h_br, block.h_re
    raise ValueError(f"unknown link {link!r}; expected one of {LINKS}")


def aggregate_all(block, schedule, link):
    """Aggregate channel of ``link`` for every switching period, shape (M,)."""
    direct, seg1, seg2 = _segments(block, link)
    if schedule.phases.shape[1] != seg1.shape[0]:
        raise ValueError(
            f"schedule has {schedule.phases.shape[1]} elements, block has {seg1.shape[0]}"
        )
    cascade = np.exp(1j * schedule.phases) @ (np.conj(seg1) * seg2)
    return direct + cascade


def aggregate(block, schedule, period, link):
    """Aggregate channel h_direct + seg1^H Phi_period seg2 of one link.

    ``period`` is 1-based. ``"ab"`` and ``"ba"`` return the identical value.
    """
    m = schedule.n_periods
    if not 1 <= period <= m:
        raise IndexError(f"period {period} outside 1..{m}")
    return complex(aggregate_all(block, schedule, link)[period - 1])


def covariances(params) -> Covariances:
    n = params.n_elements
    return Covariances(
        rho_ab=params.beta_ab + n * params.beta_ar * params.beta_rb,
        rho_ae=params.beta_ae + n * params.beta_ar * params.beta_re,
        rho_be=params.beta_be + n * params.beta_rb * params.beta_re,
    )
