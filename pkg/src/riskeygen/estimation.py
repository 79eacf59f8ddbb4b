"""Least-squares channel estimates at Alice, Bob and Eve."""

from dataclasses import dataclass

import numpy as np

from .channel import aggregate_all, complex_normal
from .params import as_generator

MODES = ("reduced", "pilot")


@dataclass(frozen=True)
class EstimateSet:
    g_hat_ba: np.ndarray  # Alice's estimates, one per switching period
    g_hat_ab: np.ndarray  # Bob's
    g_hat_ae: np.ndarray  # Eve, from Alice's pilots
    g_hat_be: np.ndarray  # Eve, from Bob's pilots
    block_index: int = 0

    @property
    def n_periods(self):
        return self.g_hat_ba.shape[0]


def default_pilots(t_s, power):
    """Constant-modulus pilot vector of length t_s/2 with energy (t_s/2)*power."""
    return np.full(t_s // 2, np.sqrt(power), dtype=complex)


def estimate_reduced(rng, g_true, est_noise_var):
    """g_true plus CN(0, est_noise_var) error; ``g_true`` may be an array."""
    if est_noise_var < 0:
        raise ValueError(f"est_noise_var must be >= 0, got {est_noise_var}")
    rng = as_generator(rng)
    g_true = np.asarray(g_true, dtype=complex)
    out = g_true + complex_normal(rng, est_noise_var, g_true.shape)
    return complex(out) if out.ndim == 0 else out


def estimate_pilot(rng, g_true, t_s, power, noise_power, pilots=None):
    """Simulate pilot reception y = g x + n and return the LS estimate x^H y / |x|^2.

    ``g_true`` may be an array; each entry gets its own noise vector.
    """
    if t_s < 2 or t_s % 2:
        raise ValueError(f"t_s must be even and >= 2, got {t_s}")
    rng = as_generator(rng)
    x = default_pilots(t_s, power) if pilots is None else np.asarray(pilots, dtype=complex)
    if x.shape != (t_s // 2,):
        raise ValueError(f"pilots must have length t_s/2={t_s // 2}, got shape {x.shape}")
    g_true = np.asarray(g_true, dtype=complex)
    y = g_true[..., None] * x + complex_normal(rng, noise_power, g_true.shape + x.shape)
    out = (y @ np.conj(x)) / np.vdot(x, x).real
    return complex(out) if out.ndim == 0 else out


def run_round(rng, block, schedule, params, derived, mode="reduced", block_index=0):
    """Estimates of all four observers for every switching period of one block."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    m = derived.periods_per_block
    if schedule.n_periods != m:
        raise ValueError(f"schedule has {schedule.n_periods} periods, expected {m}")
    if block.n_elements != params.n_elements:
        raise ValueError(f"block has {block.n_elements} elements, params say {params.n_elements}")
    rng = as_generator(rng)

    g_ab = aggregate_all(block, schedule, "ab")
    g_ae = aggregate_all(block, schedule, "ae")
    g_be = aggregate_all(block, schedule, "be")
    # rows: Alice (observes g_ba == g_ab), Bob, Eve from Alice, Eve from Bob
    truth = np.stack([g_ab, g_ab, g_ae, g_be])

    # every observer draws independent noise
    if mode == "reduced":
        est = estimate_reduced(rng, truth, derived.est_noise_var)
    else:
        est = estimate_pilot(rng, truth, params.t_s, params.power, params.noise_power)
    return EstimateSet(*est, block_index=block_index)
