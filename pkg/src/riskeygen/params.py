"""System parameters, derived quantities and the seeding contract."""

from dataclasses import dataclass, fields, replace

import numpy as np


class ParamError(ValueError):
    """A parameter set violated one or more constraints.

    ``code`` names the first violation; ``violations`` holds all of them.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        self.code = self.violations[0][0]
        msg = "; ".join(f"{code}: {detail}" for code, detail in self.violations)
        super().__init__(msg)


@dataclass(frozen=True)
class SystemParams:
    n_elements: int = 1
    t_k: int = 40
    t_s: int = 2
    f_blocks: int = 100
    q_levels: int = 2
    power: float = 1.0
    noise_power: float = 1.0
    beta_ab: float = 1.0
    beta_ae: float = 1.0
    beta_be: float = 1.0
    beta_ar: float = 0.7
    beta_rb: float = 0.7
    beta_re: float = 0.7

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


# Table 1 scenario (0 dB SNR), RIS with one element switching every 2 symbols.
TABLE1 = SystemParams()


@dataclass(frozen=True)
class DerivedParams:
    est_noise_var: float
    periods_per_block: int
    key_len_bits: int
    snr_linear: float
    bits_per_estimate: int


def _is_int(x):
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _check(params):
    p = params
    out = []
    for name in ("n_elements", "t_k", "t_s", "f_blocks", "q_levels"):
        if not _is_int(getattr(p, name)):
            out.append(("NOT_INTEGER", f"{name}={getattr(p, name)!r}"))
    if out:
        return out

    if p.n_elements < 0:
        out.append(("N_NEGATIVE", f"n_elements={p.n_elements}"))
    if p.t_k < 2:
        out.append(("TK_TOO_SMALL", f"t_k={p.t_k}"))
    if p.t_s < 2 or p.t_s > p.t_k:
        out.append(("TS_OUT_OF_RANGE", f"t_s={p.t_s} not in [2, t_k={p.t_k}]"))
    if p.t_s % 2 != 0 or (p.t_s > 0 and p.t_k % p.t_s != 0):
        out.append(("TS_NOT_DIVIDING_TK", f"t_s={p.t_s} must be even and divide t_k={p.t_k}"))
    if p.q_levels < 2 or p.q_levels & (p.q_levels - 1):
        out.append(("Q_NOT_POWER_OF_TWO", f"q_levels={p.q_levels}"))
    if p.f_blocks < 1:
        out.append(("F_BLOCKS_TOO_SMALL", f"f_blocks={p.f_blocks}"))
    if not p.power > 0:
        out.append(("POWER_NOT_POSITIVE", f"power={p.power}"))
    if not p.noise_power >= 0:
        out.append(("NOISE_NEGATIVE", f"noise_power={p.noise_power}"))
    for name in ("beta_ab", "beta_ae", "beta_be", "beta_ar", "beta_rb", "beta_re"):
        v = getattr(p, name)
        if not v >= 0 or not np.isfinite(v):
            out.append(("BETA_NEGATIVE", f"{name}={v}"))
    return out


def validate(params: SystemParams) -> DerivedParams:
    """Check every constraint on ``params`` and compute derived quantities.

    Raises ParamError listing each broken constraint by name
    (e.g. ``TS_NOT_DIVIDING_TK``, ``Q_NOT_POWER_OF_TWO``).
    """
    violations = _check(params)
    if violations:
        raise ParamError(violations)
    bits = int(params.q_levels).bit_length() - 1
    return DerivedParams(
        est_noise_var=2.0 * params.noise_power / (params.t_s * params.power),
        periods_per_block=params.t_k // params.t_s,
        key_len_bits=params.f_blocks * bits,
        snr_linear=params.power / params.noise_power if params.noise_power > 0 else np.inf,
        bits_per_estimate=bits,
    )


def snr_db_to_noise_power(snr_db, power=1.0):
    """Noise power giving ``snr_db`` for transmit ``power`` (SNR = P / noise)."""
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    return power / 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class RandomSource:
    """Counter-based seed: (master_seed, stream_id) fixes the sample sequence.

    ``stream_id`` may be an int or a tuple of ints (e.g. ``(point, trial)``).
    """

    master_seed: int
    stream_id: int | tuple = 0

    def generator(self) -> np.random.Generator:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        seq = np.random.SeedSequence(int(self.master_seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept a RandomSource, a Generator or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    return np.random.default_rng(rng)
