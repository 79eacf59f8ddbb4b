"""Monte Carlo experiments, parameter sweeps, figure presets and CSV output."""

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import sample_block, sample_schedule
from .estimation import MODES, run_round
from .keygen import MatchCounts, assemble_keys, count_matches, match_stats
from .params import TABLE1, ParamError, RandomSource, SystemParams, snr_db_to_noise_power, validate
from .theory import skr_lower_bound

SWEEP_AXES = ("n_elements", "snr_db", "t_s", "q_levels")
DEFAULT_N_KEYS = 10_000

CSV_COLUMNS = [
    "sweep_axis",
    "sweep_value",
    "n_keys",
    "kmr",
    "match_prob",
    "per_estimate_match",
    "mean_handshakes",
    "throughput_bits_per_symbol",
    "theory_bound_bits_per_symbol",
    "ci_halfwidth",
    "seed",
]


class SweepError(ValueError):
    """A sweep point produced invalid parameters."""

    def __init__(self, axis, value, cause):
        self.axis, self.value, self.cause = axis, value, cause
        super().__init__(f"{axis}={value}: {cause}")


@dataclass(frozen=True)
class ExperimentConfig:
    base: SystemParams
    sweep_axis: str
    sweep_values: tuple
    n_keys: int = DEFAULT_N_KEYS
    master_seed: int = 0
    mode: str = "reduced"
    include_theory: bool = False
    # no-RIS baseline: N forced to 0 and a single T_s = T_k window per block
    no_ris: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ValueError("sweep_values is empty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_keys < 1:
            raise ValueError(f"n_keys must be positive, got {self.n_keys}")

    def params_at(self, value):
        """SystemParams with the sweep value substituted; raises SweepError."""
        if self.sweep_axis == "snr_db":
            params = self.base.replace(noise_power=snr_db_to_noise_power(value, self.base.power))
        else:
            params = self.base.replace(**{self.sweep_axis: value})
        if self.no_ris:
            params = params.replace(n_elements=0, t_s=params.t_k)
        try:
            validate(params)
        except ParamError as exc:
            raise SweepError(self.sweep_axis, value, exc) from exc
        return params


@dataclass(frozen=True)
class ResultRow:
    sweep_value: object
    kmr_hat: float
    match_prob_hat: float
    per_estimate_match_hat: float
    mean_handshakes: float
    throughput: float
    theory_bound: float | None
    ci_halfwidth: float
    n_keys: int
    master_seed: int


@dataclass
class ExperimentResult:
    sweep_axis: str
    rows: list = field(default_factory=list)


def _run_trials(params, mode, master_seed, point_index, trials):
    derived = validate(params)
    counts = MatchCounts()
    for trial in trials:
        rng = RandomSource(master_seed, (point_index, trial)).generator()
        sets = []
        for f in range(params.f_blocks):
            block = sample_block(rng, params)
            schedule = sample_schedule(rng, params, derived)
            sets.append(run_round(rng, block, schedule, params, derived, mode=mode, block_index=f))
        counts = counts + count_matches(*assemble_keys(sets, params, derived))
    return counts


def _chunks(n, k):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_point(config, point, point_index=None, workers=1, executor=None):
    """Simulate ``config.n_keys`` keys at one sweep value and summarize them.

    Each handshake round (F blocks, M simultaneous keys) draws from its own
    substream keyed by (point_index, round), so the result does not depend
    on ``workers``.
    """
    if point_index is None:
        point_index = config.sweep_values.index(point)
    params = config.params_at(point)
    derived = validate(params)
    n_rounds = math.ceil(config.n_keys / derived.periods_per_block)

    args = (params, config.mode, config.master_seed, point_index)
    if executor is not None and workers > 1:
        futures = [executor.submit(_run_trials, *args, chunk) for chunk in _chunks(n_rounds, workers)]
        counts = sum((f.result() for f in futures), MatchCounts())
    else:
        counts = _run_trials(*args, range(n_rounds))

    stats = match_stats(counts, params)
    bound = float(skr_lower_bound(params, derived)) if config.include_theory else None
    return ResultRow(
        sweep_value=point,
        kmr_hat=stats.kmr_hat,
        match_prob_hat=stats.match_prob_hat,
        per_estimate_match_hat=stats.per_estimate_match_hat,
        mean_handshakes=stats.mean_handshakes,
        throughput=stats.throughput,
        theory_bound=bound,
        ci_halfwidth=stats.ci_halfwidth,
        n_keys=stats.n_keys,
        master_seed=config.master_seed,
    )


def run_sweep(config, workers=1):
    # fail fast before any simulation
    for value in config.sweep_values:
        config.params_at(value)
    result = ExperimentResult(config.sweep_axis)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, value in enumerate(config.sweep_values):
                result.rows.append(run_point(config, value, i, workers, pool))
    else:
        for i, value in enumerate(config.sweep_values):
            result.rows.append(run_point(config, value, i))
    return result


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="-")


def result_records(result):
    for row in result.rows:
        yield [
            result.sweep_axis,
            _fmt(row.sweep_value),
            _fmt(row.n_keys),
            _fmt(row.kmr_hat),
            _fmt(row.match_prob_hat),
            _fmt(row.per_estimate_match_hat),
            _fmt(row.mean_handshakes),
            _fmt(row.throughput),
            _fmt(row.theory_bound),
            _fmt(row.ci_halfwidth),
            _fmt(row.master_seed),
        ]


def _open(destination):
    if isinstance(destination, (str, os.PathLike)):
        return open(destination, "w", newline=""), True
    return destination, False


def emit_csv(result, destination):
    """Header plus one row per sweep point; a path or a text stream."""
    fh, close = _open(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(result_records(result))
    finally:
        if close:
            fh.close()


def to_csv_string(result):
    buf = io.StringIO()
    emit_csv(result, buf)
    return buf.getvalue()


# -- figure presets ---------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    label: str
    overrides: dict
    no_ris: bool = False


@dataclass(frozen=True)
class FigurePreset:
    name: str
    config: ExperimentConfig
    curves: tuple
    metric: str  # "kmr" or "throughput"

    def curve_config(self, curve):
        return replace(
            self.config,
            base=self.config.base.replace(**curve.overrides),
            no_ris=curve.no_ris,
        )


FIGURES = ("fig3", "fig4", "fig5", "fig6")
N_SWEEP = (1, 11, 21, 31, 41, 51, 61)
SNR_SWEEP = tuple(range(-20, 41, 5))
# The SNR sweeps leave N unstated.
SNR_SWEEP_N = 64

# Figure baseline: Table 1 at 0 dB, one estimate per key (f_blocks=1), the
# setting under which the plotted mismatch rates and throughputs are
# reproduced.
FIGURE_BASE = TABLE1.replace(f_blocks=1)


def figure_preset(name, n_keys=DEFAULT_N_KEYS, master_seed=0, mode="reduced", n_elements=None):
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; expected one of {FIGURES}")
    t_k = FIGURE_BASE.t_k
    if name in ("fig3", "fig5"):
        base = FIGURE_BASE
        config = ExperimentConfig(base, "n_elements", N_SWEEP, n_keys, master_seed, mode, name == "fig5")
        curves = (
            Curve("ris_ts2", {"t_s": 2}),
            Curve("ris_ts10", {"t_s": 10}),
            Curve("ris_tstk", {"t_s": t_k}),
            Curve("no_ris", {}, no_ris=True),
        )
    else:
        n = SNR_SWEEP_N if n_elements is None else n_elements
        base = FIGURE_BASE.replace(n_elements=n)
        config = ExperimentConfig(base, "snr_db", SNR_SWEEP, n_keys, master_seed, mode, name == "fig6")
        curves = (
            Curve("ris_ts2_q2", {"t_s": 2, "q_levels": 2}),
            Curve("ris_ts2_q4", {"t_s": 2, "q_levels": 4}),
            Curve("ris_ts2_q8", {"t_s": 2, "q_levels": 8}),
            Curve("ris_tstk", {"t_s": t_k}),
            Curve("no_ris", {}, no_ris=True),
        )
    metric = "kmr" if name in ("fig3", "fig4") else "throughput"
    return FigurePreset(name, config, curves, metric)


def run_figure(preset, workers=1, curves=None):
    """Run every curve of a preset; returns a list of (label, ExperimentResult)."""
    out = []
    for curve in preset.curves:
        if curves is not None and curve.label not in curves:
            continue
        out.append((curve.label, run_sweep(preset.curve_config(curve), workers)))
    return out


def emit_figure_csv(curve_results, destination):
    """Long-format CSV: a leading ``curve`` column, then the sweep columns."""
    fh, close = _open(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve"] + CSV_COLUMNS)
        for label, result in curve_results:
            for rec in result_records(result):
                w.writerow([label] + rec)
    finally:
        if close:
            fh.close()
