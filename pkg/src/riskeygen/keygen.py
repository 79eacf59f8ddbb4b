"""Phase quantization, key assembly and match statistics."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .params import as_generator

TWO_PI = 2 * np.pi


def phase_of(estimate):
    """Four-quadrant phase wrapped to [0, 2*pi). Zero maps to 0."""
    theta = np.mod(np.angle(estimate), TWO_PI)
    # mod of a tiny negative angle rounds to 2*pi
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return float(theta) if np.ndim(theta) == 0 else theta


def _check_levels(q_levels):
    if not isinstance(q_levels, (int, np.integer)) or q_levels < 2 or q_levels & (q_levels - 1):
        raise ValueError(f"q_levels must be a power of two >= 2, got {q_levels!r}")


def quantize_phase(theta, q_levels):
    """Bin index q in 1..Q with theta in [2*pi*(q-1)/Q, 2*pi*q/Q)."""
    _check_levels(q_levels)
    theta = np.asarray(theta, dtype=float)
    if np.any(~((theta >= 0) & (theta < TWO_PI))):
        raise ValueError("theta must lie in [0, 2*pi)")
    q = np.floor(theta * (q_levels / TWO_PI)).astype(np.int64)
    q = np.minimum(q, q_levels - 1) + 1
    return int(q) if q.ndim == 0 else q


def bits_from_level(q, q_levels):
    """Big-endian binary encoding of q - 1, length log2(Q).

    Accepts a scalar level (returns shape (log2 Q,)) or an array of levels
    (returns shape levels.shape + (log2 Q,)).
    """
    _check_levels(q_levels)
    q = np.asarray(q)
    if np.any((q < 1) | (q > q_levels)):
        raise ValueError(f"level outside 1..{q_levels}")
    n_bits = int(q_levels).bit_length() - 1
    shifts = np.arange(n_bits - 1, -1, -1)
    return (((q[..., None] - 1) >> shifts) & 1).astype(np.uint8)


class PhaseQuantizer(TransformerMixin, BaseEstimator):
    """Map complex channel estimates to quantized phase levels.

    Stateless apart from validation: ``fit`` only checks ``q_levels``.

    >>> PhaseQuantizer(q_levels=4).fit_transform([1j, -1 - 1j])
    array([2, 3])
    """

    def __init__(self, q_levels=2):
        self.q_levels = q_levels

    def fit(self, X=None, y=None):
        _check_levels(self.q_levels)
        self.n_bits_ = int(self.q_levels).bit_length() - 1
        return self

    def transform(self, X):
        if not hasattr(self, "n_bits_"):
            raise NotFittedError("PhaseQuantizer is not fitted yet; call fit first")
        X = check_complex_array(X)
        return quantize_phase(phase_of(X), self.q_levels)

    def transform_bits(self, X):
        """Key bits of each estimate, shape X.shape + (log2 Q,)."""
        return bits_from_level(self.transform(X), self.q_levels)


def check_complex_array(X):
    X = np.asarray(X)
    if X.dtype.kind not in "biufc":
        raise TypeError(f"expected numeric input, got dtype {X.dtype}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains NaN or infinity")
    return X


@dataclass(frozen=True)
class KeyMaterial:
    keys: np.ndarray    # (M, L) bits
    levels: np.ndarray  # (M, F) quantizer outputs in 1..Q
    owner: str

    @property
    def n_keys(self):
        return self.keys.shape[0]

    def key_string(self, index):
        return "".join(map(str, self.keys[index]))


def assemble_keys(estimate_sets, params, derived):
    """Alice's and Bob's M keys from F blocks of estimates.

    Key l concatenates the bits of the l-th switching period of blocks 1..F.
    """
    estimate_sets = list(estimate_sets)
    if len(estimate_sets) != params.f_blocks:
        raise ValueError(f"expected {params.f_blocks} estimate sets, got {len(estimate_sets)}")
    m = derived.periods_per_block
    for es in estimate_sets:
        if es.g_hat_ba.shape != (m,) or es.g_hat_ab.shape != (m,):
            raise ValueError(f"estimate set {es.block_index} does not have {m} periods")

    # (2, M, F): Alice from g_hat_ba, Bob from g_hat_ab
    est = np.array([[es.g_hat_ba for es in estimate_sets], [es.g_hat_ab for es in estimate_sets]])
    levels = PhaseQuantizer(params.q_levels).fit().transform(est.transpose(0, 2, 1))
    keys = bits_from_level(levels, params.q_levels).reshape(2, m, derived.key_len_bits)
    return (
        KeyMaterial(keys=keys[0], levels=levels[0], owner="alice"),
        KeyMaterial(keys=keys[1], levels=levels[1], owner="bob"),
    )


@dataclass(frozen=True)
class MatchCounts:
    """Sufficient statistics for match rates; merged by summation."""

    keys: int = 0
    key_matches: int = 0
    estimates: int = 0
    estimate_matches: int = 0

    def __add__(self, other):
        return MatchCounts(
            self.keys + other.keys,
            self.key_matches + other.key_matches,
            self.estimates + other.estimates,
            self.estimate_matches + other.estimate_matches,
        )


def count_matches(alice, bob):
    if alice.keys.shape != bob.keys.shape or alice.levels.shape != bob.levels.shape:
        raise ValueError("alice and bob key material have different shapes")
    same_level = alice.levels == bob.levels
    return MatchCounts(
        keys=alice.keys.shape[0],
        key_matches=int(np.all(alice.keys == bob.keys, axis=1).sum()),
        estimates=same_level.size,
        estimate_matches=int(same_level.sum()),
    )


@dataclass(frozen=True)
class ProtocolStats:
    match_prob_hat: float
    kmr_hat: float
    per_estimate_match_hat: float
    mean_handshakes: float
    throughput: float
    ci_halfwidth: float
    n_keys: int


def key_throughput(match_prob, q_levels, t_s):
    """Average key throughput p*log2(Q)/(T_s/2) in bits per symbol."""
    return match_prob * (int(q_levels).bit_length() - 1) / (t_s / 2)


def match_stats(rounds, params):
    """Pool key-match statistics.

    ``rounds`` is a MatchCounts, or an iterable of MatchCounts or of
    (alice, bob) KeyMaterial pairs.
    """
    if isinstance(rounds, MatchCounts):
        counts = rounds
    else:
        counts = MatchCounts()
        for item in rounds:
            counts = counts + (item if isinstance(item, MatchCounts) else count_matches(*item))
    if counts.keys == 0:
        raise ValueError("no keys to evaluate")
    p = counts.key_matches / counts.keys
    return ProtocolStats(
        match_prob_hat=p,
        kmr_hat=1.0 - p,
        per_estimate_match_hat=counts.estimate_matches / counts.estimates,
        mean_handshakes=1.0 / p if p > 0 else float("inf"),
        throughput=key_throughput(p, params.q_levels, params.t_s),
        ci_halfwidth=float(1.96 * np.sqrt(p * (1.0 - p) / counts.keys)),
        n_keys=counts.keys,
    )


def simulate_handshake_counts(rng, match_prob, n_keys):
    """Handshakes until success for ``n_keys`` keys; geometric on 1, 2, 3, ..."""
    if not 0 < match_prob <= 1:
        raise ValueError(f"match_prob must be in (0, 1], got {match_prob}")
    return as_generator(rng).geometric(match_prob, size=n_keys)
