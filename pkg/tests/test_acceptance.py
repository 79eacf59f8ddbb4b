"""Acceptance gate: one check per exit criterion, at the pinned tolerances.

A summary line per check is printed at the end of the pytest run.
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from riskeygen import cli
from riskeygen import experiments as ex
from riskeygen.channel import aggregate, aggregate_all, covariances, sample_block, sample_schedule
from riskeygen.estimation import estimate_pilot, estimate_reduced, run_round
from riskeygen.keygen import phase_of, quantize_phase, simulate_handshake_counts
from riskeygen.params import TABLE1, validate
from riskeygen.theory import build_joint_model, mi_oracle, mi_terms, skr_lower_bound

from conftest import excess_kurtosis

SEED = 2026
N_KEYS = 10_000

# Key mismatch rates read off the KMR-versus-N figure (Q = 2, 0 dB).
FIG3 = {
    "ris_ts2": {1: 0.2987, 11: 0.1713, 61: 0.0788},
    "ris_ts10": {1: 0.1620},
    "ris_tstk": {1: 0.0595},
    "no_ris": {n: 0.071 for n in ex.N_SWEEP},
}
FIG3_TOL = 0.015

# (value, tolerance) read off the throughput-versus-N figure at N = 1.
FIG5 = {
    "ris_ts2": (0.7013, 0.015),
    "ris_ts10": (0.1676, 0.01),
    "ris_tstk": (0.0470, 0.003),
    "no_ris": (0.0464, 0.003),
}

# No-RIS mismatch rate versus SNR.
FIG4_NO_RIS = {0: 0.0698, 20: 0.0231, 40: 0.0073}
FIG4_TOL = 0.01


@lru_cache(maxsize=None)
def _fig_curve_config(name, label):
    preset = ex.figure_preset(name, n_keys=N_KEYS, master_seed=SEED)
    return preset.curve_config(next(c for c in preset.curves if c.label == label))


@lru_cache(maxsize=None)
def fig3_row(label, n):
    cfg = _fig_curve_config("fig3", label)
    return ex.run_point(cfg, n)


# -- 1 ----------------------------------------------------------------------

def test_c1_theorem_matches_oracle(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst, eve = 0.0, 0.0
    for p in cli.random_params(rng, 1000):
        d = validate(p)
        model = build_joint_model(p, d)
        worst = max(worst, abs(skr_lower_bound(p, d) - mi_oracle(model, p.t_s)))
        eve = max(eve, *mi_terms(model)[1:])
    elapsed = time.perf_counter() - start
    ok = criterion(
        "C1 theorem-vs-oracle",
        worst <= 1e-9 and eve == 0.0 and elapsed < 1.0,
        f"max|diff|={worst:.2e} (<=1e-9), max Eve MI={eve} (==0), {elapsed:.2f}s (<1s)",
    )
    assert ok


# -- 2 ----------------------------------------------------------------------

@pytest.mark.parametrize("label", list(FIG3))
def test_c2_fig3_kmr(criterion, label):
    start = time.perf_counter()
    results = {n: fig3_row(label, n) for n in FIG3[label]}
    elapsed = time.perf_counter() - start
    all_ok = elapsed < 60
    for n, target in FIG3[label].items():
        row = results[n]
        assert row.n_keys >= N_KEYS
        ok = abs(row.kmr_hat - target) <= FIG3_TOL
        all_ok &= ok
        criterion(
            f"C2 fig3 {label} N={n}",
            ok,
            f"KMR={row.kmr_hat:.4f} target {target} +/- {FIG3_TOL} ({row.n_keys} keys)",
        )
    if label == "no_ris":
        k = [r.kmr_hat for r in results.values()]
        half = max(r.ci_halfwidth for r in results.values())
        flat = max(k) - min(k) <= 0.01 + 2 * half
        all_ok &= flat
        criterion("C2 fig3 no_ris flat in N", flat, f"max-min={max(k) - min(k):.4f} <= {0.01 + 2 * half:.4f}")
    criterion(f"C2 fig3 {label} runtime", elapsed < 60, f"{elapsed:.1f}s (<60s)")
    assert all_ok


# -- 3 ----------------------------------------------------------------------

@pytest.mark.parametrize("label", list(FIG5))
def test_c3_fig5_throughput(criterion, label):
    target, tol = FIG5[label]
    row = fig3_row(label, 1)
    params = _fig_curve_config("fig3", label).params_at(1)
    identity = (
        row.throughput == row.match_prob_hat * np.log2(params.q_levels) / (params.t_s / 2)
        and row.kmr_hat == 1 - row.match_prob_hat
        and row.throughput == (1 - row.kmr_hat) * np.log2(params.q_levels) / (params.t_s / 2)
    )
    ok = abs(row.throughput - target) <= tol and identity
    criterion(
        f"C3 fig5 {label} N=1",
        ok,
        f"throughput={row.throughput:.4f} target {target} +/- {tol}; identity exact={identity}",
    )
    assert ok


# -- 4 ----------------------------------------------------------------------

@pytest.mark.parametrize("snr_db", list(FIG4_NO_RIS))
def test_c4_fig4_no_ris(criterion, snr_db):
    cfg = _fig_curve_config("fig4", "no_ris")
    row = ex.run_point(cfg, snr_db)
    target = FIG4_NO_RIS[snr_db]
    ok = abs(row.kmr_hat - target) <= FIG4_TOL
    criterion(
        f"C4 fig4 no_ris {snr_db} dB",
        ok,
        f"KMR={row.kmr_hat:.4f} target {target} +/- {FIG4_TOL} ({row.n_keys} keys)",
    )
    assert ok


# -- 5 ----------------------------------------------------------------------

def test_c5_quantizer_nesting(criterion):
    theta = np.arange(1_000_000) * (2 * np.pi / 1_000_000)
    grid_ok = True
    for q in (2, 4, 8, 16):
        fine, coarse = quantize_phase(theta, 2 * q), quantize_phase(theta, q)
        # equal fine bins imply equal coarse bins: the coarse bin is a function of the fine one
        grid_ok &= bool(np.array_equal((fine - 1) // 2 + 1, coarse))

    rng = np.random.default_rng(SEED)
    g = (rng.standard_normal(200_000) + 1j * rng.standard_normal(200_000)) / np.sqrt(2)
    a = estimate_reduced(rng, g, 0.5)
    b = estimate_reduced(rng, g, 0.5)
    ta, tb = phase_of(a), phase_of(b)
    crn_ok = True
    for q in (2, 4, 8):
        mis_q = quantize_phase(ta, q) != quantize_phase(tb, q)
        mis_2q = quantize_phase(ta, 2 * q) != quantize_phase(tb, 2 * q)
        crn_ok &= bool(np.all(mis_2q[mis_q]))
    ok = criterion("C5 quantizer nesting", grid_ok and crn_ok, f"10^6-point grid={grid_ok}, CRN implication={crn_ok}")
    assert ok


# -- 6 ----------------------------------------------------------------------

def test_c6_estimation_equivalence(criterion):
    rng = np.random.default_rng(SEED)
    n = 100_000
    g = 0.8 - 0.3j
    all_ok = True
    for t_s in (2, 10, 40):
        for noise in (0.01, 1.0, 100.0):
            var = 2 * noise / (t_s * 1.0)
            band = 3 * var / np.sqrt(n)
            got = {}
            for mode in ("pilot", "reduced"):
                if mode == "pilot":
                    est = estimate_pilot(rng, np.full(n, g), t_s, 1.0, noise)
                else:
                    est = estimate_reduced(rng, np.full(n, g), var)
                got[mode] = np.mean(np.abs(est - g) ** 2)
            ok = all(abs(v - var) <= band for v in got.values())
            all_ok &= ok
            criterion(
                f"C6 estimation T_s={t_s} noise={noise}",
                ok,
                f"pilot={got['pilot']:.5g} reduced={got['reduced']:.5g} target {var:.5g} +/- {band:.2g}",
            )
    assert all_ok


# -- 7 ----------------------------------------------------------------------

def test_c7_model_statistics(criterion):
    rng = np.random.default_rng(SEED)
    n = 100_000
    all_ok = True
    for n_el in (0, 1, 16, 61):
        p = TABLE1.replace(n_elements=n_el, t_s=40)
        d = validate(p)
        power = np.empty(n)
        for i in range(n):
            power[i] = abs(aggregate(sample_block(rng, p), sample_schedule(rng, p, d), 1, "ab")) ** 2
        rho = covariances(p).rho_ab
        band = 3 * power.std() / np.sqrt(n)
        ok = abs(power.mean() - rho) <= band
        all_ok &= ok
        criterion(f"C7 E|g_ab|^2 N={n_el}", ok, f"{power.mean():.4f} vs rho_ab={rho:.4f} +/- {band:.3f}")

    p = TABLE1.replace(n_elements=61)
    d = validate(p)
    recip = True
    for _ in range(200):
        b, s = sample_block(rng, p), sample_schedule(rng, p, d)
        recip &= all(aggregate(b, s, l, "ab") == aggregate(b, s, l, "ba") for l in range(1, 21))
    all_ok &= recip
    criterion("C7 reciprocity bit-exact", recip, "200 blocks x 20 periods")

    p = TABLE1.replace(n_elements=16, t_s=40)
    d = validate(p)
    sets = [run_round(rng, sample_block(rng, p), sample_schedule(rng, p, d), p, d) for _ in range(n)]
    ab = np.array([s.g_hat_ab[0] for s in sets])
    ae = np.array([s.g_hat_ae[0] for s in sets])
    prod = ab * np.conj(ae)
    cov_ok = all(abs(x.mean()) <= 3 * x.std() / np.sqrt(n) for x in (prod.real, prod.imag))
    all_ok &= cov_ok
    criterion("C7 cov(g_hat_ab, g_hat_ae) = 0", cov_ok, f"mean={prod.mean():.4f}")

    p = TABLE1.replace(n_elements=256, beta_ab=0.0, t_s=40)
    d = validate(p)
    g = np.array([aggregate_all(sample_block(rng, p), sample_schedule(rng, p, d), "ab")[0] for _ in range(10_000)])
    kurt = [excess_kurtosis(g.real), excess_kurtosis(g.imag)]
    gauss = max(abs(k) for k in kurt) < 0.15
    all_ok &= gauss
    criterion("C7 Gaussianity N=256", gauss, f"excess kurtosis re={kurt[0]:.3f} im={kurt[1]:.3f} (<0.15)")
    assert all_ok


# -- 8 ----------------------------------------------------------------------

@pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
def test_c8_geometric_handshakes(criterion, p):
    rng = np.random.default_rng(SEED)
    n = 100_000
    counts = simulate_handshake_counts(rng, p, n)
    band = 3 * np.sqrt(1 - p) / p / np.sqrt(n)
    ok = abs(counts.mean() - 1 / p) <= band and counts.min() >= 1
    criterion(f"C8 handshakes p={p}", ok, f"mean={counts.mean():.4f} vs {1 / p:.4f} +/- {band:.4f}")
    assert ok


# -- 9 ----------------------------------------------------------------------

def test_c9_reproducible_figure_csv(criterion, tmp_path):
    outs = []
    for i, workers in enumerate((1, 1, 8)):
        out = tmp_path / f"fig3_{i}.csv"
        assert cli.main(["figure", "fig3", "--seed", "7", "--workers", str(workers), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    criterion("C9 fig3 --seed 7 byte-identical", ok, "two serial runs and an 8-worker run")
    assert ok
