"""Closed-form secret-key-rate lower bound and a Gaussian mutual-information oracle.

The oracle works from covariance matrices held at elevated precision
(mpmath), so it stays accurate when the estimation noise is many orders of
magnitude below the channel variance and the log-determinants of float64
matrices would lose most of their digits to cancellation.
"""

from dataclasses import dataclass

import mpmath
import numpy as np

from .channel import covariances

# digits carried by the oracle
ORACLE_DPS = 40


@dataclass(frozen=True)
class GaussianJointModel:
    """Second-order statistics of the estimates.

    ``cov_ab_ba`` is Cov([G_ab, G_ba]), ``cov_with_eve`` is Cov([G_ab, G_ae, G_be])
    (identical with G_ba in place of G_ab). Both are mpmath matrices.
    """

    cov_ab_ba: mpmath.matrix
    cov_with_eve: mpmath.matrix

    def to_numpy(self):
        def conv(m):
            return np.array([[complex(m[i, j]) for j in range(m.cols)] for i in range(m.rows)])
        return conv(self.cov_ab_ba), conv(self.cov_with_eve)


def build_joint_model(params, derived) -> GaussianJointModel:
    cov = covariances(params)
    with mpmath.workdps(ORACLE_DPS):
        s = mpmath.mpf(derived.est_noise_var)
        rab = mpmath.mpf(cov.rho_ab)
        ab_ba = mpmath.matrix([[rab + s, rab], [rab, rab + s]])
        eve = mpmath.diag([rab + s, mpmath.mpf(cov.rho_ae) + s, mpmath.mpf(cov.rho_be) + s])
    return GaussianJointModel(ab_ba, eve)


def skr_lower_bound(params, derived):
    """(2/T_s) * log2(1 + rho_ab^2 / (s (2 rho_ab + s))), s = estimation noise variance.

    Infinite when the estimation noise vanishes (and rho_ab > 0).
    """
    rho = covariances(params).rho_ab
    s = derived.est_noise_var
    scale = 2.0 / params.t_s
    if rho == 0:
        return 0.0
    if s == 0:
        return float("inf")
    if np.isinf(s):
        return 0.0
    snr = (rho / s) * (rho / (2 * rho + s))
    return scale * np.log1p(snr) / np.log(2)


def _eliminate(a, n_pivots, tol):
    """In-place LDL^H elimination of the first ``n_pivots`` rows of ``a``.

    Returns the pivots. Zero pivots are skipped (their column must vanish for
    a PSD matrix). Raises ValueError for non-Hermitian or indefinite input.
    """
    n = a.rows
    pivots = []
    for k in range(n_pivots):
        for i in range(k, n):
            if abs(a[i, k] - mpmath.conj(a[k, i])) > tol:
                raise ValueError("covariance matrix is not Hermitian")
        d = mpmath.re(a[k, k])
        if d < -tol:
            raise ValueError("covariance matrix is indefinite")
        if d <= tol:
            if any(abs(a[i, k]) > tol for i in range(k + 1, n)):
                raise ValueError("covariance matrix is indefinite")
            pivots.append(mpmath.mpf(0))
            continue
        pivots.append(d)
        for i in range(k + 1, n):
            f = a[i, k] / d
            if f == 0:
                continue
            for j in range(k + 1, n):
                a[i, j] -= f * a[k, j]
    return pivots


def _det_psd(m, tol):
    a = m.copy()
    return mpmath.fprod(_eliminate(a, a.rows, tol))


def _sub(m, idx):
    return mpmath.matrix([[m[i, j] for j in idx] for i in idx])


def gaussian_mi(cov, x_idx, y_idx):
    """I(X; Y) in bits for jointly circular complex Gaussian vectors.

    I = log2(det K_X / det K_X|Y), with the conditional covariance K_X|Y taken
    as the Schur complement left after eliminating Y from the joint matrix.
    When X and Y are uncorrelated the complement equals K_X exactly and the
    result is exactly 0. A degenerate X carries no information (0); a
    degenerate K_X|Y with nondegenerate K_X gives infinity.
    """
    x_idx, y_idx = list(x_idx), list(y_idx)
    with mpmath.workdps(ORACLE_DPS):
        tol = mpmath.mpf(10) ** (-(ORACLE_DPS - 10))
        det_x = _det_psd(_sub(cov, x_idx), tol)
        joint = _sub(cov, y_idx + x_idx)
        _eliminate(joint, len(y_idx), tol)
        ny = len(y_idx)
        cond = mpmath.matrix([[joint[i, j] for j in range(ny, joint.cols)] for i in range(ny, joint.rows)])
        det_cond = _det_psd(cond, tol)
        if det_x == 0:
            return 0.0
        if det_cond == 0:
            return float("inf")
        return float(mpmath.log(det_x / det_cond, 2))


def mi_terms(model):
    """(I(G_ab; G_ba), I(G_ab; G_ae, G_be), I(G_ba; G_ae, G_be)) in bits."""
    i_ab = gaussian_mi(model.cov_ab_ba, [0], [1])
    i_ab_eve = gaussian_mi(model.cov_with_eve, [0], [1, 2])
    # Cov([G_ba, G_ae, G_be]) equals cov_with_eve under the model
    return i_ab, i_ab_eve, i_ab_eve


def mi_oracle(model, t_s):
    """[I(G_ab;G_ba) - min of Eve's two informations] / (T_s/2), bits per symbol."""
    i_ab, i_ab_eve, i_ba_eve = mi_terms(model)
    return (i_ab - min(i_ab_eve, i_ba_eve)) / (t_s / 2)
