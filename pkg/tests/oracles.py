"""Independent reference implementations used to check the package.

Everything here is deliberately brute force and shares no code with the
package internals: direct summation, dense per-sample recursions, and
explicit weighted least squares.  Slow but obviously correct.
"""

import math

import numpy as np

from erlangreg import DesignSpec, WeightSpec, build_realization

# Hand-checked impulse-to-weight transform for a 6-stage cascade: row k gives
# the combination of state impulse responses that reproduces the weight
# m**k p**m.  Each entry was verified by symbolic expansion of the binomial
# identity sum_j T[k, j] * C(m + j, j) = m**k.
WEIGHT_TRANSFORM_6 = np.array(
    [
        [1, 0, 0, 0, 0, 0],
        [-1, 1, 0, 0, 0, 0],
        [1, -3, 2, 0, 0, 0],
        [-1, 7, -12, 6, 0, 0],
        [1, -15, 50, -60, 24, 0],
        [-1, 31, -180, 390, -360, 120],
    ],
    dtype=float,
)


def brute_sum(k: int, p: float) -> float:
    """Direct summation of p**m * m**k until the tail is negligible."""
    lam = -1.0 / math.log(p)
    horizon = int(max(200.0 * (k + 1) * lam, 4000.0))
    m = np.arange(horizon, dtype=float)
    return float(np.sum(p**m * m**k))


def dense_states(p: float, order: int, xs) -> np.ndarray:
    """Scalar leaky-integrator chain, one stage feeding the next.

    Stage 0 filters the input, stage k filters stage k-1's fresh output:
    w_k[n] = p w_k[n-1] + w_{k-1}[n].  Returns (order, len(xs)) states.
    """
    xs = np.asarray(xs, dtype=float)
    w = np.zeros(order)
    out = np.empty((order, xs.size))
    for n, x in enumerate(xs):
        feed = x
        for k in range(order):
            w[k] = p * w[k] + feed
            feed = w[k]
        out[:, n] = w
    return out


def batch_wls(xs, kappa: int, p: float, model_order: int, n_outputs: int,
              q: float, ts: float = 1.0) -> np.ndarray:
    """Explicit weighted least squares at the newest sample of xs.

    Fits x[N-1-m] against powers of the age m under the weight m**kappa p**m,
    then differentiates and evaluates the fitted polynomial at age q.
    Truncation at the record length is the only difference from the
    recursive estimator, and it is far below 1e-6 for p <= 0.9 and N >= 400.
    """
    xs = np.asarray(xs, dtype=float)
    ages = np.arange(xs.size, dtype=float)
    weights = ages**kappa * p**ages
    basis = np.vander(ages, model_order, increasing=True)
    sw = np.sqrt(weights)
    alpha, *_ = np.linalg.lstsq(basis * sw[:, None], xs[::-1] * sw, rcond=None)
    out = np.empty(n_outputs)
    for k_t in range(n_outputs):
        total = 0.0
        for k_x in range(k_t, model_order):
            total += math.perm(k_x, k_t) * q ** (k_x - k_t) * alpha[k_x]
        out[k_t] = (-1.0 / ts) ** k_t * total
    return out


def batch_wls_variance(xs, kappa: int, p: float, model_order: int) -> float:
    """Noise-variance estimate from the same explicit fit.

    Weighted residual power divided by the effective residual mass (total
    weight mass minus the trace of the fit's weighted leverage).
    """
    xs = np.asarray(xs, dtype=float)
    ages = np.arange(xs.size, dtype=float)
    weights = ages**kappa * p**ages
    basis = np.vander(ages, model_order, increasing=True)
    sw = np.sqrt(weights)
    a = basis * sw[:, None]
    y = xs[::-1] * sw
    alpha, *_ = np.linalg.lstsq(a, y, rcond=None)
    residual = y - a @ alpha
    gram = a.T @ a
    hat_trace = float(np.trace(np.linalg.solve(gram, a.T @ (a * weights[:, None]))))
    mass = float(weights.sum())
    return float(residual @ residual) / (mass - hat_trace)


def closed_sigma_omega(kappa: int, p: float, ts: float = 1.0) -> float:
    """Frequency spread of the weight magnitude, closed form for kappa > 2."""
    lam = -1.0 / math.log(p)
    return 1.0 / (lam * ts * math.sqrt(kappa - 2))


def build(kappa, p, kx, kt=1, q=None, ts=1.0):
    """Shorthand realization builder for tests."""
    return build_realization(
        DesignSpec(
            weight=WeightSpec(kappa=kappa, p=p),
            model_order=kx,
            n_outputs=kt,
            delay=q,
            sample_period=ts,
        )
    )
