"""Independent test oracles: brute-force enumeration and fixture builders.

Everything here stays deliberately naive (itertools loops, explicit
formulas) so it cannot share a bug with the library's vectorized paths.
"""

import itertools
import math

import numpy as np

from dronenet.designer import LossInputs, dispatch_weights


def make_saa_fixture(p=6, n=12, K=1, seed=0, lam=5.0, spread=1.0):
    """Random (LossInputs, scores): moderate coverage values, varied priors."""
    rng = np.random.default_rng(seed)
    A = rng.beta(1.6, 2.4, size=(K, n, p))
    W = dispatch_weights(A, lam)
    E = rng.uniform(0.5, 1.5, size=(K, n))
    E /= E.sum(axis=1, keepdims=True)
    scores = rng.normal(-0.6, spread, size=p)
    return LossInputs(A=A, W=W, E=E), scores


def brute_force_loss(x, inputs: LossInputs, eta, a=2.0, b=15.0) -> float:
    """Loss via explicit loops (the formula, transliterated)."""
    A, W, E = inputs.A, inputs.W, inputs.E
    K, n, p = A.shape
    total = 0.0
    for k in range(K):
        u1 = 0.0
        for i in range(n):
            prod = 1.0
            for j in range(p):
                if x[j]:
                    prod *= 1.0 - A[k, i, j]
            P = 1.0 - prod
            phi = -a * math.log(1.0 + math.exp(-b * (P - 0.5)))
            u1 += E[k, i] * phi
        u2 = 0.0
        for i in range(n):
            for j in range(p):
                if x[j]:
                    u2 += W[k, i, j] * A[k, i, j]
        total += u1 + (eta / n) * u2
    return -total / K


def enumerate_posterior(inputs: LossInputs, scores, beta, eta, a=2.0, b=15.0):
    """Exact Gibbs posterior over all 2^p states (log-space normalization)."""
    p = inputs.A.shape[2]
    states = list(itertools.product((0, 1), repeat=p))
    log_w = np.empty(len(states))
    for idx, x in enumerate(states):
        loss = brute_force_loss(x, inputs, eta, a, b)
        log_prior = sum(scores[j] for j in range(p) if x[j])
        log_w[idx] = -beta * loss + log_prior
    log_w -= log_w.max()
    w = np.exp(log_w)
    return states, w / w.sum()


def empirical_state_distribution(states_matrix, burn_in=0.2):
    """State -> frequency over the post-burn-in iterates."""
    start = int(burn_in * states_matrix.shape[0])
    kept = states_matrix[start:]
    counts = {}
    for row in kept:
        key = tuple(int(v) for v in row)
        counts[key] = counts.get(key, 0) + 1
    total = kept.shape[0]
    return {k: v / total for k, v in counts.items()}


def tv_distance(probs_by_state, empirical):
    keys = set(probs_by_state) | set(empirical)
    return 0.5 * sum(abs(probs_by_state.get(k, 0.0) - empirical.get(k, 0.0))
                     for k in keys)
