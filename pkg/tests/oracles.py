"""Shared independent oracles used by the sampler and acceptance tests.

Kept free of any dependence on the code paths they check: the Gaussian
posterior comes from assembling and solving the quadratic form's normal
equations directly, and the reference sweep recomputes every one-step
image from scratch at every site.
"""

import math

import numpy as np


def gaussian_posterior(gamma, n_nodes, obs_step, y, r_m, r_f):
    """Exact posterior for the linear contraction model f(x) = gamma*x.

    The action is quadratic in the path nodes, so exp(-A) is Gaussian
    with precision matrix P and mean P^{-1} b assembled term by term.
    Returns (mean, covariance) over the n_nodes path coordinates.
    """
    P = np.zeros((n_nodes, n_nodes))
    b = np.zeros(n_nodes)
    for n in range(n_nodes - 1):
        P[n, n] += r_f * gamma * gamma
        P[n + 1, n + 1] += r_f
        P[n, n + 1] -= r_f * gamma
        P[n + 1, n] -= r_f * gamma
    P[obs_step, obs_step] += r_m
    b[obs_step] += r_m * y
    cov = np.linalg.inv(P)
    return cov @ b, cov


def reference_sweep(
    states,
    params,
    dt,
    r_f,
    r_m,
    step_row,
    comp_col,
    values,
    state_step,
    param_steps,
    normals,
    uniforms,
    step_into,
):
    """One uncached Metropolis sweep, mutating states/params in place.

    Mirrors the production kernel's visit order and arithmetic exactly but
    recomputes f(x(n-1)) and f(x(n)) afresh at every site instead of
    caching them across a row. Used to verify the cached kernel makes
    bit-identical decisions. ``normals`` and ``uniforms`` are flat arrays
    with one entry per site.
    """
    n_rows, d = states.shape
    n_p = params.size
    n_trans = n_rows - 1
    fprev = np.empty(d)
    fcur = np.empty(d)
    fprop = np.empty(d)
    fold = np.empty(d)
    w1, w2, w3 = np.empty(d), np.empty(d), np.empty(d)
    idx = 0
    accepted = 0
    for n in range(n_rows):
        row = step_row[n]
        for a in range(d):
            old = states[n, a]
            new = old + state_step * normals[idx]
            delta = 0.0
            if row >= 0:
                col = comp_col[a]
                if col >= 0:
                    yv = values[row, col]
                    delta += 0.5 * r_m * ((yv - new) ** 2 - (yv - old) ** 2)
            if r_f > 0.0:
                if n > 0:
                    step_into(states[n - 1], params, dt, fprev, w1, w2, w3)
                    fa = fprev[a]
                    delta += 0.5 * r_f * ((new - fa) ** 2 - (old - fa) ** 2)
                if n < n_trans:
                    step_into(states[n], params, dt, fcur, w1, w2, w3)
                    dot_cur = 0.0
                    for b in range(d):
                        r = states[n + 1, b] - fcur[b]
                        dot_cur += r * r
                    states[n, a] = new
                    step_into(states[n], params, dt, fprop, w1, w2, w3)
                    states[n, a] = old
                    dot_new = 0.0
                    for b in range(d):
                        r = states[n + 1, b] - fprop[b]
                        dot_new += r * r
                    delta += 0.5 * r_f * (dot_new - dot_cur)
            if delta <= 0.0 or uniforms[idx] < math.exp(-delta):
                states[n, a] = new
                accepted += 1
            idx += 1
    for j in range(n_p):
        old = params[j]
        new = old + param_steps[j] * normals[idx]
        delta = 0.0
        if r_f > 0.0 and new != old:
            pprop = params.copy()
            pprop[j] = new
            for n in range(n_trans):
                step_into(states[n], params, dt, fold, w1, w2, w3)
                step_into(states[n], pprop, dt, fprop, w1, w2, w3)
                dot_new = 0.0
                dot_old = 0.0
                for b in range(d):
                    rn = states[n + 1, b] - fprop[b]
                    dot_new += rn * rn
                    ro = states[n + 1, b] - fold[b]
                    dot_old += ro * ro
                delta += 0.5 * r_f * (dot_new - dot_old)
        if delta <= 0.0 or uniforms[idx] < math.exp(-delta):
            params[j] = new
            accepted += 1
        idx += 1
    return accepted
