"""Hot numeric kernels for the world model.

Each kernel is written in njit-compatible numpy and compiled with numba by
default. Setting the environment variable FOLDPLAN_DISABLE_NUMBA=1 selects
the pure-numpy fallback (the exact same source, undecorated). The
uncompiled references are kept as `*_numpy` so benchmarks can compare both
backends in one process.
"""

from __future__ import annotations

import os

import numpy as np

ALPHA_SCALE = np.pi   # delta-alpha head is in units of alpha / pi
_EPS = 1e-12


def forward(X, W1, b1, Wd, bd, wm, bm, wv, bv):
    """Per-edge two-layer map: tanh hidden, linear delta head, sigmoid masks.

    X is (N_e, 2F): own features concatenated with the 1-ring mean.
    Returns (delta (N_e, 2), mask (N_e,), violation (N_e,)).
    """
    hid = np.tanh(X @ W1 + b1)
    delta = hid @ Wd + bd
    m = 1.0 / (1.0 + np.exp(-(hid @ wm + bm)))
    c = 1.0 / (1.0 + np.exp(-(hid @ wv + bv)))
    return delta, m, c


def loss_grad(X, tgt_d, tgt_m, tgt_c, W1, b1, Wd, bd, wm, bm, wv, bv,
              gW1, gb1, gWd, gbd, gwm, gbm, gwv, gbv):
    """Loss and analytic gradient for one transition record.

    Loss = MSE(masked residual, true residual)
         + BCE(mask head, kernel affected mask)
         + BCE(violation head, invalid-transition edge labels),
    each averaged over edges. Gradients are accumulated into the g* arrays
    (gbm / gbv are length-1 arrays standing in for scalars).
    """
    ne = X.shape[0]
    hid = np.tanh(X @ W1 + b1)
    delta = hid @ Wd + bd
    mlog = hid @ wm + bm
    clog = hid @ wv + bv
    m = 1.0 / (1.0 + np.exp(-mlog))
    c = 1.0 / (1.0 + np.exp(-clog))

    pred0 = delta[:, 0] * ALPHA_SCALE * m
    pred1 = delta[:, 1] * m
    r0 = pred0 - tgt_d[:, 0]
    r1 = pred1 - tgt_d[:, 1]
    l_mse = (np.sum(r0 * r0) + np.sum(r1 * r1)) / (2.0 * ne)

    mc = np.minimum(np.maximum(m, _EPS), 1.0 - _EPS)
    cc = np.minimum(np.maximum(c, _EPS), 1.0 - _EPS)
    l_m = -np.sum(tgt_m * np.log(mc) + (1.0 - tgt_m) * np.log(1.0 - mc)) / ne
    l_c = -np.sum(tgt_c * np.log(cc) + (1.0 - tgt_c) * np.log(1.0 - cc)) / ne

    gpred0 = r0 / ne
    gpred1 = r1 / ne
    gdelta = np.empty((ne, 2))
    gdelta[:, 0] = gpred0 * ALPHA_SCALE * m
    gdelta[:, 1] = gpred1 * m
    gm_mse = gpred0 * delta[:, 0] * ALPHA_SCALE + gpred1 * delta[:, 1]
    gmlog = gm_mse * m * (1.0 - m) + (m - tgt_m) / ne
    gclog = (c - tgt_c) / ne

    gWd += hid.T @ gdelta
    gbd += np.sum(gdelta, axis=0)
    gwm += hid.T @ gmlog
    gbm[0] += np.sum(gmlog)
    gwv += hid.T @ gclog
    gbv[0] += np.sum(gclog)
    ghid = gdelta @ Wd.T + np.outer(gmlog, wm) + np.outer(gclog, wv)
    ghpre = ghid * (1.0 - hid * hid)
    gW1 += X.T @ ghpre
    gb1 += np.sum(ghpre, axis=0)
    return l_mse + l_m + l_c


# keep the pure-numpy implementations addressable for benchmarking
forward_numpy = forward
loss_grad_numpy = loss_grad

_DISABLED = os.environ.get("FOLDPLAN_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")
USING_NUMBA = False
if not _DISABLED:
    try:
        from numba import njit

        forward = njit(cache=True)(forward_numpy)
        loss_grad = njit(cache=True)(loss_grad_numpy)
        USING_NUMBA = True
    except ImportError:
        pass
