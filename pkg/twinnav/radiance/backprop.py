"""
Reverse-mode gradients of the photometric loss through compositing and the MLP.

Loss is the mean over rays and channels of (rendered - target)^2. The backward
pass mirrors `field.forward` layer by layer:

* compositing: dC/dtau_i = T_{i+1} c_i - (C - S_i), with S_i the inclusive
  running sum of w_k c_k and C including the background term;
* density: sigma = softplus(s) so ds = dsigma * sigmoid(s), masked outside bounds;
* color: sigmoid output, ReLU hidden layers, split back into trunk feature and
  direction encoding;
* trunk: ReLU layers.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from scipy.special import expit

from twinnav.radiance.field import forward
from twinnav.radiance.render import (
    chunk_slices,
    composite,
    ray_samples,
    sample_deltas,
    sample_distances,
)


def _linear_backward(g_a, h_in, W):
    return g_a.T @ h_in, g_a.sum(axis=0), g_a @ W.astype(g_a.dtype, copy=False)


def _chunk_gradient(params, origins, dirs, targets, t, cfg, scale, dtype):
    """Sum of squared errors and the (scaled) gradient arrays for one chunk of rays."""
    n, D = t.shape
    points, sample_dirs = ray_samples(origins, dirs, t)
    rgb, sigma, cache = forward(params, points, sample_dirs, dtype)
    # compositing stays in float64 whatever the layer precision
    rgb = rgb.astype(np.float64).reshape(n, D, 3)
    sigma = sigma.astype(np.float64)
    color, _, weights, _ = composite(rgb, sigma.reshape(n, D), t, cfg)

    err = color - targets
    g_color = 2.0 * scale * err

    # compositing
    tau_cum = np.cumsum(sigma.reshape(n, D) * sample_deltas(t, cfg.far), axis=1)
    t_next = np.exp(-tau_cum)
    running = np.cumsum(weights[..., None] * rgb, axis=1)
    dC_dtau = t_next[..., None] * rgb - (color[:, None, :] - running)
    g_tau = np.einsum("bc,bdc->bd", g_color, dC_dtau)
    g_sigma = ((g_tau * sample_deltas(t, cfg.far)).ravel() * cache["inside"]).astype(dtype)
    g_rgb = (weights[..., None] * g_color[:, None, :]).reshape(-1, 3).astype(dtype)

    # color head
    color_grads = []
    n_color = len(params.color)
    g_z = None
    for i in reversed(range(n_color)):
        z_in, a = cache["color"][i]
        W, _ = params.color[i]
        if i == n_color - 1:
            c = expit(a)
            g_a = g_rgb * c * (1.0 - c)
        else:
            g_a = g_z * (a > 0)
        gW, gb, g_z = _linear_backward(g_a, z_in, W)
        color_grads.append((gW, gb))
    color_grads.reverse()
    n_feature = cache["feature"].shape[1]
    g_h = g_z[:, :n_feature]

    # density head
    W, _ = params.density
    g_s = (g_sigma * expit(cache["raw_sigma"]))[:, None]
    gW, gb, g_feat = _linear_backward(g_s, cache["feature"], W)
    density_grad = (gW, gb)
    g_h = g_h + g_feat

    # trunk
    trunk_grads = []
    for i in reversed(range(len(params.trunk))):
        h_in, a = cache["trunk"][i]
        W, _ = params.trunk[i]
        g_a = g_h * (a > 0)
        gW, gb, g_h = _linear_backward(g_a, h_in, W)
        trunk_grads.append((gW, gb))
    trunk_grads.reverse()

    arrays = [a for layer in trunk_grads + [density_grad] + color_grads for a in layer]
    return float(np.sum(err ** 2)), arrays


def batch_gradient(
    params,
    origins,
    dirs,
    targets,
    cfg,
    rng=None,
    threads=1,
    deterministic=True,
    dtype=np.float64,
    chunk_size=None,
):
    """
    Loss and gradient for ray arrays (B, 3), split into fixed-size chunks.

    Chunk contributions are summed in chunk order when `deterministic`, in
    completion order otherwise. The MLP runs in `dtype`; gradients come back
    as float64 parameters.
    """
    origins = np.atleast_2d(np.asarray(origins, np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, np.float64))
    targets = np.atleast_2d(np.asarray(targets, np.float64))
    n = len(origins)
    if n == 0:
        raise ValueError("batch must not be empty")
    t = sample_distances(cfg, n, rng)
    scale = 1.0 / (3 * n)
    slices = chunk_slices(n) if chunk_size is None else chunk_slices(n, chunk_size)

    def work(sl):
        return _chunk_gradient(
            params, origins[sl], dirs[sl], targets[sl], t[sl], cfg, scale, dtype
        )

    if len(slices) == 1:
        parts = [work(slices[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(work, sl) for sl in slices]
            if deterministic:
                parts = [f.result() for f in futures]
            else:
                parts = [f.result() for f in as_completed(futures)]

    sse, arrays = parts[0]
    arrays = [a.copy() for a in arrays]
    for part_sse, part_arrays in parts[1:]:
        sse += part_sse
        for total, a in zip(arrays, part_arrays):
            total += a
    return sse * scale, params.with_arrays(arrays)


def loss_and_gradient(params, batch, cfg, threads=1):
    """
    Mean squared photometric error of a batch of (Ray, target color) pairs and
    its gradient with respect to every weight and bias, as `FieldParameters`.
    """
    if not batch:
        raise ValueError("batch must not be empty")
    origins = np.array([ray.origin for ray, _ in batch])
    dirs = np.array([ray.direction for ray, _ in batch])
    targets = np.array([target for _, target in batch], dtype=np.float64)
    return batch_gradient(params, origins, dirs, targets, cfg, threads=threads)


__all__ = ["batch_gradient", "loss_and_gradient"]
