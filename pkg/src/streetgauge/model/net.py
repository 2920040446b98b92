"""Forward pass, masked MSE loss, and hand-derived reverse-mode gradients.

Pipeline per sequence of S pixel features (S x 12):

    embed -> layer norm -> multi-head self-attention (scaled dot product,
    residual around the attention block) -> per-pixel FC+ReLU stack ->
    mean pool over S -> pooled FC+ReLU stack -> linear head -> 28 outputs

All math is float64.  Softmax subtracts the row max before exponentiation.
The backward pass mirrors the forward step by step and is checked against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from streetgauge.model.params import ModelParams
from streetgauge.scores import N_OUTPUTS
from streetgauge.segmentation import N_FEATURES

LN_EPS = 1e-5


@dataclass
class ForwardCache:
    """Intermediates needed by the backward pass for one sequence."""

    x: np.ndarray
    h0: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    normed: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    attn_weights: np.ndarray  # (heads, S, S)
    context: np.ndarray  # (S, d) concatenated heads
    pixel_inputs: list[np.ndarray]
    pixel_pre: list[np.ndarray]
    pooled: np.ndarray
    pooled_inputs: list[np.ndarray]
    pooled_pre: list[np.ndarray]
    final_hidden: np.ndarray
    output: np.ndarray


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(m: np.ndarray, n_heads: int) -> np.ndarray:
    s, d = m.shape
    return m.reshape(s, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(m: np.ndarray) -> np.ndarray:
    n_heads, s, dh = m.shape
    return m.transpose(1, 0, 2).reshape(s, n_heads * dh)


def forward(params: ModelParams, rows: np.ndarray, want_cache: bool = False):
    """Run one sequence through the network.

    Returns the 28-vector, or (vector, cache) when want_cache is set.
    """
    cfg = params.config
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != N_FEATURES:
        raise ValueError(f"expected Sx{N_FEATURES} rows, got {x.shape}")
    if x.shape[0] < 1:
        raise ValueError("sequence must have at least one row")

    h0 = x @ params["embed_w"] + params["embed_b"]

    mu = h0.mean(axis=1, keepdims=True)
    centered = h0 - mu
    var = (centered**2).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = centered * inv_std
    normed = xhat * params["ln_gain"] + params["ln_bias"]

    q = normed @ params["attn_wq"] + params["attn_bq"]
    k = normed @ params["attn_wk"] + params["attn_bk"]
    v = normed @ params["attn_wv"] + params["attn_bv"]
    qh = _split_heads(q, cfg.n_heads)
    kh = _split_heads(k, cfg.n_heads)
    vh = _split_heads(v, cfg.n_heads)
    scale = 1.0 / np.sqrt(cfg.head_dim)
    attn_weights = _softmax_rows(qh @ kh.transpose(0, 2, 1) * scale)
    context = _merge_heads(attn_weights @ vh)
    h1 = h0 + context @ params["attn_wo"] + params["attn_bo"]

    pixel_inputs, pixel_pre = [], []
    act = h1
    for i in range(cfg.n_pixel_layers):
        pixel_inputs.append(act)
        pre = act @ params[f"pixel_fc{i}_w"] + params[f"pixel_fc{i}_b"]
        pixel_pre.append(pre)
        act = np.maximum(pre, 0.0)

    pooled = act.mean(axis=0)

    pooled_inputs, pooled_pre = [], []
    vec = pooled
    for i in range(cfg.n_pooled_layers):
        pooled_inputs.append(vec)
        pre = vec @ params[f"pooled_fc{i}_w"] + params[f"pooled_fc{i}_b"]
        pooled_pre.append(pre)
        vec = np.maximum(pre, 0.0)

    output = vec @ params["head_w"] + params["head_b"]

    if not want_cache:
        return output
    cache = ForwardCache(
        x=x,
        h0=h0,
        xhat=xhat,
        inv_std=inv_std,
        normed=normed,
        q=q,
        k=k,
        v=v,
        attn_weights=attn_weights,
        context=context,
        pixel_inputs=pixel_inputs,
        pixel_pre=pixel_pre,
        pooled=pooled,
        pooled_inputs=pooled_inputs,
        pooled_pre=pooled_pre,
        final_hidden=vec,
        output=output,
    )
    return output, cache


def loss_mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean squared error over unmasked entries."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {pred.shape}")
    n = int(mask.sum())
    if n == 0:
        raise ValueError("all entries masked; loss undefined")
    diff = (pred - target)[mask]
    return float((diff**2).sum() / n)


def _backward_sequence(
    params: ModelParams, cache: ForwardCache, d_out: np.ndarray, grads: dict[str, np.ndarray]
) -> None:
    """Accumulate parameter gradients for one sequence given d loss/d output."""
    cfg = params.config
    s = cache.x.shape[0]

    grads["head_w"] += np.outer(cache.final_hidden, d_out)
    grads["head_b"] += d_out
    d_vec = params["head_w"] @ d_out

    for i in reversed(range(cfg.n_pooled_layers)):
        d_pre = d_vec * (cache.pooled_pre[i] > 0.0)
        grads[f"pooled_fc{i}_w"] += np.outer(cache.pooled_inputs[i], d_pre)
        grads[f"pooled_fc{i}_b"] += d_pre
        d_vec = params[f"pooled_fc{i}_w"] @ d_pre

    # mean pooling spreads the gradient uniformly over rows
    d_act = np.tile(d_vec / s, (s, 1))

    for i in reversed(range(cfg.n_pixel_layers)):
        d_pre = d_act * (cache.pixel_pre[i] > 0.0)
        grads[f"pixel_fc{i}_w"] += cache.pixel_inputs[i].T @ d_pre
        grads[f"pixel_fc{i}_b"] += d_pre.sum(axis=0)
        d_act = d_pre @ params[f"pixel_fc{i}_w"].T

    d_h1 = d_act
    d_h0 = d_h1.copy()  # residual branch

    grads["attn_wo"] += cache.context.T @ d_h1
    grads["attn_bo"] += d_h1.sum(axis=0)
    d_context = d_h1 @ params["attn_wo"].T

    d_ctx_h = _split_heads(d_context, cfg.n_heads)
    vh = _split_heads(cache.v, cfg.n_heads)
    qh = _split_heads(cache.q, cfg.n_heads)
    kh = _split_heads(cache.k, cfg.n_heads)
    a = cache.attn_weights

    d_a = d_ctx_h @ vh.transpose(0, 2, 1)
    d_vh = a.transpose(0, 2, 1) @ d_ctx_h
    # softmax jacobian, rowwise
    d_scores = (d_a - (d_a * a).sum(axis=-1, keepdims=True)) * a
    scale = 1.0 / np.sqrt(cfg.head_dim)
    d_qh = d_scores @ kh * scale
    d_kh = d_scores.transpose(0, 2, 1) @ qh * scale

    d_q = _merge_heads(d_qh)
    d_k = _merge_heads(d_kh)
    d_v = _merge_heads(d_vh)

    normed = cache.normed
    grads["attn_wq"] += normed.T @ d_q
    grads["attn_bq"] += d_q.sum(axis=0)
    grads["attn_wk"] += normed.T @ d_k
    grads["attn_bk"] += d_k.sum(axis=0)
    grads["attn_wv"] += normed.T @ d_v
    grads["attn_bv"] += d_v.sum(axis=0)
    d_normed = d_q @ params["attn_wq"].T + d_k @ params["attn_wk"].T + d_v @ params["attn_wv"].T

    grads["ln_gain"] += (d_normed * cache.xhat).sum(axis=0)
    grads["ln_bias"] += d_normed.sum(axis=0)
    d_xhat = d_normed * params["ln_gain"]
    # standard layer-norm backward over the feature axis
    d_h0 += cache.inv_std * (
        d_xhat
        - d_xhat.mean(axis=1, keepdims=True)
        - cache.xhat * (d_xhat * cache.xhat).mean(axis=1, keepdims=True)
    )

    grads["embed_w"] += cache.x.T @ d_h0
    grads["embed_b"] += d_h0.sum(axis=0)


def gradients(
    params: ModelParams,
    batch: list[tuple[np.ndarray, np.ndarray, np.ndarray | None]],
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean masked-MSE loss and its exact gradients over a batch.

    Each batch item is (rows, target_28, mask_28-or-None).  The loss is the
    mean over items of the per-item masked MSE.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    grads = {name: np.zeros_like(arr) for name, arr in params.arrays.items()}
    total_loss = 0.0
    n_items = len(batch)
    for rows, target, mask in batch:
        target = np.asarray(target, dtype=np.float64)
        m = np.ones(N_OUTPUTS, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        pred, cache = forward(params, rows, want_cache=True)
        total_loss += loss_mse(pred, target, m)
        n_unmasked = int(m.sum())
        d_out = np.where(m, 2.0 * (pred - target), 0.0) / (n_unmasked * n_items)
        _backward_sequence(params, cache, d_out, grads)
    return total_loss / n_items, grads
