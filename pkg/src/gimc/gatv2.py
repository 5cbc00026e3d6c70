"""Multi-head GATv2 message passing with exact manual gradients.

Per head, the score of neighbor j for node i is

    f(h_i, h_j) = a . LeakyReLU(W_l h_i + W_r h_j)

(the concatenation form with W = [W_l || W_r] split in two). Attention is a
softmax of f over the neighbor set (self-loop included), the message is the
attention-weighted sum of W_r h_j, and the K head outputs are concatenated
and mapped back to width d by W_o. One parameter set per layer is shared
across all node kinds; heterogeneity enters only through the node inits.
No dropout, residuals, or inter-layer nonlinearity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

LEAKY_SLOPE = 0.2


@dataclass
class GatHeadParams:
    w_l: np.ndarray  # (d', d)
    w_r: np.ndarray  # (d', d)
    a: np.ndarray  # (d',)


@dataclass
class GatLayerParams:
    heads: list[GatHeadParams]
    w_o: np.ndarray  # (d, K * d')
    leaky_slope: float = LEAKY_SLOPE


@dataclass
class GatStack:
    layers: list[GatLayerParams]


def init_stack(layers: int, heads: int, dim: int, rng: np.random.Generator) -> GatStack:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init; d' = dim / heads."""
    if dim % heads != 0:
        raise NumericError(f"dim {dim} not divisible by {heads} heads")
    d_head = dim // heads
    out = []
    for _ in range(layers):
        hs = []
        for _ in range(heads):
            bound = 1.0 / np.sqrt(dim)
            hs.append(
                GatHeadParams(
                    w_l=rng.uniform(-bound, bound, size=(d_head, dim)),
                    w_r=rng.uniform(-bound, bound, size=(d_head, dim)),
                    a=rng.uniform(-1.0 / np.sqrt(d_head), 1.0 / np.sqrt(d_head), size=d_head),
                )
            )
        bound_o = 1.0 / np.sqrt(heads * d_head)
        out.append(GatLayerParams(heads=hs, w_o=rng.uniform(-bound_o, bound_o, size=(dim, heads * d_head))))
    return GatStack(layers=out)


def zeros_like_stack(stack: GatStack) -> GatStack:
    return GatStack(
        layers=[
            GatLayerParams(
                heads=[
                    GatHeadParams(w_l=np.zeros_like(h.w_l), w_r=np.zeros_like(h.w_r), a=np.zeros_like(h.a))
                    for h in layer.heads
                ],
                w_o=np.zeros_like(layer.w_o),
                leaky_slope=layer.leaky_slope,
            )
            for layer in stack.layers
        ]
    )


def stack_tensors(stack: GatStack):
    """Named views of every parameter array, layer and head order stable."""
    for li, layer in enumerate(stack.layers):
        for hi, head in enumerate(layer.heads):
            yield f"gat.{li}.head.{hi}.w_l", head.w_l
            yield f"gat.{li}.head.{hi}.w_r", head.w_r
            yield f"gat.{li}.head.{hi}.a", head.a
        yield f"gat.{li}.w_o", layer.w_o


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, 1.0, slope)


def score(h_i: np.ndarray, h_j: np.ndarray, head: GatHeadParams, slope: float = LEAKY_SLOPE) -> float:
    """Importance of neighbor j's features to node i."""
    return float(head.a @ leaky_relu(head.w_l @ h_i + head.w_r @ h_j, slope))


def attention(
    i: int,
    neighbors: list[int],
    features: np.ndarray,
    head: GatHeadParams,
    slope: float = LEAKY_SLOPE,
) -> np.ndarray:
    """Softmax-normalized scores of `neighbors` for node i; sums to 1."""
    scores = np.array([score(features[i], features[j], head, slope) for j in neighbors])
    scores -= scores.max()
    e = np.exp(scores)
    return e / e.sum()


@dataclass
class EdgeIndex:
    """Flattened (src, dst) arrays over all neighbor lists, with row segments."""

    src: np.ndarray  # (E,)
    dst: np.ndarray  # (E,)
    offsets: np.ndarray  # (N,) start of each node's segment

    @classmethod
    def from_neighbors(cls, neighbors: list[list[int]]) -> "EdgeIndex":
        src, dst, offsets = [], [], []
        for i, ns in enumerate(neighbors):
            offsets.append(len(src))
            src.extend([i] * len(ns))
            dst.extend(ns)
        return cls(
            src=np.array(src, dtype=np.int64),
            dst=np.array(dst, dtype=np.int64),
            offsets=np.array(offsets, dtype=np.int64),
        )

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        return np.add.reduceat(values, self.offsets)

    def segment_max(self, values: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(values, self.offsets)


@dataclass
class HeadCtx:
    l_feat: np.ndarray  # (N, d')
    r_feat: np.ndarray  # (N, d')
    u: np.ndarray  # (E, d') pre-activation W_l h_src + W_r h_dst
    alpha: np.ndarray  # (E,)


@dataclass
class LayerCtx:
    h_in: np.ndarray
    edges: EdgeIndex
    heads: list[HeadCtx] = field(default_factory=list)
    concat: np.ndarray | None = None  # (N, K * d')


def layer_forward(
    edges: EdgeIndex, features: np.ndarray, layer: GatLayerParams
) -> tuple[np.ndarray, LayerCtx]:
    """One attention layer over precomputed neighbor structure."""
    ctx = LayerCtx(h_in=features, edges=edges)
    messages = []
    for head in layer.heads:
        l_feat = features @ head.w_l.T
        r_feat = features @ head.w_r.T
        u = l_feat[edges.src] + r_feat[edges.dst]
        z = leaky_relu(u, layer.leaky_slope)
        s = z @ head.a
        s = s - edges.segment_max(s)[edges.src]
        e = np.exp(s)
        alpha = e / edges.segment_sum(e)[edges.src]
        msg = np.zeros_like(l_feat)
        np.add.at(msg, edges.src, alpha[:, None] * r_feat[edges.dst])
        ctx.heads.append(HeadCtx(l_feat=l_feat, r_feat=r_feat, u=u, alpha=alpha))
        messages.append(msg)
    ctx.concat = np.concatenate(messages, axis=1)
    return ctx.concat @ layer.w_o.T, ctx


def layer_backward(
    ctx: LayerCtx, layer: GatLayerParams, d_out: np.ndarray, d_layer: GatLayerParams
) -> np.ndarray:
    """Exact gradients of layer_forward; returns d(loss)/d(input features)."""
    edges = ctx.edges
    d_layer.w_o += d_out.T @ ctx.concat
    d_concat = d_out @ layer.w_o
    d_in = np.zeros_like(ctx.h_in)
    d_head_width = ctx.heads[0].l_feat.shape[1]
    for k, (head, hctx) in enumerate(zip(layer.heads, ctx.heads)):
        d_msg = d_concat[:, k * d_head_width : (k + 1) * d_head_width]
        r_dst = hctx.r_feat[edges.dst]
        # msg_i = sum_j alpha_ij (W_r h_j)
        d_alpha = np.einsum("ed,ed->e", d_msg[edges.src], r_dst)
        d_r = np.zeros_like(hctx.r_feat)
        np.add.at(d_r, edges.dst, hctx.alpha[:, None] * d_msg[edges.src])
        # softmax over each node's neighbor segment
        weighted = edges.segment_sum(hctx.alpha * d_alpha)
        d_s = hctx.alpha * (d_alpha - weighted[edges.src])
        z = leaky_relu(hctx.u, layer.leaky_slope)
        d_layer.heads[k].a += z.T @ d_s
        d_u = d_s[:, None] * head.a[None, :] * leaky_relu_grad(hctx.u, layer.leaky_slope)
        d_l = np.zeros_like(hctx.l_feat)
        np.add.at(d_l, edges.src, d_u)
        np.add.at(d_r, edges.dst, d_u)
        d_layer.heads[k].w_l += d_l.T @ ctx.h_in
        d_layer.heads[k].w_r += d_r.T @ ctx.h_in
        d_in += d_l @ head.w_l + d_r @ head.w_r
    return d_in


def stack_forward(
    neighbors: list[list[int]], features: np.ndarray, stack: GatStack
) -> tuple[np.ndarray, list[LayerCtx]]:
    """Sequential layers; contexts retained for backward."""
    edges = EdgeIndex.from_neighbors(neighbors)
    ctxs = []
    h = features
    for layer in stack.layers:
        h, ctx = layer_forward(edges, h, layer)
        ctxs.append(ctx)
    return h, ctxs


def stack_backward(
    ctxs: list[LayerCtx], stack: GatStack, d_final: np.ndarray, d_stack: GatStack
) -> np.ndarray:
    if len(ctxs) != len(stack.layers):
        raise NumericError("forward intermediates missing for backward")
    d = d_final
    for ctx, layer, d_layer in zip(reversed(ctxs), reversed(stack.layers), reversed(d_stack.layers)):
        d = layer_backward(ctx, layer, d, d_layer)
    return d
