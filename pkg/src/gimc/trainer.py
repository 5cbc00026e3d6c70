"""Pair classifier, total objective, AdamW with linear decay, and the
one-document-per-step training loop.

The classifier consumes the post-graph pair node and statement node:
p = softmax(W_p [v_pair || h_stmt]). The total objective sums the
classification cross entropy with the three contrastive terms; every
gradient is computed analytically and checked against finite differences.
All arithmetic is 64-bit.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contrastive import (
    AnchorSet,
    ContrastiveConfig,
    contrastive_loss,
    generate_positives,
    select_negatives,
)
from .corpus import CandidatePair, Document, candidate_pairs
from .encoder import (
    EmbeddingCache,
    EncoderConfig,
    EncoderGradAccumulator,
    Statement,
    encode,
    stable_hash64,
    statement_vectors,
)
from .errors import NumericError
from .gatv2 import GatStack, init_stack, stack_backward, stack_forward, stack_tensors, zeros_like_stack
from .graph import HeteroGraph, build_topology, init_backward, init_features
from .phrases import RETAINED_RELATIONS, InformativePhrase, document_phrases

log = logging.getLogger("gimc.trainer")


@dataclass
class TrainConfig:
    lr0: float = 1e-3
    epochs: int = 60
    layers: int = 3
    heads: int = 4
    dim: int = 32
    dim_in: int = 32
    hash_buckets: int = 512
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    w_classify: float = 1.0
    w_statement: float = 1.0
    w_aspect_event: float = 1.0
    w_aspect_context: float = 1.0
    use_contrastive: bool = True
    classifier_statement: str = "post_graph"  # or "pre_graph"
    grad_clip: float = 0.0  # 0 disables
    encoder_mode: str = "toy"
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            mode=self.encoder_mode,
            dim_in=self.dim_in,
            dim=self.dim,
            hash_buckets=self.hash_buckets,
            seed=self.seed,
        )


@dataclass
class ModelParams:
    embed: np.ndarray  # (hash_buckets, dim_in)
    proj: np.ndarray  # (dim, dim_in)
    role_table: np.ndarray  # (19, dim)
    w_v: np.ndarray  # (dim, 2*dim)
    stack: GatStack
    w_p: np.ndarray  # (2, 2*dim)

    def named_tensors(self):
        yield "embed", self.embed
        yield "proj", self.proj
        yield "role_table", self.role_table
        yield "w_v", self.w_v
        yield from stack_tensors(self.stack)
        yield "w_p", self.w_p


def init_params(config: TrainConfig, rng: np.random.Generator) -> ModelParams:
    """Uniform(+-1/sqrt(fan_in)) matrices; normal(0, 0.02) embedding tables."""
    dim, dim_in = config.dim, config.dim_in
    return ModelParams(
        embed=rng.normal(0.0, 0.02, size=(config.hash_buckets, dim_in)),
        proj=rng.uniform(-1, 1, size=(dim, dim_in)) / np.sqrt(dim_in),
        role_table=rng.normal(0.0, 0.02, size=(len(RETAINED_RELATIONS), dim)),
        w_v=rng.uniform(-1, 1, size=(dim, 2 * dim)) / np.sqrt(2 * dim),
        stack=init_stack(config.layers, config.heads, dim, rng),
        w_p=rng.uniform(-1, 1, size=(2, 2 * dim)) / np.sqrt(2 * dim),
    )


def zeros_like_params(params: ModelParams) -> ModelParams:
    return ModelParams(
        embed=np.zeros_like(params.embed),
        proj=np.zeros_like(params.proj),
        role_table=np.zeros_like(params.role_table),
        w_v=np.zeros_like(params.w_v),
        stack=zeros_like_stack(params.stack),
        w_p=np.zeros_like(params.w_p),
    )


# ---------------------------------------------------------------------------
# Checkpoints ("GIMC" binary format)
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"GIMC"
CHECKPOINT_VERSION = 1


def save_checkpoint(params: ModelParams, path: Path | str) -> None:
    parts = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    for name, tensor in params.named_tensors():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(np.asarray(tensor, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: Path | str) -> ModelParams:
    from .errors import DataError

    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{Path(path).name}: bad checkpoint magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    offset = 8
    tensors: dict[str, np.ndarray] = {}
    while offset < len(raw):
        (name_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}I", raw, offset)
        offset += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(dims).copy()
        offset += 8 * count

    layer_ids = sorted({int(n.split(".")[1]) for n in tensors if n.startswith("gat.")})
    from .gatv2 import GatHeadParams, GatLayerParams

    layers = []
    for li in layer_ids:
        head_ids = sorted(
            {int(n.split(".")[3]) for n in tensors if n.startswith(f"gat.{li}.head.")}
        )
        heads = [
            GatHeadParams(
                w_l=tensors[f"gat.{li}.head.{hi}.w_l"],
                w_r=tensors[f"gat.{li}.head.{hi}.w_r"],
                a=tensors[f"gat.{li}.head.{hi}.a"],
            )
            for hi in head_ids
        ]
        layers.append(GatLayerParams(heads=heads, w_o=tensors[f"gat.{li}.w_o"]))
    return ModelParams(
        embed=tensors["embed"],
        proj=tensors["proj"],
        role_table=tensors["role_table"],
        w_v=tensors["w_v"],
        stack=GatStack(layers=layers),
        w_p=tensors["w_p"],
    )


def config_from_params(params: ModelParams, encoder_mode: str = "toy", **overrides) -> TrainConfig:
    """Recover the structural configuration implied by checkpoint shapes."""
    dim, dim_in = params.proj.shape
    return TrainConfig(
        dim=dim,
        dim_in=dim_in,
        hash_buckets=params.embed.shape[0],
        layers=len(params.stack.layers),
        heads=len(params.stack.layers[0].heads) if params.stack.layers else 0,
        encoder_mode=encoder_mode,
        **overrides,
    )


# ---------------------------------------------------------------------------
# Classifier
# ---------------------------------------------------------------------------


def predict_pair(v_pair: np.ndarray, h_stmt: np.ndarray, w_p: np.ndarray) -> np.ndarray:
    """(causal, none) probabilities from the concatenated pair and statement nodes."""
    logits = w_p @ np.concatenate([v_pair, h_stmt])
    logits = logits - logits.max()
    e = np.exp(logits)
    return e / e.sum()


def classification_loss(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Summed cross entropy over pairs; log clamped at 1e-12.

    probs and labels are (n_pairs, 2); returns the loss and d(loss)/d(probs).
    """
    if len(probs) == 0:
        return 0.0, np.zeros_like(probs)
    clamped = np.maximum(probs, 1e-12)
    loss = float(-(labels * np.log(clamped)).sum())
    return loss, -labels / clamped


# ---------------------------------------------------------------------------
# Per-document pipeline
# ---------------------------------------------------------------------------


@dataclass
class DocBundle:
    """Parameter-independent per-document structure, computed once."""

    doc: Document
    phrases: list[InformativePhrase]
    pairs: list[CandidatePair]
    topology: HeteroGraph
    neighbors: list[list[int]]
    statements: list[Statement]
    phrase_spans: list[list[tuple[int, int]]]  # per statement, statement-local coords


def prepare_document(doc: Document) -> DocBundle:
    from .encoder import statement_tokens

    phrases = document_phrases(doc.sentences)
    pairs = candidate_pairs(doc)
    topology = build_topology(doc, phrases, pairs)
    by_sentence: dict[int, list[InformativePhrase]] = {}
    for p in phrases:
        by_sentence.setdefault(p.sentence_index, []).append(p)
    statements = []
    spans_per_stmt = []
    for pair in pairs:
        stmt = statement_tokens(doc.event_by_id(pair.a), doc.event_by_id(pair.b), doc)
        statements.append(stmt)
        offsets: dict[int, int] = {}
        for pos, src in enumerate(stmt.sources):
            if src[0] == "doc" and src[2] == 0:
                offsets[src[1]] = pos
        spans = []
        for s, off in offsets.items():
            for p in by_sentence.get(s, []):
                spans.append((p.start + off, p.end + off))
        spans_per_stmt.append(sorted(spans))
    return DocBundle(
        doc=doc,
        phrases=phrases,
        pairs=pairs,
        topology=topology,
        neighbors=topology.neighbor_lists(),
        statements=statements,
        phrase_spans=spans_per_stmt,
    )


@dataclass
class ContrastivePlan:
    anchors: list[AnchorSet]
    skipped: int = 0


def build_contrastive_plan(
    bundle: DocBundle,
    dictionaries: list,
    config: ContrastiveConfig,
    rng: np.random.Generator,
) -> ContrastivePlan:
    """Sample positives and negatives for every gold-causal anchor statement."""
    causal_flags = [p.causal for p in bundle.pairs]
    anchors = []
    skipped = 0
    for k, pair in enumerate(bundle.pairs):
        if not pair.causal:
            continue
        anchor_set = select_negatives(
            bundle.statements,
            causal_flags,
            k,
            bundle.phrase_spans,
            dictionaries,
            config,
            rng,
        )
        if anchor_set is None:
            skipped += 1
            log.debug("document %s: anchor %s has no eligible negatives, skipped", bundle.doc.id, pair.ids)
            continue
        anchor_set.positives = generate_positives(
            bundle.statements[k], bundle.phrase_spans[k], dictionaries, config, rng
        )
        anchors.append(anchor_set)
    return ContrastivePlan(anchors=anchors, skipped=skipped)


@dataclass
class DocResult:
    loss_total: float
    loss_classify: float
    loss_statement: float
    loss_aspect_event: float
    loss_aspect_context: float
    probs: np.ndarray  # (n_pairs, 2), column 0 = causal
    anchors_used: int
    anchors_skipped: int
    grads: ModelParams | None = None


def run_document(
    bundle: DocBundle,
    params: ModelParams,
    config: TrainConfig,
    plan: ContrastivePlan | None = None,
    cache: EmbeddingCache | None = None,
    compute_grads: bool = False,
) -> DocResult:
    """Full forward pass (and exact backward pass) over one document."""
    enc_config = config.encoder_config()
    encoded = encode(bundle.doc, bundle.pairs, bundle.phrases, enc_config, params, cache)
    g = bundle.topology
    h0, init_ctx = init_features(
        g, bundle.doc, bundle.phrases, bundle.pairs, encoded, params.role_table, params.w_v
    )
    h_final, gat_ctxs = stack_forward(bundle.neighbors, h0, params.stack)

    dim = config.dim
    n_pairs = len(bundle.pairs)
    post_graph_stmt = config.classifier_statement == "post_graph"
    feats = np.zeros((n_pairs, 2 * dim))
    labels = np.zeros((n_pairs, 2))
    for k, pair in enumerate(bundle.pairs):
        v_pair = h_final[g.pair_node(k)]
        h_stmt = h_final[g.statement_node(k)] if post_graph_stmt else encoded.stmt_vecs[k]
        feats[k, :dim] = v_pair
        feats[k, dim:] = h_stmt
        labels[k] = (1.0, 0.0) if pair.causal else (0.0, 1.0)
    logits = feats @ params.w_p.T
    logits = logits - logits.max(axis=1, keepdims=True) if n_pairs else logits
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True) if n_pairs else exp

    l_c, _ = classification_loss(probs, labels)

    # Contrastive terms: anchors are the gold-causal statements, compared
    # against pre-graph encoder representations of their samples.
    l_s = l_ae = l_ac = 0.0
    anchor_grads = []  # (anchor_set, d_anchor, sample gradient arrays, sample ctxs)
    anchors_used = 0
    if plan is not None and config.use_contrastive:
        for aset in plan.anchors:
            k = aset.pair_index
            anchor_vec = encoded.stmt_vecs[k]
            pos_vecs = {"cls": [], "aspE": [], "aspC": []}
            pos_ctxs = []
            for stmt in aset.positives:
                c, e, m, ctx = statement_vectors(stmt, enc_config, params, encoded.token_vecs, cache)
                pos_vecs["cls"].append(c)
                pos_vecs["aspE"].append(e)
                pos_vecs["aspC"].append(m)
                pos_ctxs.append(ctx)
            neg_vecs = {"cls": [], "aspE": [], "aspC": []}
            neg_ctxs = []
            for idx in aset.negative_indices:
                neg_vecs["cls"].append(encoded.stmt_vecs[idx])
                neg_vecs["aspE"].append(encoded.asp_event_vecs[idx])
                neg_vecs["aspC"].append(encoded.asp_context_vecs[idx])
                neg_ctxs.append(encoded.stmt_ctxs[idx])
            for stmt in aset.negative_switched:
                c, e, m, ctx = statement_vectors(stmt, enc_config, params, encoded.token_vecs, cache)
                neg_vecs["cls"].append(c)
                neg_vecs["aspE"].append(e)
                neg_vecs["aspC"].append(m)
                neg_ctxs.append(ctx)

            ls, da_s, dp_s, dn_s = contrastive_loss(
                anchor_vec, np.stack(pos_vecs["cls"]), np.stack(neg_vecs["cls"]), config.contrastive
            )
            le, da_e, dp_e, dn_e = contrastive_loss(
                anchor_vec, np.stack(pos_vecs["aspE"]), np.stack(neg_vecs["aspE"]), config.contrastive
            )
            lc_, da_c, dp_c, dn_c = contrastive_loss(
                anchor_vec, np.stack(pos_vecs["aspC"]), np.stack(neg_vecs["aspC"]), config.contrastive
            )
            l_s += ls
            l_ae += le
            l_ac += lc_
            anchors_used += 1
            anchor_grads.append(
                (aset, (da_s, da_e, da_c), (dp_s, dp_e, dp_c), (dn_s, dn_e, dn_c), pos_ctxs, neg_ctxs)
            )

    loss_total = (
        config.w_classify * l_c
        + config.w_statement * l_s
        + config.w_aspect_event * l_ae
        + config.w_aspect_context * l_ac
    )
    result = DocResult(
        loss_total=loss_total,
        loss_classify=l_c,
        loss_statement=l_s,
        loss_aspect_event=l_ae,
        loss_aspect_context=l_ac,
        probs=probs,
        anchors_used=anchors_used,
        anchors_skipped=plan.skipped if plan is not None else 0,
    )
    if not compute_grads:
        return result

    grads = zeros_like_params(params)
    acc = EncoderGradAccumulator(encoded)
    d_h_final = np.zeros_like(h_final)

    # Classification: d(loss)/d(logits) = probs - labels for softmax + CE.
    d_logits = config.w_classify * (probs - labels)
    grads.w_p += d_logits.T @ feats
    d_feats = d_logits @ params.w_p
    for k in range(n_pairs):
        d_h_final[g.pair_node(k)] += d_feats[k, :dim]
        if post_graph_stmt:
            d_h_final[g.statement_node(k)] += d_feats[k, dim:]
        else:
            acc.add_vec_ctx(encoded.stmt_ctxs[k].cls, d_feats[k, dim:])

    # Contrastive terms: all gradients land on pre-graph encoder vectors.
    weights = (config.w_statement, config.w_aspect_event, config.w_aspect_context)
    for aset, d_anchor3, d_pos3, d_neg3, pos_ctxs, neg_ctxs in anchor_grads:
        k = aset.pair_index
        d_anchor = sum(w * d for w, d in zip(weights, d_anchor3))
        acc.add_vec_ctx(encoded.stmt_ctxs[k].cls, d_anchor)
        kinds = ("cls", "asp_event", "asp_context")
        for j, ctx in enumerate(pos_ctxs):
            for kind, w, d_pos in zip(kinds, weights, d_pos3):
                acc.add_vec_ctx(getattr(ctx, kind), w * d_pos[j])
        for i, ctx in enumerate(neg_ctxs):
            for kind, w, d_neg in zip(kinds, weights, d_neg3):
                acc.add_vec_ctx(getattr(ctx, kind), w * d_neg[i])

    d_h0 = stack_backward(gat_ctxs, params.stack, d_h_final, grads.stack)
    init_backward(g, init_ctx, d_h0, encoded, params.w_v, grads.role_table, grads.w_v, acc)
    acc.finalize(encoded, params, grads.embed, grads.proj)
    result.grads = grads
    return result


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass
class AdamWState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_init(params: ModelParams) -> AdamWState:
    state = AdamWState()
    for name, tensor in params.named_tensors():
        state.m[name] = np.zeros_like(tensor)
        state.v[name] = np.zeros_like(tensor)
    return state


def adamw_step(
    params: ModelParams, grads: ModelParams, state: AdamWState, lr: float, config: TrainConfig
) -> None:
    """Decoupled weight decay with bias correction; updates params in place."""
    if config.grad_clip > 0:
        total = np.sqrt(sum(float((g**2).sum()) for _, g in grads.named_tensors()))
        if total > config.grad_clip:
            scale = config.grad_clip / total
            for _, g in grads.named_tensors():
                g *= scale
    state.step += 1
    t = state.step
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    for (name, p), (_, g) in zip(params.named_tensors(), grads.named_tensors()):
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for tensor {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        p *= 1.0 - lr * config.weight_decay
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps)


def lr_schedule(step: int, total_steps: int, lr0: float) -> float:
    """Linear decay from lr0 to zero across the run."""
    if total_steps == 0:
        raise ValueError("total_steps must be positive")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return lr0 * (1.0 - step / total_steps)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def document_rng(seed: int, doc_id: str) -> np.random.Generator:
    return np.random.default_rng((seed ^ stable_hash64(doc_id)) & 0xFFFFFFFFFFFFFFFF)


def train(
    corpus: list[Document],
    config: TrainConfig,
    dictionaries: list | None = None,
    cache: EmbeddingCache | None = None,
    checkpoint_path: Path | str | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Batch-size-1 training: epochs x documents optimizer steps, seeded shuffle."""
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    master_rng = np.random.default_rng(config.seed)
    params = init_params(config, master_rng)
    state = adamw_init(params)
    bundles = [prepare_document(doc) for doc in corpus]
    doc_rngs = {doc.id: document_rng(config.seed, doc.id) for doc in corpus}
    dictionaries = dictionaries or []
    contrastive_active = config.use_contrastive and bool(dictionaries)

    total_steps = config.epochs * len(corpus)
    step = 0
    history = []
    for epoch in range(config.epochs):
        order = master_rng.permutation(len(bundles))
        epoch_losses = np.zeros(5)
        tp = fp = fn = 0
        for idx in order:
            bundle = bundles[int(idx)]
            plan = None
            if contrastive_active:
                plan = build_contrastive_plan(
                    bundle, dictionaries, config.contrastive, doc_rngs[bundle.doc.id]
                )
            result = run_document(bundle, params, config, plan=plan, cache=cache, compute_grads=True)
            if not np.isfinite(result.loss_total):
                raise NumericError(f"non-finite loss at step {step} on document {bundle.doc.id}")
            lr = lr_schedule(step, total_steps, config.lr0)
            adamw_step(params, result.grads, state, lr, config)
            step += 1
            epoch_losses += (
                result.loss_total,
                result.loss_classify,
                result.loss_statement,
                result.loss_aspect_event,
                result.loss_aspect_context,
            )
            predicted = result.probs.argmax(axis=1) == 0 if len(result.probs) else np.zeros(0, bool)
            for k, pair in enumerate(bundle.pairs):
                if predicted[k] and pair.causal:
                    tp += 1
                elif predicted[k]:
                    fp += 1
                elif pair.causal:
                    fn += 1
        denom_p = tp + fp
        denom_r = tp + fn
        p = 100.0 * tp / denom_p if denom_p else 0.0
        r = 100.0 * tp / denom_r if denom_r else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        history.append(
            {
                "epoch": epoch,
                "loss": float(epoch_losses[0]),
                "loss_classify": float(epoch_losses[1]),
                "loss_statement": float(epoch_losses[2]),
                "loss_aspect_event": float(epoch_losses[3]),
                "loss_aspect_context": float(epoch_losses[4]),
                "train_f1": f1,
            }
        )
        log.debug("epoch %d: loss %.4f train_f1 %.1f", epoch, epoch_losses[0], f1)
    if checkpoint_path is not None:
        save_checkpoint(params, checkpoint_path)
    return params, history


def total_loss(
    bundle: DocBundle,
    params: ModelParams,
    config: TrainConfig,
    plan: ContrastivePlan | None = None,
    cache: EmbeddingCache | None = None,
) -> tuple[float, ModelParams]:
    """Loss and full gradient set for one document (fixed contrastive plan)."""
    result = run_document(bundle, params, config, plan=plan, cache=cache, compute_grads=True)
    return result.loss_total, result.grads


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------


def finite_difference_check(
    loss_fn,
    params: ModelParams,
    grads: ModelParams,
    eps: float = 1e-4,
    rel_floor: float = 1e-6,
) -> dict[str, float]:
    """Central differences against analytic gradients, per tensor.

    Returns the max relative error |fd - analytic| / max(|fd|, |analytic|,
    rel_floor) over each tensor's entries. loss_fn() must be a pure function
    of `params`, which is perturbed in place.
    """
    report = {}
    analytic = dict(grads.named_tensors())
    for name, tensor in params.named_tensors():
        worst = 0.0
        flat = tensor.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            up = loss_fn()
            flat[i] = original - eps
            down = loss_fn()
            flat[i] = original
            fd = (up - down) / (2 * eps)
            denom = max(abs(fd), abs(a_flat[i]), rel_floor)
            worst = max(worst, abs(fd - a_flat[i]) / denom)
        report[name] = worst
    return report


def gradcheck_fixture(seed: int, max_nodes: int = 30):
    """A small synthetic document plus config sized to stay under max_nodes."""
    from .corpus import BilingualDictionary
    from .synthetic import SyntheticSpec, build_document

    config = TrainConfig(
        dim=8,
        dim_in=6,
        hash_buckets=24,
        heads=4,
        layers=3,
        seed=seed,
        contrastive=ContrastiveConfig(n_positives=1, k_negatives=2, seed=seed),
    )
    doc = None
    for events in (4, 3, 2):
        spec = SyntheticSpec(
            languages=["en"],
            events_per_doc=events,
            cue_strength=1.0,
            seed=seed,
            min_extra_nouns=0,
            max_extra_nouns=0,
        )
        candidate = build_document("en", 0, spec)
        bundle = prepare_document(candidate)
        if bundle.topology.num_nodes <= max_nodes:
            doc = candidate
            break
    if doc is None:
        raise ValueError(f"no gradcheck fixture fits within {max_nodes} nodes")
    words = sorted({t.form for sent in doc.sentences for t in sent})
    dictionary = BilingualDictionary(
        source_lang="en", target_lang="xx", entries={w: [f"xx_{w}"] for w in words}
    )
    return doc, bundle, config, [dictionary]


def gradcheck_model(seed: int = 0, max_nodes: int = 30, eps: float = 1e-4) -> dict[str, float]:
    """Full-model gradient check on the fixture document."""
    doc, bundle, config, dictionaries = gradcheck_fixture(seed, max_nodes)
    rng = np.random.default_rng(seed)
    params = init_params(config, rng)
    plan = build_contrastive_plan(
        bundle, dictionaries, config.contrastive, document_rng(seed, doc.id)
    )
    loss, grads = total_loss(bundle, params, config, plan=plan)

    def loss_fn():
        return run_document(bundle, params, config, plan=plan, compute_grads=False).loss_total

    return finite_difference_check(loss_fn, params, grads, eps=eps)
