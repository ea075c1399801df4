"""Margin-ranking training: hinge loss over triples, mini-batch SGD,
early stopping on validation P@1, optional embedding fine-tuning, and the
finite-difference gradient check used to validate every backward pass.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .arc1 import build_arc1
from .arc2 import build_arc2
from .baselines import build_senmlp, build_senna, build_wordembed
from .embeddings import EncodedSentence, random_embeddings, encode_sentence
from .errors import ConfigError, DataError, NumericError
from .mlp import draw_dropout_masks
from .models import clone_params, param_vector, restore_params, set_param_vector
from .tensor import finite_diff, make_rng


@dataclass
class Triple:
    x: EncodedSentence
    y_pos: EncodedSentence
    y_neg: EncodedSentence


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 128
    max_epochs: int = 50
    patience: int = 5
    dropout: float = 0.0
    eval_every: int = 50
    finetune_embeddings: bool = False
    seed: int = 0

    def validate(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)  # (epoch, batches, train_loss, val_p1)
    best_index: int = -1

    def add(self, epoch, batches, train_loss, val_p1):
        self.records.append((epoch, batches, train_loss, val_p1))

    @property
    def best(self):
        return self.records[self.best_index] if self.best_index >= 0 else None


def hinge_loss(s_pos: float, s_neg: float) -> float:
    """max(0, 1 + s_neg - s_pos); zero exactly when the margin is met."""
    return max(0.0, 1.0 + s_neg - s_pos)


def _refresh(sent: EncodedSentence, table) -> None:
    """Re-materialize the padded matrix from (possibly fine-tuned) vectors."""
    sent.x[: sent.length] = table.vectors[sent.ids]


def sgd_step(model, batch, cfg: TrainConfig, rng: np.random.Generator,
             table=None) -> float:
    """One mini-batch update; returns the batch mean hinge loss.

    For each triple both pairs are scored with the same dropout masks
    (drawn fresh per triple); only triples with positive loss contribute
    gradients. Update is theta -= lr * mean(grad).
    """
    if not batch:
        raise DataError("sgd_step: empty batch")
    finetune = cfg.finetune_embeddings and table is not None
    total_loss = 0.0
    acc = None
    emb_acc = None
    for triple in batch:
        if finetune:
            _refresh(triple.x, table)
            _refresh(triple.y_pos, table)
            _refresh(triple.y_neg, table)
        masks = draw_dropout_masks(model.head, rng) if cfg.dropout > 0 else None
        s_pos, tr_pos = model.score(triple.x, triple.y_pos, masks)
        s_neg, tr_neg = model.score(triple.x, triple.y_neg, masks)
        loss = hinge_loss(s_pos, s_neg)
        if not (math.isfinite(s_pos) and math.isfinite(s_neg) and math.isfinite(loss)):
            raise NumericError(
                f"non-finite loss {loss} (scores {s_pos}, {s_neg}); "
                f"learning rate {cfg.learning_rate} is probably too high"
            )
        total_loss += loss
        if loss <= 0.0:
            continue
        g_pos, dx_p, dy_p = model.backward(tr_pos, -1.0)
        g_neg, dx_n, dy_n = model.backward(tr_neg, +1.0)
        if acc is None:
            acc = {k: v.copy() for k, v in g_pos.items()}
        else:
            for k, v in g_pos.items():
                acc[k] += v
        for k, v in g_neg.items():
            acc[k] += v
        if finetune:
            if emb_acc is None:
                emb_acc = np.zeros_like(table.vectors)
            for sent, d in ((triple.x, dx_p + dx_n), (triple.y_pos, dy_p),
                            (triple.y_neg, dy_n)):
                np.add.at(emb_acc, sent.ids, d[: sent.length])
    if acc is not None and cfg.learning_rate != 0.0:
        scale = cfg.learning_rate / len(batch)
        for name, tensor in model.named_params():
            tensor -= scale * acc[name]
        if emb_acc is not None:
            table.vectors -= scale * emb_acc
    return total_loss / len(batch)


def train(model, train_triples, val_instances, cfg: TrainConfig, table=None,
          log=None):
    """Mini-batch SGD with periodic validation P@1 and early stopping.

    Shuffles triples each epoch (seeded), evaluates every cfg.eval_every
    batches, keeps the best-validation parameter snapshot, and stops after
    cfg.patience evaluations without improvement. Returns (model restored
    to the best snapshot, TrainHistory).
    """
    from .metrics import p_at_1  # local import to avoid a cycle

    cfg.validate()
    if not train_triples:
        raise DataError("training set is empty")
    if not val_instances:
        raise DataError("validation set is empty")
    rng = make_rng(cfg.seed)
    order = np.arange(len(train_triples))
    history = TrainHistory()
    best_p1 = -1.0
    best_snapshot = clone_params(model)
    best_table = table.vectors.copy() if (table is not None and cfg.finetune_embeddings) else None
    bad_evals = 0
    batches = 0
    loss_sum = 0.0
    loss_count = 0
    stop = False

    def scorer(sx, sy):
        if cfg.finetune_embeddings and table is not None:
            _refresh(sx, table)
            _refresh(sy, table)
        return model.score(sx, sy)[0]

    for epoch in range(1, cfg.max_epochs + 1):
        rng.shuffle(order)
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_triples[i] for i in order[start : start + cfg.batch_size]]
            loss = sgd_step(model, batch, cfg, rng, table)
            loss_sum += loss
            loss_count += 1
            batches += 1
            if batches % cfg.eval_every == 0:
                report = p_at_1(scorer, val_instances)
                val_p1 = report.value
                train_loss = loss_sum / max(loss_count, 1)
                history.add(epoch, batches, train_loss, val_p1)
                if log is not None:
                    log(f"epoch {epoch:3d}  batch {batches:5d}  "
                        f"loss {train_loss:.4f}  val_p1 {val_p1:.4f}")
                loss_sum = 0.0
                loss_count = 0
                if val_p1 > best_p1:
                    best_p1 = val_p1
                    best_snapshot = clone_params(model)
                    if best_table is not None:
                        best_table = table.vectors.copy()
                    history.best_index = len(history.records) - 1
                    bad_evals = 0
                else:
                    bad_evals += 1
                    if bad_evals >= cfg.patience:
                        stop = True
                        break
        if stop:
            break
    restore_params(model, best_snapshot)
    if best_table is not None:
        table.vectors[...] = best_table
    return model, history


GRADCHECK_BUILDERS = {
    "arc1": lambda dim, max_len, rng: build_arc1(
        dim, max_len, rng, windows=(3, 2), feature_maps=(3, 2), hidden=(4,)),
    "arc2": lambda dim, max_len, rng: build_arc2(
        dim, max_len, rng, window1=2, maps1=3, twod_layers=((2, 2),), hidden=(4,)),
    "wordembed": lambda dim, max_len, rng: build_wordembed(dim, rng, hidden=(5,)),
    "senmlp": lambda dim, max_len, rng: build_senmlp(dim, max_len, rng, hidden=(5,)),
    "senna": lambda dim, max_len, rng: build_senna(
        dim, max_len, rng, window=3, maps=4, hidden=(4,)),
}


def _random_sentence(table, max_len, rng):
    n_tokens = len(table.vocab) - 1
    length = int(rng.integers(2, max_len + 1))
    tokens = [table.vocab.index_to_token[1 + int(rng.integers(n_tokens))]
              for _ in range(length)]
    return encode_sentence(tokens, table, max_len)


def _pool_gap(conv_out: np.ndarray, global_pool: bool) -> float:
    """Smallest winner-vs-runner-up gap over pooling windows.

    Windows whose top value is 0 are skipped: all their inputs are exact
    zeros (gated or padded), which stay constant under parameter
    perturbation, so the tie cannot flip.
    """
    if conv_out.ndim == 2:
        if global_pool:
            if conv_out.shape[0] < 2:
                return np.inf
            top2 = np.sort(conv_out, axis=0)[-2:, :]
        else:
            l, f = conv_out.shape
            z = conv_out if l % 2 == 0 else np.vstack(
                [conv_out, np.zeros((1, f), dtype=conv_out.dtype)])
            top2 = np.sort(np.stack([z[0::2], z[1::2]]), axis=0)[-2:]
    else:
        ni, nj, f = conv_out.shape
        z = np.pad(conv_out, ((0, ni % 2), (0, nj % 2), (0, 0)))
        cands = np.stack([z[0::2, 0::2], z[0::2, 1::2], z[1::2, 0::2], z[1::2, 1::2]])
        top2 = np.sort(cands, axis=0)[-2:]
    live = top2[-1] > 0
    if not live.any():
        return np.inf
    return float((top2[-1] - top2[-2])[live].min())


def _conv_kink_distance(layer_traces, activation: str, global_pool: bool) -> float:
    dist = np.inf
    for lt in layer_traces:
        active = np.broadcast_to((lt.gate > 0)[..., None], lt.pre.shape)
        if activation == "relu" and active.any():
            dist = min(dist, float(np.abs(lt.pre[active]).min()))
        dist = min(dist, _pool_gap(lt.conv_out, global_pool))
    return dist


def _trace_kink_distance(model, trace) -> float:
    """Distance of a forward pass from the nearest non-differentiable point.

    Central differences are only valid away from relu kinks, pooling ties
    and the hinge kink; gradient_check resamples draws too close to one.
    """
    dist = np.inf
    if model.head.activation == "relu":
        for pre in trace.head.pres:
            if pre.size:
                dist = min(dist, float(np.abs(pre).min()))
    kind = model.kind
    if kind in ("arc1", "senna"):
        gp = model.config_x.global_pool
        dist = min(dist, _conv_kink_distance(trace.enc_x.layers,
                                             model.config_x.activation, gp))
        dist = min(dist, _conv_kink_distance(trace.enc_y.layers,
                                             model.config_y.activation, gp))
    elif kind == "arc2":
        dist = min(dist, _conv_kink_distance(trace.layers,
                                             model.config.activation, False))
    return dist


def gradient_check(model_kind: str, seed: int = 0, eps: float = 1e-5,
                   embed_dim: int = 3, max_len: int = 8,
                   negate_bias_grad: bool = False) -> float:
    """Compare analytic gradients against central differences.

    Builds a small random model and one random triple, forms the hinge
    loss, and differentiates every parameter both ways. Returns the max
    relative error |a - n| / max(1e-8, |a| + |n|). Draws that sit within
    ~50*eps of a relu kink, a pooling tie, or the hinge kink are redrawn
    (the finite-difference oracle is only meaningful away from them).

    negate_bias_grad flips the sign of one analytic bias gradient; it
    exists so the failure path of the comparison can be exercised.
    """
    if model_kind not in GRADCHECK_BUILDERS:
        raise ConfigError(f"unknown model kind {model_kind!r}")
    guard = 50.0 * eps
    for attempt in range(64):
        rng = make_rng((seed << 8) + attempt)
        table = random_embeddings([f"w{i}" for i in range(12)], embed_dim, rng)
        model = GRADCHECK_BUILDERS[model_kind](embed_dim, max_len, rng)
        sx = _random_sentence(table, max_len, rng)
        sy_pos = _random_sentence(table, max_len, rng)
        sy_neg = _random_sentence(table, max_len, rng)
        s_pos, tr_pos = model.score(sx, sy_pos)
        s_neg, tr_neg = model.score(sx, sy_neg)
        if s_pos - s_neg >= 1.0:  # margin met: loss flat, swap to activate it
            sy_pos, sy_neg = sy_neg, sy_pos
            s_pos, tr_pos, s_neg, tr_neg = s_neg, tr_neg, s_pos, tr_pos
        if abs((s_pos - s_neg) - 1.0) < 1e-3:
            continue
        if min(_trace_kink_distance(model, tr_pos),
               _trace_kink_distance(model, tr_neg)) < guard:
            continue
        g_pos, _, _ = model.backward(tr_pos, -1.0)
        g_neg, _, _ = model.backward(tr_neg, +1.0)
        total = {name: g_pos[name] + g_neg[name] for name, _ in model.named_params()}
        if negate_bias_grad:
            # flip the most influential bias gradient; draws where every
            # bias gradient cancels exactly (hinge symmetry with matching
            # activation patterns) give the fault nothing to corrupt
            bias_names = [n for n, _ in model.named_params()
                          if n.endswith(".b") or n == "b1"]
            bias_name = max(bias_names, key=lambda n: float(np.abs(total[n]).max()))
            if float(np.abs(total[bias_name]).max()) < 1e-6:
                continue
            total[bias_name] = -total[bias_name]
        analytic = np.concatenate([
            total[name].ravel() for name, _ in model.named_params()
        ])
        theta0 = param_vector(model)

        def loss_at(theta):
            set_param_vector(model, theta)
            sp = model.score(sx, sy_pos)[0]
            sn = model.score(sx, sy_neg)[0]
            return hinge_loss(sp, sn)

        numeric = finite_diff(loss_at, theta0, eps)
        set_param_vector(model, theta0)
        # Coordinates where both gradients sit below 1e-8 are "both zero":
        # central differences of an exactly-flat direction still carry
        # ~ulp(loss)/(2*eps) of rounding noise, which the relative formula
        # would misread. They must agree absolutely instead.
        live = (np.abs(analytic) + np.abs(numeric)) >= 1e-8
        if np.any(~live) and float(np.abs(analytic - numeric)[~live].max()) > 1e-8:
            return 1.0
        if not live.any():
            continue
        denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
        return float(np.max((np.abs(analytic - numeric) / denom)[live]))
    raise NumericError(
        f"gradient_check: could not find a well-conditioned draw for {model_kind}"
    )
