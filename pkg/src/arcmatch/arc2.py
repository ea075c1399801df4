"""Interaction-space matching architecture (ARC-II).

Layer 1 slides a window over each sentence and convolves every (x-segment,
y-segment) pair into a grid of feature vectors, letting the two sentences
interact before either has a mature representation. The grid then goes
through alternating 2x2 max-pooling and gated square 2D convolutions, and
the flattened result feeds the MLP head.

The pair gate fires only when the *whole* concatenated pair segment is
zero; a window pairing padding on one side with words on the other is
computed normally.
"""

from dataclasses import dataclass, field

import numpy as np

from .arc1 import Arc1Model
from .conv_sentence import _window_stack
from .errors import ConfigError, ShapeError
from .mlp import MlpHead, build_head, head_backward, head_forward
from .tensor import activate, activate_grad_from_output, init_uniform


@dataclass
class Arc2Config:
    embed_dim: int
    max_len: int            # shared by both sentences (square grid)
    window1: int            # first-layer window, in words
    maps1: int
    twod_layers: tuple      # ((window, maps), ...) for the 2D conv layers
    activation: str = "relu"

    def validate(self) -> None:
        if self.window1 < 1:
            raise ConfigError(f"window1 must be >= 1, got {self.window1}")
        if self.maps1 < 1:
            raise ConfigError(f"maps1 must be >= 1, got {self.maps1}")
        n = self.max_len - self.window1 + 1
        if n < 2:
            raise ConfigError(
                f"grid side {n} < 2: max_len {self.max_len} too small for window {self.window1}"
            )
        for li, (k, f) in enumerate(self.twod_layers):
            if k < 2 or f < 1:
                raise ConfigError(f"2D layer {li}: window {k} / maps {f} invalid")
        self.grid_plan()

    def grid_plan(self) -> list:
        """Spatial extents: [(conv_side, pooled_side), ...] per conv layer."""
        n = self.max_len - self.window1 + 1
        plan = [(n, (n + 1) // 2)]
        side = (n + 1) // 2
        for li, (k, _) in enumerate(self.twod_layers):
            conv_side = side - k + 1
            if conv_side < 1:
                raise ConfigError(
                    f"2D layer {li}: window {k} does not fit grid side {side}"
                )
            side = (conv_side + 1) // 2
            plan.append((conv_side, side))
        return plan

    @property
    def output_len(self) -> int:
        plan = self.grid_plan()
        final_maps = self.twod_layers[-1][1] if self.twod_layers else self.maps1
        return plan[-1][1] ** 2 * final_maps


@dataclass
class Arc2Params:
    w1: np.ndarray          # [maps1, 2 * window1 * embed_dim]
    b1: np.ndarray
    twod: list              # per 2D layer: (w [F, k*k*F_prev], b [F])


@dataclass
class GridLayerTrace:
    z_in: np.ndarray | None
    pre: np.ndarray
    gate: np.ndarray        # [ni, nj] 0/1
    conv_out: np.ndarray    # [ni, nj, F]
    pool_from: np.ndarray   # [oi, oj, F, 2] source coords
    pool_out: np.ndarray


@dataclass
class Arc2Trace:
    seg_x: np.ndarray
    seg_y: np.ndarray
    layers: list = field(default_factory=list)
    head: object = None
    score: float = 0.0


def interaction_conv1d(sx, sy, w: np.ndarray, b: np.ndarray, k1: int,
                       activation: str = "relu"):
    """First-layer convolution over all segment pairs.

    Returns (grid [n, n, F], gate [n, n], pre, seg_x, seg_y) where n is the
    number of window positions. Cell (i, j) sees x rows i..i+k1-1
    concatenated with y rows j..j+k1-1; its gate is 0 only when that whole
    concatenation is zero.
    """
    if sx.x.shape != sy.x.shape:
        raise ShapeError(f"sentence matrices differ: {sx.x.shape} vs {sy.x.shape}")
    l_max, dim = sx.x.shape
    if l_max < k1:
        raise ShapeError(f"window {k1} does not fit padded length {l_max}")
    if w.shape[1] != 2 * k1 * dim or b.shape != (w.shape[0],):
        raise ShapeError(
            f"weight {w.shape} / bias {b.shape} incompatible with window {k1} "
            f"over dim {dim} pairs"
        )
    seg_x = _window_stack(sx.x, k1)                # [n, k1*dim]
    seg_y = _window_stack(sy.x, k1)
    half = k1 * dim
    px = seg_x @ w[:, :half].T                     # [n, F]
    py = seg_y @ w[:, half:].T
    pre = px[:, None, :] + py[None, :, :] + b      # [n, n, F]
    zero_x = ~seg_x.any(axis=1)
    zero_y = ~seg_y.any(axis=1)
    gate = (~(zero_x[:, None] & zero_y[None, :])).astype(np.float64)
    out = gate[:, :, None] * activate(pre, activation)
    return out, gate, pre, seg_x, seg_y


def maxpool2d(z: np.ndarray):
    """Max over disjoint 2x2 blocks per channel; odd extents zero-padded.

    Returns (pooled [ceil(ni/2), ceil(nj/2), F], source coords
    [oi, oj, F, 2]). Ties resolve to the first candidate in row-major
    order of the block.
    """
    ni, nj, f = z.shape
    pi, pj = ni % 2, nj % 2
    if pi or pj:
        z = np.pad(z, ((0, pi), (0, pj), (0, 0)))
    # candidates in row-major block order: (0,0), (0,1), (1,0), (1,1)
    cands = np.stack([z[0::2, 0::2], z[0::2, 1::2], z[1::2, 0::2], z[1::2, 1::2]])
    choice = np.argmax(cands, axis=0)  # first max wins
    pooled = np.take_along_axis(cands, choice[None], axis=0)[0]
    oi, oj = pooled.shape[:2]
    di, dj = choice // 2, choice % 2
    rows = np.arange(oi)[:, None, None] * 2 + di
    cols = np.arange(oj)[None, :, None] * 2 + dj
    coords = np.stack([rows, cols], axis=-1)
    return pooled, coords


def conv2d_gated(z: np.ndarray, w: np.ndarray, b: np.ndarray, k: int,
                 activation: str = "relu"):
    """Gated 2D convolution on k x k windows of a [ni, nj, F_in] grid.

    The receptive field is flattened row-major (row offset outer, column
    offset middle, channel inner); the gate is 0 only when the whole field
    is zero. Spatial extents shrink by k - 1.
    """
    ni, nj, f_in = z.shape
    if ni < k or nj < k:
        raise ShapeError(f"2D window {k} does not fit grid {ni}x{nj}")
    if w.shape[1] != k * k * f_in or b.shape != (w.shape[0],):
        raise ShapeError(
            f"weight {w.shape} / bias {b.shape} incompatible with window {k} "
            f"over {f_in} channels"
        )
    oi, oj = ni - k + 1, nj - k + 1
    seg = np.concatenate(
        [z[di : di + oi, dj : dj + oj, :] for di in range(k) for dj in range(k)],
        axis=2,
    )                                              # [oi, oj, k*k*F_in]
    pre = seg @ w.T + b
    gate = seg.any(axis=2).astype(np.float64)
    out = gate[:, :, None] * activate(pre, activation)
    return out, gate, pre, seg


@dataclass
class Arc2Model:
    config: Arc2Config
    params: Arc2Params
    head: MlpHead
    kind: str = "arc2"

    def score(self, sx, sy, masks=None):
        cfg = self.config
        trace = Arc2Trace(seg_x=None, seg_y=None)
        out, gate, pre, seg_x, seg_y = interaction_conv1d(
            sx, sy, self.params.w1, self.params.b1, cfg.window1, cfg.activation
        )
        trace.seg_x, trace.seg_y = seg_x, seg_y
        pooled, coords = maxpool2d(out)
        trace.layers.append(GridLayerTrace(z_in=None, pre=pre, gate=gate,
                                           conv_out=out, pool_from=coords,
                                           pool_out=pooled))
        z = pooled
        for (k, _), (w, b) in zip(cfg.twod_layers, self.params.twod):
            out, gate, pre, _ = conv2d_gated(z, w, b, k, cfg.activation)
            pooled, coords = maxpool2d(out)
            trace.layers.append(GridLayerTrace(z_in=z, pre=pre, gate=gate,
                                               conv_out=out, pool_from=coords,
                                               pool_out=pooled))
            z = pooled
        flat = z.reshape(-1)  # row-major: i outer, j middle, channel inner
        s, head_trace = head_forward(self.head, flat, masks)
        trace.head = head_trace
        trace.score = s
        return s, trace

    def backward(self, trace: Arc2Trace, upstream: float):
        cfg = self.config
        wg, bg, dflat = head_backward(self.head, trace.head, upstream)
        grads = {}
        for li, (dw, db) in enumerate(zip(wg, bg)):
            grads[f"head.{li}.w"] = dw
            grads[f"head.{li}.b"] = db

        dz = dflat.reshape(trace.layers[-1].pool_out.shape)
        for li in range(len(trace.layers) - 1, 0, -1):
            lt = trace.layers[li]
            k = cfg.twod_layers[li - 1][0]
            w, _ = self.params.twod[li - 1]
            d_conv = _pool2d_backward(dz, lt)
            dpre = d_conv * lt.gate[:, :, None] * activate_grad_from_output(
                lt.conv_out, cfg.activation
            )
            oi, oj, f_out = dpre.shape
            seg = np.concatenate(
                [lt.z_in[di : di + oi, dj : dj + oj, :]
                 for di in range(k) for dj in range(k)],
                axis=2,
            )
            dpre_flat = dpre.reshape(-1, f_out)
            grads[f"twod.{li - 1}.w"] = dpre_flat.T @ seg.reshape(-1, seg.shape[2])
            grads[f"twod.{li - 1}.b"] = dpre_flat.sum(axis=0)
            dseg = dpre @ w                       # [oi, oj, k*k*F_in]
            f_in = lt.z_in.shape[2]
            dz = np.zeros_like(lt.z_in)
            for idx in range(k * k):
                di, dj = divmod(idx, k)
                dz[di : di + oi, dj : dj + oj, :] += dseg[
                    :, :, idx * f_in : (idx + 1) * f_in
                ]

        lt = trace.layers[0]
        d_conv = _pool2d_backward(dz, lt)
        dpre = d_conv * lt.gate[:, :, None] * activate_grad_from_output(
            lt.conv_out, cfg.activation
        )
        gx = dpre.sum(axis=1)                      # [n, F]
        gy = dpre.sum(axis=0)
        half = cfg.window1 * cfg.embed_dim
        dw1 = np.concatenate([gx.T @ trace.seg_x, gy.T @ trace.seg_y], axis=1)
        grads["w1"] = dw1
        grads["b1"] = dpre.sum(axis=(0, 1))
        dseg_x = gx @ self.params.w1[:, :half]
        dseg_y = gy @ self.params.w1[:, half:]
        dx = _unstack_windows(dseg_x, cfg.window1, cfg.max_len, cfg.embed_dim)
        dy = _unstack_windows(dseg_y, cfg.window1, cfg.max_len, cfg.embed_dim)
        return grads, dx, dy

    def named_params(self):
        """Fixed order: pair layer, 2D layers ascending (w before b), head last."""
        out = [("w1", self.params.w1), ("b1", self.params.b1)]
        for li, (w, b) in enumerate(self.params.twod):
            out.append((f"twod.{li}.w", w))
            out.append((f"twod.{li}.b", b))
        for li, (w, b) in enumerate(zip(self.head.weights, self.head.biases)):
            out.append((f"head.{li}.w", w))
            out.append((f"head.{li}.b", b))
        return out


def _pool2d_backward(dz: np.ndarray, lt: GridLayerTrace) -> np.ndarray:
    """Scatter pooled gradients back to their argmax coordinates."""
    d_conv = np.zeros_like(lt.conv_out)
    oi, oj, f = dz.shape
    ni, nj = d_conv.shape[:2]
    rows = lt.pool_from[..., 0].reshape(-1)
    cols = lt.pool_from[..., 1].reshape(-1)
    chans = np.tile(np.arange(f), oi * oj)
    vals = dz.reshape(-1)
    keep = (rows < ni) & (cols < nj)  # synthetic pad cells get nothing
    np.add.at(d_conv, (rows[keep], cols[keep], chans[keep]), vals[keep])
    return d_conv


def _unstack_windows(dseg: np.ndarray, k: int, max_len: int, dim: int) -> np.ndarray:
    """Adjoint of _window_stack: accumulate window grads onto sentence rows."""
    dx = np.zeros((max_len, dim), dtype=np.float64)
    n = dseg.shape[0]
    for j in range(k):
        dx[j : j + n] += dseg[:, j * dim : (j + 1) * dim]
    return dx


def build_arc2(embed_dim: int, max_len: int, rng,
               window1=3, maps1=16, twod_layers=((2, 16), (2, 16)),
               hidden=(128,), activation="relu", dropout=0.0) -> Arc2Model:
    """Assemble an interaction model with freshly initialized parameters."""
    config = Arc2Config(embed_dim=embed_dim, max_len=max_len, window1=window1,
                        maps1=maps1, twod_layers=tuple(tuple(t) for t in twod_layers),
                        activation=activation)
    config.validate()
    w1 = init_uniform((maps1, 2 * window1 * embed_dim), 2 * window1 * embed_dim,
                      maps1, rng)
    b1 = np.zeros(maps1, dtype=np.float64)
    twod = []
    f_prev = maps1
    for k, f in config.twod_layers:
        fan_in = k * k * f_prev
        twod.append((init_uniform((f, fan_in), fan_in, f, rng),
                     np.zeros(f, dtype=np.float64)))
        f_prev = f
    params = Arc2Params(w1=w1, b1=b1, twod=twod)
    head = build_head(config.output_len, hidden, rng, activation=activation,
                      dropout=dropout)
    return Arc2Model(config=config, params=params, head=head)


def arc1_embedding_constraints(arc1: Arc1Model) -> None:
    """Check an ARC-I model is shape-compatible with the grid construction."""
    cx, cy = arc1.config_x, arc1.config_y
    if cx.depth != 2:
        raise ConfigError(f"construction needs a depth-2 encoder, got depth {cx.depth}")
    if cx.windows[1] != 2:
        raise ConfigError(
            f"construction needs second window == 2 to align with 2x2 pooling, "
            f"got {cx.windows[1]}"
        )
    if (cx.max_len, cx.windows, cx.feature_maps, cx.embed_dim, cx.activation) != (
        cy.max_len, cy.windows, cy.feature_maps, cy.embed_dim, cy.activation
    ):
        raise ConfigError("construction needs identical x/y encoder configs")


def embed_arc1_as_arc2(arc1: Arc1Model) -> Arc2Model:
    """Build grid-model parameters that replicate a siamese model's stacks.

    First-layer filters split into an x-devoted half (y block zeroed) and a
    y-devoted half (x block zeroed); second-layer filters connect only
    within their own group, with the y-devoted group reading the column
    offset instead of the row offset. On padding-free inputs the x-devoted
    channel stack reproduces the siamese x-encoder's conv/pool outputs
    exactly (and symmetrically for y). The head is zero-initialized: score
    equivalence is out of scope, only the stacks correspond.
    """
    arc1_embedding_constraints(arc1)
    cx = arc1.config_x
    k1 = cx.windows[0]
    f1a, f2a = cx.feature_maps
    dim = cx.embed_dim
    half = k1 * dim

    (w1x, b1x), (w2x, b2x) = arc1.params_x.layers
    (w1y, b1y), (w2y, b2y) = arc1.params_y.layers

    w1 = np.zeros((2 * f1a, 2 * half), dtype=np.float64)
    w1[:f1a, :half] = w1x
    w1[f1a:, half:] = w1y
    b1 = np.concatenate([b1x, b1y])

    # second layer: 2x2 field flattened as (row offset, col offset, channel)
    f_in = 2 * f1a
    w2 = np.zeros((2 * f2a, 4 * f_in), dtype=np.float64)
    for f in range(f2a):
        for di in range(2):  # x-devoted reads the two row offsets at col 0
            block = (di * 2 + 0) * f_in
            w2[f, block : block + f1a] = w2x[f, di * f1a : (di + 1) * f1a]
        for dj in range(2):  # y-devoted reads the two col offsets at row 0
            block = (0 * 2 + dj) * f_in
            w2[f2a + f, block + f1a : block + 2 * f1a] = w2y[f, dj * f1a : (dj + 1) * f1a]
    b2 = np.concatenate([b2x, b2y])

    config = Arc2Config(embed_dim=dim, max_len=cx.max_len, window1=k1,
                        maps1=2 * f1a, twod_layers=((2, 2 * f2a),),
                        activation=cx.activation)
    config.validate()
    params = Arc2Params(w1=w1, b1=b1, twod=[(w2, b2)])
    head = MlpHead(
        weights=[np.zeros((1, config.output_len), dtype=np.float64)],
        biases=[np.zeros(1, dtype=np.float64)],
        activation=cx.activation,
    )
    return Arc2Model(config=config, params=params, head=head)
