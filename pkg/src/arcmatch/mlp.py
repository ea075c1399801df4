"""Scoring head: a small MLP ending in one scalar output.

Hidden layers use the configured activation; the output layer is linear.
Dropout (inverted scaling) applies to hidden activations only, and only
when masks are supplied, so scoring/eval paths stay deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .tensor import activate, activate_grad_from_output, init_uniform


@dataclass
class MlpHead:
    weights: list  # per layer, [out, in]; final layer has out == 1
    biases: list
    activation: str = "relu"
    dropout: float = 0.0

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def hidden_widths(self) -> list:
        return [w.shape[0] for w in self.weights[:-1]]


@dataclass
class HeadTrace:
    inputs: list   # input vector to each layer (post-dropout for hidden ones)
    outputs: list  # pre-dropout hidden activations
    pres: list     # hidden pre-activations
    masks: list | None
    score: float


def build_head(input_width: int, hidden_widths, rng, activation="relu",
               dropout=0.0) -> MlpHead:
    if input_width < 1:
        raise ConfigError(f"head input width must be >= 1, got {input_width}")
    if not 0.0 <= dropout < 1.0:
        raise ConfigError(f"dropout must be in [0, 1), got {dropout}")
    widths = [input_width, *hidden_widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(init_uniform((fan_out, fan_in), fan_in, fan_out, rng))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpHead(weights=weights, biases=biases, activation=activation, dropout=dropout)


def draw_dropout_masks(head: MlpHead, rng: np.random.Generator):
    """One inverted-scaling mask per hidden layer; None when dropout is off."""
    if head.dropout == 0.0:
        return None
    keep = 1.0 - head.dropout
    return [
        (rng.random(w.shape[0]) < keep).astype(np.float64) / keep
        for w in head.weights[:-1]
    ]


def _first_layer_affine(w, b, v, split):
    """First-layer pre-activation, computed per input half when split is set.

    Splitting makes swapping two identical halves of the input bitwise
    neutral (float addition of the two half-products commutes), which the
    swap-symmetry property of tied siamese models relies on.
    """
    if split is None:
        return w @ v + b
    return (w[:, :split] @ v[:split]) + (w[:, split:] @ v[split:]) + b


def head_forward(head: MlpHead, v: np.ndarray, masks=None,
                 split: int | None = None) -> tuple[float, HeadTrace]:
    if v.shape[0] != head.input_width:
        raise ShapeError(
            f"head expects input width {head.input_width}, got {v.shape[0]}"
        )
    inputs, outputs, pres = [], [], []
    h = v
    n_hidden = len(head.weights) - 1
    for li in range(n_hidden):
        inputs.append(h)
        pre = _first_layer_affine(head.weights[li], head.biases[li], h,
                                  split if li == 0 else None)
        pres.append(pre)
        a = activate(pre, head.activation)
        outputs.append(a)
        h = a * masks[li] if masks is not None else a
    inputs.append(h)
    final = _first_layer_affine(head.weights[-1], head.biases[-1], h,
                                split if n_hidden == 0 else None)
    score = final.item()
    return score, HeadTrace(inputs=inputs, outputs=outputs, pres=pres,
                            masks=masks, score=score)


def head_backward(head: MlpHead, trace: HeadTrace, upstream: float):
    """Gradients of upstream * score w.r.t. head params and the input vector.

    Returns (weight_grads, bias_grads, input_grad).
    """
    wgrads = [None] * len(head.weights)
    bgrads = [None] * len(head.biases)
    d = np.array([upstream], dtype=np.float64)
    wgrads[-1] = np.outer(d, trace.inputs[-1])
    bgrads[-1] = d.copy()
    dh = head.weights[-1].T @ d
    for li in range(len(head.weights) - 2, -1, -1):
        if trace.masks is not None:
            dh = dh * trace.masks[li]
        dpre = dh * activate_grad_from_output(trace.outputs[li], head.activation)
        wgrads[li] = np.outer(dpre, trace.inputs[li])
        bgrads[li] = dpre
        dh = head.weights[li].T @ dpre
    return wgrads, bgrads, dh
