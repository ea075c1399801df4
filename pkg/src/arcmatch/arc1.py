"""Siamese matching architecture (ARC-I).

Each sentence is encoded independently by a convolutional sentence model;
the two fixed-length vectors are concatenated and scored by the MLP head.
The two encoders may share parameters (tie_weights) when the task is
homogeneous.
"""

from dataclasses import dataclass

import numpy as np

from .conv_sentence import (SentenceModelConfig, SentenceModelParams, encode,
                            encode_backward, init_sentence_params)
from .errors import ConfigError
from .mlp import MlpHead, build_head, head_backward, head_forward


@dataclass
class Arc1Trace:
    vec_x: np.ndarray
    vec_y: np.ndarray
    enc_x: object
    enc_y: object
    head: object
    score: float


@dataclass
class Arc1Model:
    config_x: SentenceModelConfig
    config_y: SentenceModelConfig
    params_x: SentenceModelParams
    params_y: SentenceModelParams  # aliases params_x when tie_weights
    head: MlpHead
    tie_weights: bool = False
    kind: str = "arc1"

    def score(self, sx, sy, masks=None):
        vec_x, enc_x = encode(sx, self.params_x, self.config_x)
        vec_y, enc_y = encode(sy, self.params_y, self.config_y)
        s, head_trace = head_forward(self.head, np.concatenate([vec_x, vec_y]),
                                     masks, split=vec_x.shape[0])
        return s, Arc1Trace(vec_x=vec_x, vec_y=vec_y, enc_x=enc_x, enc_y=enc_y,
                            head=head_trace, score=s)

    def backward(self, trace: Arc1Trace, upstream: float):
        wg, bg, dvec = head_backward(self.head, trace.head, upstream)
        nx = trace.vec_x.shape[0]
        gx, dx = encode_backward(trace.enc_x, self.params_x, self.config_x, dvec[:nx])
        gy, dy = encode_backward(trace.enc_y, self.params_y, self.config_y, dvec[nx:])
        grads = {}
        if self.tie_weights:
            for li, ((dwx, dbx), (dwy, dby)) in enumerate(zip(gx, gy)):
                grads[f"enc_x.{li}.w"] = dwx + dwy
                grads[f"enc_x.{li}.b"] = dbx + dby
        else:
            for li, (dw, db) in enumerate(gx):
                grads[f"enc_x.{li}.w"] = dw
                grads[f"enc_x.{li}.b"] = db
            for li, (dw, db) in enumerate(gy):
                grads[f"enc_y.{li}.w"] = dw
                grads[f"enc_y.{li}.b"] = db
        for li, (dw, db) in enumerate(zip(wg, bg)):
            grads[f"head.{li}.w"] = dw
            grads[f"head.{li}.b"] = db
        return grads, dx, dy

    def named_params(self):
        """Fixed order: encoder layers ascending (w before b), head last."""
        out = []
        for li, (w, b) in enumerate(self.params_x.layers):
            out.append((f"enc_x.{li}.w", w))
            out.append((f"enc_x.{li}.b", b))
        if not self.tie_weights:
            for li, (w, b) in enumerate(self.params_y.layers):
                out.append((f"enc_y.{li}.w", w))
                out.append((f"enc_y.{li}.b", b))
        for li, (w, b) in enumerate(zip(self.head.weights, self.head.biases)):
            out.append((f"head.{li}.w", w))
            out.append((f"head.{li}.b", b))
        return out


def build_arc1(embed_dim: int, max_len: int, rng,
               windows=(3, 2), feature_maps=(16, 16), hidden=(128,),
               activation="relu", dropout=0.0, tie_weights=False,
               max_len_y=None) -> Arc1Model:
    """Assemble a siamese model with freshly initialized parameters."""
    config_x = SentenceModelConfig(embed_dim=embed_dim, max_len=max_len,
                                   windows=tuple(windows),
                                   feature_maps=tuple(feature_maps),
                                   activation=activation)
    config_y = SentenceModelConfig(embed_dim=embed_dim,
                                   max_len=max_len if max_len_y is None else max_len_y,
                                   windows=tuple(windows),
                                   feature_maps=tuple(feature_maps),
                                   activation=activation)
    config_x.validate()
    config_y.validate()
    if tie_weights and config_x != config_y:
        raise ConfigError("tie_weights requires identical encoder configs")
    params_x = init_sentence_params(config_x, rng)
    params_y = params_x if tie_weights else init_sentence_params(config_y, rng)
    head = build_head(config_x.output_len + config_y.output_len, hidden, rng,
                      activation=activation, dropout=dropout)
    return Arc1Model(config_x=config_x, config_y=config_y,
                     params_x=params_x, params_y=params_y,
                     head=head, tie_weights=tie_weights)
