"""Plain linear classification head over frozen features.

Used as the comparison head in the redistribution analysis: same optimizer,
same losses, but a full (C, d) weight matrix instead of a shared prompt
offset, so it can carve the feature space freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .core import ClassSpace


@dataclass(frozen=True)
class LinearProbe:
    """Logits are feats @ W.T; W starts at zero and is fully trainable."""

    W: np.ndarray

    def __post_init__(self) -> None:
        W = np.ascontiguousarray(np.asarray(self.W, dtype=np.float64))
        if W.ndim != 2:
            raise ValueError("W must be a (C, d) matrix")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    def learnable(self) -> Dict[str, np.ndarray]:
        return {"W": self.W}

    def with_learnable(self, params: Dict[str, np.ndarray]) -> "LinearProbe":
        return LinearProbe(params["W"])

    def loss_and_grad(
        self,
        feats: np.ndarray,
        labels: np.ndarray,
        space: ClassSpace,
        class_subset: Sequence[int],
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        subset = [int(c) for c in class_subset]
        if not subset:
            raise ValueError("empty class subset")
        Z = np.asarray(feats, dtype=np.float64)
        y_cls = np.asarray(labels, dtype=np.int64)
        pos = {c: j for j, c in enumerate(subset)}
        try:
            y = np.array([pos[int(c)] for c in y_cls], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]} not in class subset") from None
        n = Z.shape[0]
        S = Z @ self.W[subset].T
        shift = S.max(axis=1, keepdims=True)
        lse = shift[:, 0] + np.log(np.sum(np.exp(S - shift), axis=1))
        loss = float(np.mean(lse - S[np.arange(n), y]))
        if not np.isfinite(loss):
            raise FloatingPointError("numerical overflow in cross-entropy loss")
        G = np.exp(S - lse[:, None])
        G[np.arange(n), y] -= 1.0
        G /= n
        dW = np.zeros_like(self.W)
        dW[subset] = G.T @ Z
        return loss, {"W": dW}

    def scores(self, feats: np.ndarray, space: ClassSpace) -> np.ndarray:
        return np.asarray(feats, dtype=np.float64) @ self.W.T


def init_linear_probe(C: int, d: int) -> LinearProbe:
    """Zero-initialized probe: the first forward pass is a uniform softmax."""
    if C < 1 or d < 1:
        raise ValueError("C and d must be positive")
    return LinearProbe(np.zeros((C, d)))
