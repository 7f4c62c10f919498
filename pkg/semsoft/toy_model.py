"""
Linear or one-hidden-layer (ReLU) classifier with hand-written backprop.
"""

from pathlib import Path
from typing import Any, Optional

import numpy as np

from semsoft.errors import ManifestIOError, ShapeMismatch


class ToyModel:
    """
    logits = X @ weights + bias, or with a hidden layer
    logits = relu(X @ hidden_weights + hidden_bias) @ weights + bias.
    """

    def __init__(self, params: dict[str, np.ndarray]) -> None:
        self.params = params

    @classmethod
    def initialize(
        cls,
        feature_dim: int,
        num_outputs: int,
        hidden_width: Optional[int] = None,
        seed: int = 0,
    ) -> "ToyModel":
        """Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
        rng = np.random.default_rng(seed)

        def uniform(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        params: dict[str, np.ndarray] = {}
        fan_in = feature_dim
        if hidden_width:
            params["hidden_weights"] = uniform(feature_dim, (feature_dim, hidden_width))
            params["hidden_bias"] = uniform(feature_dim, (hidden_width,))
            fan_in = hidden_width
        params["weights"] = uniform(fan_in, (fan_in, num_outputs))
        params["bias"] = uniform(fan_in, (num_outputs,))
        return cls(params)

    @property
    def has_hidden(self) -> bool:
        return "hidden_weights" in self.params

    @property
    def feature_dim(self) -> int:
        key = "hidden_weights" if self.has_hidden else "weights"
        return int(self.params[key].shape[0])

    @property
    def num_outputs(self) -> int:
        return int(self.params["weights"].shape[1])

    def forward(self, features: np.ndarray) -> tuple[np.ndarray, dict[str, Any]]:
        """Logits for a (batch, feature_dim) array plus the cache backward needs."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.feature_dim:
            raise ShapeMismatch(f"features {x.shape} vs model feature_dim {self.feature_dim}")
        cache: dict[str, Any] = {"x": x}
        h = x
        if self.has_hidden:
            pre = x @ self.params["hidden_weights"] + self.params["hidden_bias"]
            h = np.maximum(pre, 0.0)
            cache["pre"] = pre
        cache["h"] = h
        return h @ self.params["weights"] + self.params["bias"], cache

    def backward(self, cache: dict[str, Any], dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given d(loss)/d(logits)."""
        h = cache["h"]
        grads = {
            "weights": h.T @ dlogits,
            "bias": dlogits.sum(axis=0),
        }
        if self.has_hidden:
            dh = (dlogits @ self.params["weights"].T) * (cache["pre"] > 0.0)
            grads["hidden_weights"] = cache["x"].T @ dh
            grads["hidden_bias"] = dh.sum(axis=0)
        return grads

    def copy(self) -> "ToyModel":
        return ToyModel({k: v.copy() for k, v in self.params.items()})

    def save(self, path: str | Path) -> None:
        try:
            with open(path, "wb") as f:
                np.savez(f, **self.params)
        except OSError as e:
            raise ManifestIOError(path, str(e)) from e

    @classmethod
    def load(cls, path: str | Path) -> "ToyModel":
        try:
            with np.load(path) as archive:
                return cls({k: archive[k].astype(np.float64) for k in archive.files})
        except OSError as e:
            raise ManifestIOError(path, str(e)) from e
