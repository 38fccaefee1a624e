"""Per-kernel identity classifier (trained elsewhere, loaded from a sidecar).

Sidecar layout, little-endian: uint32 F, uint32 K, then F×K float32 weights
row-major, then K float32 biases.
"""

import numpy as np


class IdentityClassifier:
    def __init__(self, weights, bias=None):
        self.weights = np.ascontiguousarray(weights, dtype=np.float32)  # (F, K)
        if self.weights.ndim != 2:
            raise ValueError("weights must be (F, K)")
        f, k = self.weights.shape
        if k < 1:
            raise ValueError("need at least one class")
        self.bias = (
            np.ascontiguousarray(bias, dtype=np.float32) if bias is not None else np.zeros(k, np.float32)
        )
        if self.bias.shape != (k,):
            raise ValueError(f"bias must be ({k},)")

    @property
    def feature_dim(self):
        return self.weights.shape[0]

    @property
    def num_classes(self):
        return self.weights.shape[1]

    def logits(self, features):
        features = np.asarray(features, dtype=np.float32)
        if features.shape[-1] != self.feature_dim:
            raise ValueError(
                f"feature dim {features.shape[-1]} does not match classifier {self.feature_dim}"
            )
        return features @ self.weights + self.bias

    def probabilities(self, features):
        """Row-wise softmax over the K classes."""
        z = self.logits(features).astype(np.float64)
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    def save(self, path):
        f, k = self.weights.shape
        with open(path, "wb") as fh:
            fh.write(np.asarray([f, k], dtype="<u4").tobytes())
            fh.write(self.weights.astype("<f4").tobytes())
            fh.write(self.bias.astype("<f4").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            header = np.frombuffer(fh.read(8), dtype="<u4")
            if len(header) != 2:
                raise ValueError("classifier sidecar truncated (header)")
            f, k = int(header[0]), int(header[1])
            w = np.frombuffer(fh.read(4 * f * k), dtype="<f4")
            b = np.frombuffer(fh.read(4 * k), dtype="<f4")
        if len(w) != f * k or len(b) != k:
            raise ValueError("classifier sidecar truncated (payload)")
        return cls(w.reshape(f, k).copy(), b.copy())
