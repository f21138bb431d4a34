"""Linear model over the hashed feature space.

Updates are perceptron-style two-vector differences with per-coordinate
AdaGrad step sizes and FOBOS L1 shrinkage applied only to the touched
coordinates at the moment they are updated.
"""

import json

import numpy as np


class WeightStore:
    """Dense weights + squared-gradient accumulators of one dimension count.

    Storage defaults to 4-byte floats (2**27 dims -> a 512MB-class weight
    array); all update arithmetic runs in float64 before rounding back.
    """

    def __init__(self, dim, eta=0.1, lam=0.0, delta=1.0, dtype=np.float32):
        if dim <= 0 or dim & (dim - 1):
            raise ValueError(f"dimension count must be a power of two, got {dim}")
        self.dim = dim
        self.eta = float(eta)
        self.lam = float(lam)
        self.delta = float(delta)
        self.dtype = np.dtype(dtype)
        self.weights = np.zeros(dim, dtype=self.dtype)
        self.gradsq = np.zeros(dim, dtype=self.dtype)
        self.config_digest = ""
        self.extra = {}

    def set_lambda_from_corpus(self, n_sentences, numerator=0.001):
        """The per-corpus L1 strength; numerator 0.001 is the good setting,
        0.1 the inferior baseline it was compared against."""
        if n_sentences < 1:
            raise ValueError("need at least one training sentence")
        self.lam = numerator / n_sentences
        return self.lam

    def set_lambda_from_dim(self, factor=0.05):
        # dimension-scaled preset; kept for completeness, corpus scaling
        # is the default path
        self.lam = factor / self.dim
        return self.lam

    def score(self, fv) -> float:
        if len(fv) == 0:
            return 0.0
        return float(self.weights[fv].sum(dtype=np.float64))

    def score_rows(self, rows) -> np.ndarray:
        """Row-wise scores for a 2D index matrix."""
        if rows.size == 0:
            return np.zeros(rows.shape[0])
        return self.weights[rows].sum(axis=1, dtype=np.float64)

    def update(self, fv_wrong, fv_right):
        """AdaGrad + FOBOS step on the indicator-difference gradient.

        Coordinates whose counts cancel between the two vectors are left
        completely untouched (no shrinkage, no accumulator growth).
        """
        idx = np.concatenate((np.asarray(fv_wrong, dtype=np.int64),
                              np.asarray(fv_right, dtype=np.int64)))
        if idx.size == 0:
            return
        signs = np.empty(idx.size, dtype=np.float64)
        signs[:len(fv_wrong)] = 1.0
        signs[len(fv_wrong):] = -1.0
        uniq, inverse = np.unique(idx, return_inverse=True)
        grad = np.zeros(uniq.size, dtype=np.float64)
        np.add.at(grad, inverse, signs)
        touched = grad != 0.0
        if not touched.any():
            return
        uniq = uniq[touched]
        grad = grad[touched]

        gs = self.gradsq[uniq].astype(np.float64) + grad * grad
        denom = np.sqrt(gs + self.delta)
        z = self.weights[uniq].astype(np.float64) - self.eta * grad / denom
        shrink = self.eta * self.lam / denom
        w = np.sign(z) * np.maximum(0.0, np.abs(z) - shrink)

        self.gradsq[uniq] = gs.astype(self.dtype)
        self.weights[uniq] = w.astype(self.dtype)

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def save(self, path, config_digest="", include_accumulators=True,
             extra=None):
        meta = json.dumps({
            "dim": self.dim,
            "eta": self.eta,
            "lam": self.lam,
            "delta": self.delta,
            "dtype": self.dtype.name,
            "config_digest": config_digest,
            "extra": extra or {},
        })
        arrays = {"weights": self.weights, "meta": np.frombuffer(
            meta.encode("utf-8"), dtype=np.uint8)}
        if include_accumulators:
            arrays["gradsq"] = self.gradsq
        np.savez_compressed(path, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            store = cls(meta["dim"], eta=meta["eta"], lam=meta["lam"],
                        delta=meta["delta"], dtype=np.dtype(meta["dtype"]))
            store.weights = data["weights"].astype(store.dtype, copy=False)
            if "gradsq" in data:
                store.gradsq = data["gradsq"].astype(store.dtype, copy=False)
            store.config_digest = meta.get("config_digest", "")
            store.extra = meta.get("extra", {})
        return store
