"""Trainable layer implementations with analytic backward passes.

Tensor layout is channels-last throughout: image batches are
(N, H, W, C), token batches are (N, L) integers, embedded sequences are
(N, L, D). Convolutions use same padding with stride 1 (for even kernels
the extra padding column goes on the right, TensorFlow style); max pooling
is non-overlapping with stride = kernel and floor division, so trailing
rows that do not fill a window are dropped and receive zero gradient.

Each layer caches what its backward pass needs during forward; a network
and its layers are owned by a single training session.
"""

from __future__ import annotations

import numpy as np

from ..genome import Activation


# ── activations ──────────────────────────────────────────────────────────────

LEAKY_SLOPE = 0.01
PRELU_INIT = 0.25


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-normalized softmax over the last axis, max-subtracted for stability."""
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _activation_forward(kind: Activation, z: np.ndarray, slope) -> np.ndarray:
    if kind is Activation.LINEAR:
        return z
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind is Activation.PRELU:
        return np.where(z > 0, z, slope * z)
    if kind is Activation.SIGMOID:
        return _sigmoid(z)
    if kind is Activation.SOFTMAX:
        return softmax(z)
    raise ValueError(f"unknown activation {kind}")


def _activation_backward(kind: Activation, z, a, da, slope):
    """Return (dz, dslope); dslope is None unless the activation is prelu."""
    if kind is Activation.LINEAR:
        return da, None
    if kind is Activation.RELU:
        return da * (z > 0), None
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, da, LEAKY_SLOPE * da), None
    if kind is Activation.PRELU:
        dz = np.where(z > 0, da, slope * da)
        neg = np.where(z > 0, 0.0, da * z)
        # one learned slope per channel: reduce over batch and positions
        dslope = neg.reshape(-1, neg.shape[-1]).sum(axis=0)
        return dz, dslope
    if kind is Activation.SIGMOID:
        return da * a * (1.0 - a), None
    if kind is Activation.SOFTMAX:
        return a * (da - (da * a).sum(axis=-1, keepdims=True)), None
    raise ValueError(f"unknown activation {kind}")


# ── layer base ───────────────────────────────────────────────────────────────

class LayerImpl:
    """Base for instantiated layers; params and grads stay index-aligned."""

    def __init__(self):
        self.params: list[np.ndarray] = []
        self.param_names: list[str] = []
        self.grads: list[np.ndarray] = []

    def forward(self, x, training: bool, rng, reuse_masks: bool = False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class _ActivatedLayer(LayerImpl):
    """Shared activation plumbing for convolution and dense layers."""

    def __init__(self, activation: Activation, channels: int, dtype):
        super().__init__()
        self.activation = activation
        self.slope = None
        if activation is Activation.PRELU:
            self.slope = np.full(channels, PRELU_INIT, dtype=dtype)

    def _register(self, names_and_arrays):
        for name, arr in names_and_arrays:
            self.param_names.append(name)
            self.params.append(arr)
        if self.slope is not None:
            self.param_names.append("slope")
            self.params.append(self.slope)

    def _activate(self, z):
        self._z = z
        self._a = _activation_forward(self.activation, z, self.slope)
        return self._a

    def _deactivate(self, da):
        dz, dslope = _activation_backward(self.activation, self._z, self._a, da, self.slope)
        self._dslope = dslope
        return dz


class Conv2DImpl(_ActivatedLayer):
    """2-D convolution, same padding, stride 1. W: (k, k, Cin, F)."""

    def __init__(self, in_channels: int, filters: int, kernel: int,
                 activation: Activation, rng: np.random.Generator, mean, std, dtype):
        super().__init__(activation, filters, dtype)
        self.kernel = kernel
        self.W = rng.normal(mean, std, size=(kernel, kernel, in_channels, filters)).astype(dtype)
        self.b = np.zeros(filters, dtype=dtype)
        self._register([("W", self.W), ("b", self.b)])

    def forward(self, x, training, rng, reuse_masks=False):
        k = self.kernel
        pl, pr = (k - 1) // 2, k // 2
        xp = np.pad(x, ((0, 0), (pl, pr), (pl, pr), (0, 0)))
        n, h, w, _ = x.shape
        z = np.zeros((n, h, w, self.W.shape[-1]), dtype=x.dtype)
        for a in range(k):
            for b in range(k):
                z += xp[:, a:a + h, b:b + w, :] @ self.W[a, b]
        z += self.b
        self._xp, self._x_shape = xp, x.shape
        return self._activate(z)

    def backward(self, dy):
        dz = self._deactivate(dy)
        k = self.kernel
        pl = (k - 1) // 2
        n, h, w, _ = self._x_shape
        dW = np.zeros_like(self.W)
        dxp = np.zeros_like(self._xp)
        for a in range(k):
            for b in range(k):
                patch = self._xp[:, a:a + h, b:b + w, :]
                dW[a, b] = np.tensordot(patch, dz, axes=([0, 1, 2], [0, 1, 2]))
                dxp[:, a:a + h, b:b + w, :] += dz @ self.W[a, b].T
        db = dz.sum(axis=(0, 1, 2))
        self.grads = [dW, db] + ([self._dslope] if self.slope is not None else [])
        return dxp[:, pl:pl + h, pl:pl + w, :]


class Conv1DImpl(_ActivatedLayer):
    """1-D convolution over sequence positions. W: (k, Cin, F)."""

    def __init__(self, in_channels: int, filters: int, kernel: int,
                 activation: Activation, rng: np.random.Generator, mean, std, dtype):
        super().__init__(activation, filters, dtype)
        self.kernel = kernel
        self.W = rng.normal(mean, std, size=(kernel, in_channels, filters)).astype(dtype)
        self.b = np.zeros(filters, dtype=dtype)
        self._register([("W", self.W), ("b", self.b)])

    def forward(self, x, training, rng, reuse_masks=False):
        k = self.kernel
        pl, pr = (k - 1) // 2, k // 2
        xp = np.pad(x, ((0, 0), (pl, pr), (0, 0)))
        n, length, _ = x.shape
        z = np.zeros((n, length, self.W.shape[-1]), dtype=x.dtype)
        for a in range(k):
            z += xp[:, a:a + length, :] @ self.W[a]
        z += self.b
        self._xp, self._x_shape = xp, x.shape
        return self._activate(z)

    def backward(self, dy):
        dz = self._deactivate(dy)
        k = self.kernel
        pl = (k - 1) // 2
        n, length, _ = self._x_shape
        dW = np.zeros_like(self.W)
        dxp = np.zeros_like(self._xp)
        for a in range(k):
            patch = self._xp[:, a:a + length, :]
            dW[a] = np.tensordot(patch, dz, axes=([0, 1], [0, 1]))
            dxp[:, a:a + length, :] += dz @ self.W[a].T
        db = dz.sum(axis=(0, 1))
        self.grads = [dW, db] + ([self._dslope] if self.slope is not None else [])
        return dxp[:, pl:pl + length, :]


class MaxPool2DImpl(LayerImpl):
    def __init__(self, kernel: int):
        super().__init__()
        self.kernel = kernel

    def forward(self, x, training, rng, reuse_masks=False):
        k = self.kernel
        n, h, w, c = x.shape
        ho, wo = h // k, w // k
        xc = x[:, :ho * k, :wo * k, :]
        view = (xc.reshape(n, ho, k, wo, k, c)
                  .transpose(0, 1, 3, 2, 4, 5)
                  .reshape(n, ho, wo, k * k, c))
        self._idx = view.argmax(axis=3)
        self._x_shape = x.shape
        return np.take_along_axis(view, self._idx[:, :, :, None, :], axis=3).squeeze(3)

    def backward(self, dy):
        k = self.kernel
        n, h, w, c = self._x_shape
        ho, wo = h // k, w // k
        dview = np.zeros((n, ho, wo, k * k, c), dtype=dy.dtype)
        np.put_along_axis(dview, self._idx[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
        dxc = (dview.reshape(n, ho, wo, k, k, c)
                    .transpose(0, 1, 3, 2, 4, 5)
                    .reshape(n, ho * k, wo * k, c))
        dx = np.zeros(self._x_shape, dtype=dy.dtype)
        dx[:, :ho * k, :wo * k, :] = dxc
        self.grads = []
        return dx


class MaxPool1DImpl(LayerImpl):
    def __init__(self, kernel: int):
        super().__init__()
        self.kernel = kernel

    def forward(self, x, training, rng, reuse_masks=False):
        k = self.kernel
        n, length, c = x.shape
        lo = length // k
        view = x[:, :lo * k, :].reshape(n, lo, k, c)
        self._idx = view.argmax(axis=2)
        self._x_shape = x.shape
        return np.take_along_axis(view, self._idx[:, :, None, :], axis=2).squeeze(2)

    def backward(self, dy):
        k = self.kernel
        n, length, c = self._x_shape
        lo = length // k
        dview = np.zeros((n, lo, k, c), dtype=dy.dtype)
        np.put_along_axis(dview, self._idx[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros(self._x_shape, dtype=dy.dtype)
        dx[:, :lo * k, :] = dview.reshape(n, lo * k, c)
        self.grads = []
        return dx


class DenseImpl(_ActivatedLayer):
    """Fully connected layer; flattens whatever shape it receives."""

    def __init__(self, in_features: int, units: int, activation: Activation,
                 rng: np.random.Generator, mean, std, dtype):
        super().__init__(activation, units, dtype)
        self.W = rng.normal(mean, std, size=(in_features, units)).astype(dtype)
        self.b = np.zeros(units, dtype=dtype)
        self._register([("W", self.W), ("b", self.b)])

    def forward(self, x, training, rng, reuse_masks=False):
        self._in_shape = x.shape
        x2 = x.reshape(x.shape[0], -1)
        self._x2 = x2
        return self._activate(x2 @ self.W + self.b)

    def backward(self, dy):
        dz = self._deactivate(dy)
        dW = self._x2.T @ dz
        db = dz.sum(axis=0)
        dx = (dz @ self.W.T).reshape(self._in_shape)
        self.grads = [dW, db] + ([self._dslope] if self.slope is not None else [])
        return dx


class DropoutImpl(LayerImpl):
    """Inverted dropout: training scales kept units by 1/keep_prob,
    inference is the identity."""

    def __init__(self, keep_prob: float):
        super().__init__()
        self.keep_prob = keep_prob
        self._mask = None

    def forward(self, x, training, rng, reuse_masks=False):
        if not training:
            self._training = False
            return x
        if not (reuse_masks and self._mask is not None and self._mask.shape == x.shape):
            self._mask = rng.random(x.shape) < self.keep_prob
        self._training = True
        return x * self._mask / self.keep_prob

    def backward(self, dy):
        self.grads = []
        if not self._training:
            return dy
        return dy * self._mask / self.keep_prob


class EmbeddingImpl(LayerImpl):
    """Token lookup table (vocab_size, output_dim); no bias, no activation."""

    def __init__(self, vocab_size: int, output_dim: int,
                 rng: np.random.Generator, mean, std, dtype):
        super().__init__()
        self.table = rng.normal(mean, std, size=(vocab_size, output_dim)).astype(dtype)
        self.param_names = ["table"]
        self.params = [self.table]

    def forward(self, x, training, rng, reuse_masks=False):
        self._tokens = np.asarray(x, dtype=np.int64)
        return self.table[self._tokens]

    def backward(self, dy):
        dtable = np.zeros_like(self.table)
        flat = self._tokens.reshape(-1)
        np.add.at(dtable, flat, dy.reshape(flat.shape[0], -1))
        self.grads = [dtable]
        return None  # nothing upstream of the token input
