"""Feed-forward layers: dense, 1-D/2-D convolution, pooling, normalization.

Convolutions are stride-1 "same" unless a stride is given, with symmetric
zero padding of (k - 1) // 2 (plus k // 2 on the right for even 1-D
kernels, keeping the output length equal to the input length). Pooling is
non-overlapping max with stride equal to the pool size for the 1-D case.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .base import Block
from .init import fan_in_uniform


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


class Dense(Block):
    """Affine map over the last axis, with optional rectified-linear output."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, activation: str = "linear"):
        super().__init__()
        if activation not in ("linear", "relu"):
            raise ValidationError(f"unknown activation {activation!r}")
        self.in_dim, self.out_dim, self.activation = in_dim, out_dim, activation
        self.W = self.add_param("W", fan_in_uniform(rng, (in_dim, out_dim), in_dim))
        self.b = self.add_param("b", np.zeros(out_dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._lead = x.shape[:-1]
        x2 = x.reshape(-1, self.in_dim)
        z = x2 @ self.W + self.b
        y = _relu(z) if self.activation == "relu" else z
        self._x2, self._z = x2, z
        return y.reshape(*self._lead, self.out_dim)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dy2 = dy.reshape(-1, self.out_dim)
        if self.activation == "relu":
            dy2 = dy2 * (self._z > 0)
        self._grads["W"] += self._x2.T @ dy2
        self._grads["b"] += dy2.sum(axis=0)
        return (dy2 @ self.W.T).reshape(*self._lead, self.in_dim)


class Conv1d(Block):
    """Stride-1 same-length 1-D convolution: [n, length, c_in] -> [n, length, c_out]."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator, activation: str = "relu"):
        super().__init__()
        self.in_ch, self.out_ch, self.kernel, self.activation = in_ch, out_ch, kernel, activation
        self.W = self.add_param("W", fan_in_uniform(rng, (kernel, in_ch, out_ch), kernel * in_ch))
        self.b = self.add_param("b", np.zeros(out_ch))
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel // 2

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, length, _ = x.shape
        xp = np.pad(x, ((0, 0), (self.pad_left, self.pad_right), (0, 0)))
        z = np.tile(self.b, (n, length, 1))
        for j in range(self.kernel):
            z += xp[:, j : j + length, :] @ self.W[j]
        y = _relu(z) if self.activation == "relu" else z
        self._xp, self._z, self._length = xp, z, length
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        length = self._length
        if self.activation == "relu":
            dy = dy * (self._z > 0)
        self._grads["b"] += dy.sum(axis=(0, 1))
        dxp = np.zeros_like(self._xp)
        for j in range(self.kernel):
            self._grads["W"][j] += np.einsum("nlc,nld->cd", self._xp[:, j : j + length, :], dy)
            dxp[:, j : j + length, :] += dy @ self.W[j].T
        return dxp[:, self.pad_left : self.pad_left + length, :]


class MaxPool1d(Block):
    """Non-overlapping temporal max pooling; the length must divide evenly."""

    def __init__(self, pool: int, label: str = "pool"):
        super().__init__()
        self.pool = pool
        self.label = label

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, length, c = x.shape
        if length % self.pool:
            raise ValidationError(f"{self.label}: length {length} not divisible by pool size {self.pool}")
        windows = x.reshape(n, length // self.pool, self.pool, c)
        self._argmax = windows.argmax(axis=2)
        self._in_shape = x.shape
        return np.take_along_axis(windows, self._argmax[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        n, length, c = self._in_shape
        dwin = np.zeros((n, length // self.pool, self.pool, c))
        np.put_along_axis(dwin, self._argmax[:, :, None, :], dy[:, :, None, :], axis=2)
        return dwin.reshape(self._in_shape)


class Conv2d(Block):
    """2-D convolution over [n, h, w, c_in] with symmetric (k-1)//2 padding."""

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        activation: str = "relu",
    ):
        super().__init__()
        self.in_ch, self.out_ch, self.kernel = in_ch, out_ch, kernel
        self.stride, self.activation = stride, activation
        self.W = self.add_param("W", fan_in_uniform(rng, (kernel, kernel, in_ch, out_ch), kernel * kernel * in_ch))
        self.b = self.add_param("b", np.zeros(out_ch))
        self.pad = (kernel - 1) // 2

    def _out_hw(self, h: int, w: int) -> tuple[int, int]:
        ho = (h + 2 * self.pad - self.kernel) // self.stride + 1
        wo = (w + 2 * self.pad - self.kernel) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ValidationError(f"conv2d: spatial input {h}x{w} too small for kernel {self.kernel}")
        return ho, wo

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, _ = x.shape
        ho, wo = self._out_hw(h, w)
        s = self.stride
        xp = np.pad(x, ((0, 0), (self.pad, self.pad), (self.pad, self.pad), (0, 0)))
        z = np.tile(self.b, (n, ho, wo, 1))
        for i in range(self.kernel):
            for j in range(self.kernel):
                patch = xp[:, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s, :]
                z += patch @ self.W[i, j]
        y = _relu(z) if self.activation == "relu" else z
        self._xp, self._z, self._hw = xp, z, (h, w, ho, wo)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        h, w, ho, wo = self._hw
        s = self.stride
        if self.activation == "relu":
            dy = dy * (self._z > 0)
        self._grads["b"] += dy.sum(axis=(0, 1, 2))
        dxp = np.zeros_like(self._xp)
        for i in range(self.kernel):
            for j in range(self.kernel):
                rows = slice(i, i + s * (ho - 1) + 1, s)
                cols = slice(j, j + s * (wo - 1) + 1, s)
                patch = self._xp[:, rows, cols, :]
                self._grads["W"][i, j] += np.einsum("nhwc,nhwd->cd", patch, dy)
                dxp[:, rows, cols, :] += dy @ self.W[i, j].T
        return dxp[:, self.pad : self.pad + h, self.pad : self.pad + w, :]


class MaxPool2d(Block):
    """Max pooling with kernel/stride/padding (padding filled with -inf)."""

    def __init__(self, kernel: int, stride: int, pad: int = 0):
        super().__init__()
        self.kernel, self.stride, self.pad = kernel, stride, pad

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        k, s, p = self.kernel, self.stride, self.pad
        ho = (h + 2 * p - k) // s + 1
        wo = (w + 2 * p - k) // s + 1
        if ho < 1 or wo < 1:
            raise ValidationError(f"maxpool2d: spatial input {h}x{w} too small for kernel {k}")
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)), constant_values=-np.inf)
        stack = np.stack(
            [
                xp[:, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s, :]
                for i in range(k)
                for j in range(k)
            ],
            axis=-1,
        )
        self._argmax = stack.argmax(axis=-1)
        self._shapes = (x.shape, xp.shape, ho, wo)
        return np.take_along_axis(stack, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        (x_shape, xp_shape, ho, wo) = self._shapes
        k, s, p = self.kernel, self.stride, self.pad
        dxp = np.zeros(xp_shape)
        m = 0
        for i in range(k):
            for j in range(k):
                sel = self._argmax == m
                dxp[:, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s, :] += dy * sel
                m += 1
        h, w = x_shape[1], x_shape[2]
        return dxp[:, p : p + h, p : p + w, :]


class FrameNorm(Block):
    """Per-sample normalization over all non-batch axes with channel affine.

    A batch-statistics normalizer would couple frames across the batch
    and break exact mask insensitivity, so each frame is normalized
    against its own mean and variance instead.
    """

    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.channels, self.eps = channels, eps
        self.gamma = self.add_param("gamma", np.ones(channels))
        self.beta = self.add_param("beta", np.zeros(channels))

    def forward(self, x: np.ndarray) -> np.ndarray:
        axes = tuple(range(1, x.ndim))
        mean = x.mean(axis=axes, keepdims=True)
        var = x.var(axis=axes, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv
        self._xhat, self._inv, self._axes = xhat, inv, axes
        self._m = int(np.prod(x.shape[1:]))
        return self.gamma * xhat + self.beta

    def backward(self, dy: np.ndarray) -> np.ndarray:
        axes = self._axes
        reduce_affine = tuple(i for i in range(dy.ndim - 1))
        self._grads["gamma"] += (dy * self._xhat).sum(axis=reduce_affine)
        self._grads["beta"] += dy.sum(axis=reduce_affine)
        dxhat = dy * self.gamma
        mean_d = dxhat.mean(axis=axes, keepdims=True)
        mean_dx = (dxhat * self._xhat).mean(axis=axes, keepdims=True)
        return self._inv * (dxhat - mean_d - self._xhat * mean_dx)


class GlobalAvgPool2d(Block):
    """Spatial mean: [n, h, w, c] -> [n, c]."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        n, h, w, c = self._shape
        return np.broadcast_to(dy[:, None, None, :], self._shape) / (h * w)
