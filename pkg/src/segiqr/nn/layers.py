"""Layer kinds for the minimal CNN engine.

Every layer implements shape inference, seeded parameter init, a batched
forward, and a backward that returns gradients for both the input and the
trainable parameters. All arrays are float32, NCHW layout for images.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from segiqr.errors import ConfigError

BN_EPS = 1e-5


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


class Layer:
    kind = "?"
    trainable: tuple[str, ...] = ()

    def __init__(self, index: int):
        self.index = index

    def out_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        raise NotImplementedError

    def init_params(self, rng: np.random.Generator, in_shape) -> dict[str, np.ndarray]:
        return {}

    def forward(self, x: np.ndarray, params, need_cache: bool):
        raise NotImplementedError

    def backward(self, dy: np.ndarray, params, cache):
        """Returns (dx, {param_name: grad}) for the cached forward call."""
        raise NotImplementedError

    def _err(self, msg: str) -> ConfigError:
        return ConfigError(f"layer {self.index} ({self.kind}): {msg}")


class Conv2d(Layer):
    kind = "conv2d"
    trainable = ("weight", "bias")

    def __init__(self, index, out_channels, kernel, stride=1, padding=0, in_channels=None):
        super().__init__(index)
        self.out_channels = int(out_channels)
        self.kh, self.kw = (kernel, kernel) if np.isscalar(kernel) else (kernel[0], kernel[1])
        self.stride = int(stride)
        self.padding = int(padding)
        self.declared_in = in_channels
        if self.out_channels < 1 or self.kh < 1 or self.kw < 1 or self.stride < 1 or self.padding < 0:
            raise self._err("invalid conv parameters")

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise self._err(f"expects C,H,W input, got {in_shape}")
        c, h, w = in_shape
        if self.declared_in is not None and self.declared_in != c:
            raise self._err(f"declared in_channels={self.declared_in} but previous layer produces {c} channels")
        ho = (h + 2 * self.padding - self.kh) // self.stride + 1
        wo = (w + 2 * self.padding - self.kw) // self.stride + 1
        if ho < 1 or wo < 1:
            raise self._err(f"kernel {self.kh}x{self.kw} does not fit {h}x{w} input")
        self.in_channels = c
        return (self.out_channels, ho, wo)

    def init_params(self, rng, in_shape):
        c = in_shape[0]
        fan_in = c * self.kh * self.kw
        return {
            "weight": he_uniform(rng, (self.out_channels, c, self.kh, self.kw), fan_in),
            "bias": np.zeros(self.out_channels, dtype=np.float32),
        }

    def _im2col(self, x):
        n = x.shape[0]
        p, s = self.padding, self.stride
        if p:
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(x, (self.kh, self.kw), axis=(2, 3))[:, :, ::s, ::s]
        ho, wo = win.shape[2], win.shape[3]
        cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5), dtype=np.float32)
        return cols.reshape(n * ho * wo, -1), ho, wo

    def forward(self, x, params, need_cache):
        n = x.shape[0]
        cols, ho, wo = self._im2col(x)
        w2 = params["weight"].reshape(self.out_channels, -1)
        y = cols @ w2.T
        y += params["bias"]
        y = np.ascontiguousarray(y.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2))
        cache = (cols, x.shape, ho, wo) if need_cache else None
        return y, cache

    def backward(self, dy, params, cache):
        cols, x_shape, ho, wo = cache
        n, c, h, w = x_shape
        p, s = self.padding, self.stride
        dy_mat = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(n * ho * wo, self.out_channels)
        dw = (dy_mat.T @ cols).reshape(params["weight"].shape)
        db = dy_mat.sum(axis=0)
        dcols = dy_mat @ params["weight"].reshape(self.out_channels, -1)
        dwin = dcols.reshape(n, ho, wo, c, self.kh, self.kw)
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=np.float32)
        for i in range(self.kh):
            for j in range(self.kw):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += dwin[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p:p + h, p:p + w] if p else dxp
        return dx, {"weight": dw, "bias": db}


class Relu(Layer):
    kind = "relu"

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, params, need_cache):
        y = np.maximum(x, 0.0)
        return y, (x > 0.0) if need_cache else None

    def backward(self, dy, params, cache):
        return dy * cache, {}


class MaxPool2x2(Layer):
    kind = "maxpool2x2"

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise self._err(f"expects C,H,W input, got {in_shape}")
        c, h, w = in_shape
        if h % 2 or w % 2:
            raise self._err(f"input height/width must be even, got {h}x{w}")
        return (c, h // 2, w // 2)

    def forward(self, x, params, need_cache):
        n, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        if not need_cache:
            xr = np.ascontiguousarray(x).reshape(n, c, h, w2, 2)
            m = np.maximum(xr[..., 0], xr[..., 1])
            return np.maximum(m[:, :, 0::2, :], m[:, :, 1::2, :]), None
        # 2x2 windows flattened to 4; argmax picks the first maximum, so ties
        # break deterministically toward the top-left pixel
        flat = x.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
        arg = flat.argmax(axis=4)
        y = np.take_along_axis(flat, arg[..., None], axis=4)[..., 0]
        return np.ascontiguousarray(y), (arg, x.shape)

    def backward(self, dy, params, cache):
        arg, x_shape = cache
        n, c, h, w = x_shape
        h2, w2 = h // 2, w // 2
        dflat = np.zeros((n, c, h2, w2, 4), dtype=np.float32)
        np.put_along_axis(dflat, arg[..., None], dy[..., None], axis=4)
        dx = dflat.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(x_shape)
        return np.ascontiguousarray(dx), {}


class Flatten(Layer):
    kind = "flatten"

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, params, need_cache):
        y = x.reshape(x.shape[0], -1)
        return y, x.shape if need_cache else None

    def backward(self, dy, params, cache):
        return dy.reshape(cache), {}


class Dense(Layer):
    kind = "dense"
    trainable = ("weight", "bias")

    def __init__(self, index, out_features, in_features=None):
        super().__init__(index)
        self.out_features = int(out_features)
        self.declared_in = in_features
        if self.out_features < 1:
            raise self._err("out_features must be >= 1")

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise self._err(f"expects a flat input (apply flatten first), got {in_shape}")
        if self.declared_in is not None and self.declared_in != in_shape[0]:
            raise self._err(f"declared in_features={self.declared_in} but previous layer produces {in_shape[0]} values")
        self.in_features = in_shape[0]
        return (self.out_features,)

    def init_params(self, rng, in_shape):
        return {
            "weight": he_uniform(rng, (in_shape[0], self.out_features), in_shape[0]),
            "bias": np.zeros(self.out_features, dtype=np.float32),
        }

    def forward(self, x, params, need_cache):
        y = x @ params["weight"]
        y += params["bias"]
        return y, x if need_cache else None

    def backward(self, dy, params, cache):
        dw = cache.T @ dy
        db = dy.sum(axis=0)
        dx = dy @ params["weight"].T
        return dx, {"weight": dw, "bias": db}


class BatchNormInference(Layer):
    """Affine normalization with stored statistics; statistics stay frozen.

    gamma and beta are trainable, mean and var are loaded or left at the
    identity-initialized 0/1, so the layer is deterministic per sample.
    """

    kind = "batchnorm-inference"
    trainable = ("gamma", "beta")

    def __init__(self, index, num_features):
        super().__init__(index)
        self.num_features = int(num_features)

    def out_shape(self, in_shape):
        channels = in_shape[0]
        if channels != self.num_features:
            raise self._err(f"num_features={self.num_features} but previous layer produces {channels} channels")
        self.spatial = len(in_shape) == 3
        return in_shape

    def init_params(self, rng, in_shape):
        c = self.num_features
        return {
            "gamma": np.ones(c, dtype=np.float32),
            "beta": np.zeros(c, dtype=np.float32),
            "mean": np.zeros(c, dtype=np.float32),
            "var": np.ones(c, dtype=np.float32),
        }

    def _bcast(self, v):
        return v.reshape(1, -1, 1, 1) if self.spatial else v.reshape(1, -1)

    def forward(self, x, params, need_cache):
        scale = params["gamma"] / np.sqrt(params["var"] + BN_EPS)
        shift = params["beta"] - params["mean"] * scale
        y = x * self._bcast(scale.astype(np.float32)) + self._bcast(shift.astype(np.float32))
        return y, x if need_cache else None

    def backward(self, dy, params, cache):
        inv = (1.0 / np.sqrt(params["var"] + BN_EPS)).astype(np.float32)
        xhat = (cache - self._bcast(params["mean"])) * self._bcast(inv)
        axes = (0, 2, 3) if self.spatial else (0,)
        dgamma = (dy * xhat).sum(axis=axes)
        dbeta = dy.sum(axis=axes)
        dx = dy * self._bcast(params["gamma"] * inv)
        return dx, {"gamma": dgamma, "beta": dbeta}


class Softmax(Layer):
    kind = "softmax"

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise self._err(f"expects a flat input, got {in_shape}")
        return in_shape

    def forward(self, x, params, need_cache):
        y = softmax(x)
        return y, y if need_cache else None

    def backward(self, dy, params, cache):
        y = cache
        dx = y * (dy - (dy * y).sum(axis=1, keepdims=True))
        return dx, {}


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable row-wise softmax."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


LAYER_KINDS = {
    cls.kind: cls
    for cls in (Conv2d, Relu, MaxPool2x2, Flatten, Dense, BatchNormInference, Softmax)
}
