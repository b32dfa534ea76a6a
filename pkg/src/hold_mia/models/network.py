"""Feedforward score network with layer normalization and manual backpropagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import NumericalError

FloatArray = NDArray[np.float64]

TIME_FEATURES = 3
LAYER_NORM_EPS = 1e-5


class ScoreModel(Protocol):
    """Anything mapping batched states and times to last-block scores."""

    def __call__(self, x: FloatArray, t: FloatArray) -> FloatArray:
        """Return scores of shape ``(batch, d)``."""
        ...


def time_features(t: ArrayLike, horizon: float) -> FloatArray:
    """[t/T, sin(2 pi t/T), cos(2 pi t/T)] per row."""
    s = np.asarray(t, dtype=np.float64).reshape(-1, 1) / horizon
    return np.hstack([s, np.sin(2.0 * np.pi * s), np.cos(2.0 * np.pi * s)])


def parameter_names(depth: int) -> list[str]:
    """Canonical parameter order: hidden layers first, output layer last."""
    names: list[str] = []
    for i in range(depth - 1):
        names += [f"w{i}", f"b{i}", f"ln_gain{i}", f"ln_bias{i}"]
    names += [f"w{depth - 1}", f"b{depth - 1}"]
    return names


def layer_sizes(n: int, d: int, depth: int, width: int) -> list[int]:
    return [n * d + TIME_FEATURES] + [width] * (depth - 1) + [d]


def parameter_shapes(
    n: int, d: int, depth: int, width: int
) -> dict[str, tuple[int, ...]]:
    sizes = layer_sizes(n, d, depth, width)
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(depth):
        shapes[f"w{i}"] = (sizes[i], sizes[i + 1])
        shapes[f"b{i}"] = (sizes[i + 1],)
        if i < depth - 1:
            shapes[f"ln_gain{i}"] = (sizes[i + 1],)
            shapes[f"ln_bias{i}"] = (sizes[i + 1],)
    return {name: shapes[name] for name in parameter_names(depth)}


@dataclass(frozen=True, eq=False)
class _LayerCache:
    inputs: FloatArray
    normalized: FloatArray
    inv_std: FloatArray
    activation: FloatArray


@dataclass(frozen=True, eq=False)
class ScoreNetwork:
    """
    s_theta(x_t, t): maps a state in R^{nd} and a time to a score in R^d.

    Hidden layers compute relu(layer_norm(h W + b)); the output layer is
    linear. ``depth`` counts linear layers, so depth 1 is a plain affine map.
    """

    n: int
    d: int
    depth: int
    width: int
    horizon: float
    params: dict[str, FloatArray] = field(repr=False)

    def __post_init__(self) -> None:
        expected = parameter_shapes(self.n, self.d, self.depth, self.width)
        if set(self.params) != set(expected):
            raise ValueError("network parameters do not match the architecture")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(
                    f"parameter {name} has shape {self.params[name].shape}, "
                    f"expected {shape}"
                )

    @property
    def input_dim(self) -> int:
        return self.n * self.d + TIME_FEATURES

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def parameter_vector(self) -> FloatArray:
        return np.concatenate(
            [self.params[name].ravel() for name in parameter_names(self.depth)]
        )

    def with_parameters(self, vector: ArrayLike) -> ScoreNetwork:
        """Same architecture, parameters taken from a flat vector."""
        flat = np.asarray(vector, dtype=np.float64)
        shapes = parameter_shapes(self.n, self.d, self.depth, self.width)
        if flat.size != sum(int(np.prod(s)) for s in shapes.values()):
            raise ValueError("parameter vector has the wrong length")
        params: dict[str, FloatArray] = {}
        offset = 0
        for name, shape in shapes.items():
            size = int(np.prod(shape))
            params[name] = flat[offset : offset + size].reshape(shape)
            offset += size
        return ScoreNetwork(
            self.n, self.d, self.depth, self.width, self.horizon, params
        )

    def __call__(self, x: FloatArray, t: FloatArray) -> FloatArray:
        out, _, _ = self._forward(x, t)
        return out

    def _inputs(self, x: ArrayLike, t: ArrayLike) -> FloatArray:
        xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
        ts = np.broadcast_to(np.asarray(t, dtype=np.float64), (xs.shape[0],))
        if xs.shape[1] != self.n * self.d:
            raise ValueError(
                f"state has {xs.shape[1]} entries, expected {self.n * self.d}"
            )
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ts))):
            raise NumericalError("network input is not finite")
        return np.hstack([xs, time_features(ts, self.horizon)])

    def _forward(
        self, x: ArrayLike, t: ArrayLike
    ) -> tuple[FloatArray, list[_LayerCache], FloatArray]:
        h = self._inputs(x, t)
        caches: list[_LayerCache] = []
        for i in range(self.depth - 1):
            z = h @ self.params[f"w{i}"] + self.params[f"b{i}"]
            centered = z - z.mean(axis=1, keepdims=True)
            variance = (centered**2).mean(axis=1, keepdims=True)
            inv_std = 1.0 / np.sqrt(variance + LAYER_NORM_EPS)
            normalized = centered * inv_std
            a = normalized * self.params[f"ln_gain{i}"] + self.params[f"ln_bias{i}"]
            caches.append(_LayerCache(h, normalized, inv_std, a))
            h = np.maximum(a, 0.0)
        last = self.depth - 1
        out = h @ self.params[f"w{last}"] + self.params[f"b{last}"]
        return out, caches, h

    def backward(
        self, x: ArrayLike, t: ArrayLike, upstream: ArrayLike
    ) -> dict[str, FloatArray]:
        """Gradients of sum_b <upstream_b, s_theta(x_b, t_b)> for every parameter."""
        _, caches, h_last = self._forward(x, t)
        up = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
        grads: dict[str, FloatArray] = {}

        last = self.depth - 1
        grads[f"w{last}"] = h_last.T @ up
        grads[f"b{last}"] = up.sum(axis=0)
        dh = up @ self.params[f"w{last}"].T

        for i in range(self.depth - 2, -1, -1):
            cache = caches[i]
            da = dh * (cache.activation > 0)
            grads[f"ln_gain{i}"] = (da * cache.normalized).sum(axis=0)
            grads[f"ln_bias{i}"] = da.sum(axis=0)
            dn = da * self.params[f"ln_gain{i}"]
            dz = cache.inv_std * (
                dn
                - dn.mean(axis=1, keepdims=True)
                - cache.normalized * (dn * cache.normalized).mean(axis=1, keepdims=True)
            )
            grads[f"w{i}"] = cache.inputs.T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            dh = dz @ self.params[f"w{i}"].T

        return {name: grads[name] for name in parameter_names(self.depth)}


def init_network(
    n: int,
    d: int,
    depth: int,
    width: int,
    horizon: float,
    rng: np.random.Generator,
    *,
    zero_output: bool = False,
) -> ScoreNetwork:
    """He-initialized hidden layers, unit layer-norm gains, zero biases."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > 1 and width < 2:
        raise ValueError("layer normalization needs width >= 2")
    params: dict[str, FloatArray] = {}
    for name, shape in parameter_shapes(n, d, depth, width).items():
        if name.startswith("w"):
            fan_in = shape[0]
            is_output = name == f"w{depth - 1}"
            if is_output and zero_output:
                params[name] = np.zeros(shape)
            else:
                gain = 1.0 if is_output else 2.0
                params[name] = rng.normal(0.0, np.sqrt(gain / fan_in), size=shape)
        elif name.startswith("ln_gain"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return ScoreNetwork(n, d, depth, width, horizon, params)


def net_forward(net: ScoreNetwork, x: ArrayLike, t: ArrayLike) -> FloatArray:
    """Score for one state (shape ``(nd,)``) or a batch (shape ``(B, nd)``)."""
    single = np.ndim(x) == 1
    out = net(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    return out[0] if single else out


def net_gradient(
    net: ScoreNetwork, x: ArrayLike, t: ArrayLike, upstream: ArrayLike
) -> dict[str, FloatArray]:
    """Exact parameter gradients of <upstream, net_forward(net, x, t)>."""
    return net.backward(x, t, upstream)
