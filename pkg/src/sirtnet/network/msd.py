"""Mixed-scale dense network: dilated convolutions, forward pass with an
activation tape, and exact reverse-mode gradients.

Architecture: ``depth`` hidden layers, each producing a single channel from a
3x3 dilated convolution over the input image concatenated with every earlier
hidden output, followed by ReLU.  Layer i uses dilation (i mod period) + 1.
The output is a 1x1 convolution over all depth+1 channels squashed by tanh,
so predictions live strictly inside (-1, 1).

Parameters are stored as one flat float64 vector in checkpoint order (hidden
layers first, each as weights in (channel, ky, kx) order then bias; then the
output weights and bias), which keeps the optimizer and the file format
trivially in sync.
"""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = [
    "ConvKernel",
    "MsdNetwork",
    "Tape",
    "conv2d_dilated",
    "mse_loss",
    "msd_forward",
    "msd_backward",
    "parameter_count",
]


def parameter_count(depth: int) -> int:
    """Total parameter count: hidden kernels 9*(i+1)+1 for i in 0..depth-1,
    output kernel depth+2."""
    return 9 * depth * (depth + 1) // 2 + depth + (depth + 1) + 1


@dataclasses.dataclass
class ConvKernel:
    """A 3x3 dilated convolution kernel over ``in_channels`` input channels.

    ``weights`` is shaped (in_channels, 3, 3); ``bias`` is a scalar added to
    the linear response.  The activation is the caller's business.
    """

    weights: np.ndarray
    bias: float
    dilation: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[1:] != (3, 3):
            raise ValueError(
                f"weights must be shaped (in_channels, 3, 3), got {self.weights.shape}"
            )
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("kernel parameters must be finite")
        if self.dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {self.dilation}")

    @property
    def in_channels(self) -> int:
        return self.weights.shape[0]


def _conv_forward(x: np.ndarray, weights: np.ndarray, bias: float, dilation: int) -> np.ndarray:
    """Batched dilated 3x3 convolution: (B, C, n, n) -> (B, n, n).

    Zero padding of width ``dilation`` keeps the output the same size as the
    input.  Accumulates one shifted slab per kernel tap.
    """
    batch, channels, n, _ = x.shape
    d = dilation
    padded = np.pad(x, ((0, 0), (0, 0), (d, d), (d, d)))
    out = np.full((batch, n, n), float(bias), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            slab = padded[:, :, ky * d : ky * d + n, kx * d : kx * d + n]
            out += np.tensordot(weights[:, ky, kx], slab, axes=([0], [1]))
    return out


def _conv_backward(
    x: np.ndarray, weights: np.ndarray, dilation: int, g_out: np.ndarray
) -> tuple[np.ndarray, float, np.ndarray]:
    """Gradients of _conv_forward: returns (g_weights, g_bias, g_input)."""
    batch, channels, n, _ = x.shape
    d = dilation
    padded = np.pad(x, ((0, 0), (0, 0), (d, d), (d, d)))
    g_weights = np.empty_like(weights)
    g_padded = np.zeros_like(padded)
    for ky in range(3):
        for kx in range(3):
            slab = padded[:, :, ky * d : ky * d + n, kx * d : kx * d + n]
            g_weights[:, ky, kx] = np.einsum("bij,bcij->c", g_out, slab)
            g_slab = g_padded[:, :, ky * d : ky * d + n, kx * d : kx * d + n]
            g_slab += weights[None, :, ky, kx, None, None] * g_out[:, None]
    g_bias = float(g_out.sum())
    g_input = g_padded[:, :, d : d + n, d : d + n]
    return g_weights, g_bias, g_input


def conv2d_dilated(x, kernel: ConvKernel) -> np.ndarray:
    """Single-sample dilated convolution plus bias, no activation.

    ``x`` is (in_channels, n, n), or (n, n) for a single channel.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"input must be (channels, n, n), got {arr.shape}")
    if arr.shape[0] != kernel.in_channels:
        raise ValueError(
            f"input has {arr.shape[0]} channels, kernel expects {kernel.in_channels}"
        )
    return _conv_forward(arr[None], kernel.weights, kernel.bias, kernel.dilation)[0]


@dataclasses.dataclass
class Tape:
    """Activation record of one forward pass, consumed by msd_backward.

    ``stack`` holds the input image and every hidden layer's post-activation
    output, shaped (B, depth+1, n, n); ``output`` is the tanh prediction.
    ``version`` pins the parameter vector the pass used, so a tape cannot be
    replayed against updated parameters.
    """

    stack: np.ndarray
    output: np.ndarray
    version: int
    squeeze: bool


class MsdNetwork:
    """Parameter container plus layout bookkeeping for the dense network.

    The flat ``theta`` vector owns the parameters; kernel accessors return
    reshaped views into it.  Any mutation must go through ``set_theta`` (or
    write via the views and call ``touch``) so the version counter advances.
    """

    def __init__(self, depth: int, dilation_period: int = 10, theta: np.ndarray | None = None):
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        if dilation_period < 1:
            raise ValueError(f"dilation_period must be >= 1, got {dilation_period}")
        self.depth = depth
        self.dilation_period = dilation_period
        self.n_params = parameter_count(depth)
        if theta is None:
            theta = np.zeros(self.n_params, dtype=np.float64)
        else:
            theta = np.asarray(theta, dtype=np.float64).copy()
            if theta.shape != (self.n_params,):
                raise ValueError(
                    f"theta has {theta.shape} entries, depth {depth} needs {self.n_params}"
                )
        self.theta = theta
        self.version = 0
        self._hidden_offsets = []
        off = 0
        for i in range(depth):
            self._hidden_offsets.append(off)
            off += 9 * (i + 1) + 1
        self._output_offset = off

    def dilation(self, layer: int) -> int:
        return (layer % self.dilation_period) + 1

    def hidden_weights(self, layer: int) -> np.ndarray:
        off = self._hidden_offsets[layer]
        return self.theta[off : off + 9 * (layer + 1)].reshape(layer + 1, 3, 3)

    def hidden_bias(self, layer: int) -> float:
        off = self._hidden_offsets[layer]
        return float(self.theta[off + 9 * (layer + 1)])

    def hidden_kernel(self, layer: int) -> ConvKernel:
        return ConvKernel(
            weights=self.hidden_weights(layer).copy(),
            bias=self.hidden_bias(layer),
            dilation=self.dilation(layer),
        )

    @property
    def output_weights(self) -> np.ndarray:
        off = self._output_offset
        return self.theta[off : off + self.depth + 1]

    @property
    def output_bias(self) -> float:
        return float(self.theta[-1])

    def set_theta(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != self.theta.shape:
            raise ValueError(f"expected {self.theta.shape} parameters, got {theta.shape}")
        self.theta = theta.copy()
        self.touch()

    def touch(self) -> None:
        """Advance the version counter after an in-place parameter edit."""
        self.version += 1

    def grad_slices(self):
        """(name, slice) pairs describing the flat parameter layout."""
        pairs = []
        for i in range(self.depth):
            off = self._hidden_offsets[i]
            pairs.append((f"hidden_{i}_weights", slice(off, off + 9 * (i + 1))))
            pairs.append((f"hidden_{i}_bias", slice(off + 9 * (i + 1), off + 9 * (i + 1) + 1)))
        off = self._output_offset
        pairs.append(("output_weights", slice(off, off + self.depth + 1)))
        pairs.append(("output_bias", slice(self.n_params - 1, self.n_params)))
        return pairs


def _as_batch(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None], True
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"input must be (n, n) or (batch, n, n), got {arr.shape}")
    return arr, False


def msd_forward(net: MsdNetwork, x) -> tuple[np.ndarray, Tape]:
    """Evaluate the network; returns (output, tape).

    Accepts a single (n, n) image or a (batch, n, n) stack; the output
    matches the input's rank.
    """
    batch, squeeze = _as_batch(x)
    b, n = batch.shape[0], batch.shape[1]
    stack = np.empty((b, net.depth + 1, n, n), dtype=np.float64)
    stack[:, 0] = batch
    for i in range(net.depth):
        pre = _conv_forward(
            stack[:, : i + 1], net.hidden_weights(i), net.hidden_bias(i), net.dilation(i)
        )
        np.maximum(pre, 0.0, out=stack[:, i + 1])
    pre_out = np.tensordot(net.output_weights, stack, axes=([0], [1])) + net.output_bias
    y = np.tanh(pre_out)
    tape = Tape(stack=stack, output=y, version=net.version, squeeze=squeeze)
    return (y[0] if squeeze else y), tape


def msd_apply(net: MsdNetwork, x) -> np.ndarray:
    """Inference-only forward pass."""
    out, _ = msd_forward(net, x)
    return out


def msd_backward(net: MsdNetwork, tape: Tape, loss_gradient) -> np.ndarray:
    """Exact gradient of the loss w.r.t. every parameter, as a flat vector.

    ``loss_gradient`` is dLoss/dOutput with the same shape the forward pass
    returned.  Rejects tapes recorded under a different parameter version.
    """
    if tape.version != net.version:
        raise ValueError(
            "stale tape: parameters changed since this forward pass "
            f"(tape version {tape.version}, network version {net.version})"
        )
    g_y = np.asarray(loss_gradient, dtype=np.float64)
    if tape.squeeze:
        g_y = g_y[None]
    if g_y.shape != tape.output.shape:
        raise ValueError(
            f"loss gradient shape {g_y.shape} does not match output {tape.output.shape}"
        )
    stack = tape.stack
    grad = np.zeros(net.n_params, dtype=np.float64)
    # Output layer: y = tanh(w . stack + b)
    g_pre_out = g_y * (1.0 - tape.output**2)
    off = net._output_offset
    grad[off : off + net.depth + 1] = np.einsum("bij,bcij->c", g_pre_out, stack)
    grad[-1] = g_pre_out.sum()
    # Every hidden output feeds the output layer and all later hidden layers;
    # g_stack accumulates both contributions as we walk backwards.
    g_stack = net.output_weights[None, :, None, None] * g_pre_out[:, None]
    for i in range(net.depth - 1, -1, -1):
        g_pre = g_stack[:, i + 1] * (stack[:, i + 1] > 0.0)
        g_w, g_b, g_in = _conv_backward(
            stack[:, : i + 1], net.hidden_weights(i), net.dilation(i), g_pre
        )
        h_off = net._hidden_offsets[i]
        grad[h_off : h_off + 9 * (i + 1)] = g_w.ravel()
        grad[h_off + 9 * (i + 1)] = g_b
        g_stack[:, : i + 1] += g_in
    return grad


def mse_loss(output, target) -> float:
    """Mean squared error over every element of the batch."""
    o = np.asarray(output, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if o.shape != t.shape:
        raise ValueError(f"output shape {o.shape} does not match target {t.shape}")
    return float(np.mean((o - t) ** 2))


def mse_loss_gradient(output, target) -> np.ndarray:
    """dLoss/dOutput for mse_loss: 2 (o - t) / count."""
    o = np.asarray(output, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    return 2.0 * (o - t) / o.size
