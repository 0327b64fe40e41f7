"""Minimal reverse-mode differentiation over multichannel 2-D arrays.

Exactly the operations the interpolation network and its losses need, in
float64 throughout: standard and partial 3x3-style convolutions (same-size,
symmetric zero padding), ReLU, 2x2 max pooling, nearest-neighbor upsampling,
channel concatenation, elementwise arithmetic, and scalar reductions.

Graph model: every operation returns a new Tensor that records its parents
and a vector-Jacobian closure. ``backward(loss)`` collects the reachable
graph into a Tape (a valid execution order), seeds the scalar loss with
gradient 1, and walks the tape in reverse, accumulating into ``.grad`` of
every tensor with ``requires_grad``. A graph can be walked once; calling
backward twice on the same graph raises rather than silently accumulating.

Convolutions are im2col + GEMM: patch matrices are built once per call and
saved for the backward pass, so forward+backward costs three GEMMs of equal
size. Partial convolution masks are single-channel and non-differentiable;
their window counts use a separate cheap im2col over the mask only.

Every forward op hard-fails on NaN/Inf output (toggle CHECK_FINITE for the
rare profiling session that cannot afford the scan).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import GraphError, MaskError, NonFiniteError, ParameterError, ShapeError

__all__ = [
    "CHECK_FINITE",
    "Tensor",
    "Tape",
    "ConvParams",
    "constant",
    "parameter",
    "add",
    "sub",
    "mul",
    "scale",
    "square",
    "ssum",
    "mean_all",
    "relu",
    "conv2d",
    "pconv2d",
    "conv2d_s2",
    "pconv2d_s2",
    "downsample2",
    "upsample2",
    "concat_channels",
    "crop",
    "mask_downsample2",
    "mask_or",
    "backward",
    "zero_grads",
    "AdamState",
    "adam_step",
    "init_conv_params",
]

CHECK_FINITE = True

# Global creation counter: sorting graph nodes by it recovers the exact
# execution order, which backward then walks reversed.
_SEQ = itertools.count()


class Tensor:
    """A float64 array node in the differentiation graph.

    Feature tensors are (channels, height, width); loss values are scalars
    (shape ()). ``grad`` is allocated lazily by the backward pass.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp", "_op",
                 "_consumed", "_seq")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple = (), vjp=None, op: str = "leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._vjp = vjp
        self._op = op
        self._consumed = False
        self._seq = next(_SEQ)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Tensor(op={self._op}, shape={self.data.shape}, grad={self.requires_grad})"


@dataclass
class Tape:
    """Ordered record of the operations reachable from a loss node.

    The order is a valid execution order of the recorded graph (parents
    always precede children); backward walks it reversed. Re-running the
    same inputs through the same ops reproduces identical values, which is
    what makes training deterministic.
    """

    nodes: list = field(default_factory=list)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _finalize(op: str, data: np.ndarray, parents: tuple, vjp) -> Tensor:
    if CHECK_FINITE and not np.all(np.isfinite(data)):
        raise NonFiniteError(f"operation '{op}' produced NaN/Inf output")
    needs = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=needs, parents=parents,
                  vjp=vjp if needs else None, op=op)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        # Copy: g may be a view into a buffer the caller still owns.
        t.grad = np.array(g, dtype=np.float64)
        if t.grad.shape != t.data.shape:
            t.grad = np.broadcast_to(t.grad, t.data.shape).copy()
    else:
        t.grad += g


# ---------------------------------------------------------------------------
# Elementwise arithmetic and reductions


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")

    def vjp(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return _finalize("add", a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")

    def vjp(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    return _finalize("sub", a.data - b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")

    def vjp(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _finalize("mul", a.data * b.data, (a, b), vjp)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)

    def vjp(g):
        _accumulate(a, g * s)

    return _finalize("scale", a.data * s, (a,), vjp)


def square(a: Tensor) -> Tensor:
    def vjp(g):
        _accumulate(a, 2.0 * g * a.data)

    return _finalize("square", a.data * a.data, (a,), vjp)


def ssum(a: Tensor) -> Tensor:
    def vjp(g):
        _accumulate(a, np.broadcast_to(g, a.data.shape))

    return _finalize("ssum", np.asarray(a.data.sum()), (a,), vjp)


def mean_all(a: Tensor) -> Tensor:
    inv_n = 1.0 / a.data.size

    def vjp(g):
        _accumulate(a, np.broadcast_to(g * inv_n, a.data.shape))

    return _finalize("mean_all", np.asarray(a.data.mean()), (a,), vjp)


def relu(a: Tensor) -> Tensor:
    out = np.maximum(a.data, 0.0)

    def vjp(g):
        _accumulate(a, g * (a.data > 0.0))  # subgradient 0 at exactly 0

    return _finalize("relu", out, (a,), vjp)


# ---------------------------------------------------------------------------
# Convolutions


@dataclass
class ConvParams:
    """Learnable weight (out_ch, in_ch, k, k) and bias (out_ch) tensors."""

    weight: Tensor
    bias: Tensor

    def __post_init__(self):
        wshape = self.weight.data.shape
        if len(wshape) != 4 or wshape[2] != wshape[3]:
            raise ShapeError(f"conv weight must be (out, in, k, k), got {wshape}")
        if wshape[2] % 2 != 1:
            raise ParameterError(f"kernel size must be odd, got {wshape[2]}")
        if self.bias.data.shape != (wshape[0],):
            raise ShapeError(
                f"bias shape {self.bias.data.shape} does not match out_ch {wshape[0]}")

    @property
    def kernel_size(self) -> int:
        return self.weight.data.shape[2]

    @property
    def out_channels(self) -> int:
        return self.weight.data.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.data.shape[1]

    @property
    def n_scalars(self) -> int:
        return self.weight.data.size + self.bias.data.size


def init_conv_params(out_ch: int, in_ch: int, k: int,
                     rng: np.random.Generator) -> ConvParams:
    """Kaiming-uniform fan-in initialization (bound sqrt(6/fan_in)), zero bias."""
    fan_in = in_ch * k * k
    bound = math.sqrt(6.0 / fan_in)
    weight = parameter(rng.uniform(-bound, bound, size=(out_ch, in_ch, k, k)))
    bias = parameter(np.zeros(out_ch))
    return ConvParams(weight, bias)


def _im2col(arr: np.ndarray, k: int) -> np.ndarray:
    """(C, H, W) -> (H*W, C*k*k) patch matrix with same-size zero padding."""
    c, h, w = arr.shape
    p = k // 2
    if p:
        arr = np.pad(arr, ((0, 0), (p, p), (p, p)))
    win = sliding_window_view(arr, (k, k), axis=(1, 2))  # (C, H, W, k, k)
    return win.transpose(1, 2, 0, 3, 4).reshape(h * w, c * k * k)


def _conv_input_grad(g: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. conv input: correlate upstream grad with flipped kernels."""
    cout, cin, k, _ = weight.shape
    _, h, w = g.shape
    gcols = _im2col(g, k)  # (HW, cout*k*k)
    wflip = weight[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(cin, cout * k * k)
    return (gcols @ wflip.T).T.reshape(cin, h, w)


def _inbounds_counts(h: int, w: int, k: int, stride: int = 1) -> np.ndarray:
    """Per-window count of in-grid cells (the window's sum over an all-ones
    field under the same zero padding), flattened over output positions."""
    p = k // 2
    rows = np.arange(0, h, stride)
    cols = np.arange(0, w, stride)
    nr = np.minimum(rows + p, h - 1) - np.maximum(rows - p, 0) + 1
    nc = np.minimum(cols + p, w - 1) - np.maximum(cols - p, 0) + 1
    return np.outer(nr, nc).astype(np.float64).reshape(-1)


def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """Standard 2-D convolution, same spatial size via symmetric zero padding."""
    if x.data.ndim != 3:
        raise ShapeError(f"conv2d input must be (C, H, W), got {x.data.shape}")
    cout, cin, k, _ = p.weight.data.shape
    c, h, w = x.data.shape
    if c != cin:
        raise ShapeError(f"conv2d: input has {c} channels, weight expects {cin}")
    cols = _im2col(x.data, k)
    wmat = p.weight.data.reshape(cout, cin * k * k)
    y = cols @ wmat.T
    y += p.bias.data
    out = y.T.reshape(cout, h, w)

    def vjp(g):
        gm = g.reshape(cout, h * w)
        if p.weight.requires_grad:
            _accumulate(p.weight, (gm @ cols).reshape(cout, cin, k, k))
        if p.bias.requires_grad:
            _accumulate(p.bias, g.sum(axis=(1, 2)))
        if x.requires_grad:
            _accumulate(x, _conv_input_grad(g, p.weight.data))

    return _finalize("conv2d", out, (x, p.weight, p.bias), vjp)


def _check_binary_mask(mask: Tensor) -> None:
    m = mask.data
    if m.ndim != 3 or m.shape[0] != 1:
        raise MaskError(f"mask must be single-channel (1, H, W), got {m.shape}")
    if not np.all((np.abs(m) <= 1e-9) | (np.abs(m - 1.0) <= 1e-9)):
        raise MaskError("mask entries must be binary (0 or 1)")


def pconv2d(x: Tensor, mask: Tensor, p: ConvParams) -> tuple[Tensor, Tensor]:
    """Partial convolution: rescaled convolution over valid cells only.

    The single-channel binary mask broadcasts across input channels. Windows
    with sum(M) > 0 produce W^T(X*M) * (sum(1)/sum(M)) + b, where sum(1) is
    the window's cell count inside the grid (so a full mask reduces exactly
    to conv2d, borders included); windows with no valid cell produce exactly
    0 (bias suppressed). Returns (output, updated mask), the updated mask
    marking windows that saw at least one valid cell. Gradient flows through
    X at valid positions only; the mask itself is not differentiable.
    """
    if x.data.ndim != 3:
        raise ShapeError(f"pconv2d input must be (C, H, W), got {x.data.shape}")
    _check_binary_mask(mask)
    cout, cin, k, _ = p.weight.data.shape
    c, h, w = x.data.shape
    if c != cin:
        raise ShapeError(f"pconv2d: input has {c} channels, weight expects {cin}")
    if mask.data.shape[1:] != (h, w):
        raise ShapeError(
            f"pconv2d: mask spatial {mask.data.shape[1:]} does not match input {(h, w)}")

    full = bool(mask.data.all())
    if full:
        # Every window already valid: ratio is identically 1 and the output
        # reduces to the standard convolution bit for bit.
        ratio = None
        valid = None
        cols = _im2col(x.data, k)
    else:
        counts = _im2col(mask.data, k).sum(axis=1)  # valid cells per window
        valid = counts > 0.0
        ratio = np.zeros(h * w)
        ratio[valid] = _inbounds_counts(h, w, k)[valid] / counts[valid]
        cols = _im2col(x.data * mask.data, k)
    wmat = p.weight.data.reshape(cout, cin * k * k)
    raw = cols @ wmat.T                        # (HW, cout)
    if full:
        y = raw
        y += p.bias.data
        new_mask = Tensor(np.ones((1, h, w)), op="mask_update")
    else:
        y = (raw * ratio[:, None] + p.bias.data) * valid[:, None]
        new_mask = Tensor(valid.astype(np.float64).reshape(1, h, w), op="mask_update")
    out = y.T.reshape(cout, h, w)

    def vjp(g):
        gm = g.reshape(cout, h * w).T          # (HW, cout)
        graw = gm if full else gm * (ratio * valid)[:, None]
        if p.weight.requires_grad:
            _accumulate(p.weight, (graw.T @ cols).reshape(cout, cin, k, k))
        if p.bias.requires_grad:
            gb = gm if full else gm * valid[:, None]
            _accumulate(p.bias, gb.sum(axis=0))
        if x.requires_grad:
            graw_img = np.ascontiguousarray(graw.T).reshape(cout, h, w)
            dxm = _conv_input_grad(graw_img, p.weight.data)
            _accumulate(x, dxm if full else dxm * mask.data)

    return _finalize("pconv2d", out, (x, p.weight, p.bias), vjp), new_mask


# ---------------------------------------------------------------------------
# Resampling and concatenation


def downsample2(x: Tensor) -> Tensor:
    """2x2 max pooling (feature variant); spatial dims must be even."""
    c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ShapeError(f"downsample2 needs even spatial dims, got {h}x{w}")
    h2, w2 = h // 2, w // 2
    blocks = x.data.reshape(c, h2, 2, w2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def vjp(g):
        if not x.requires_grad:
            return
        buf = np.zeros((c, h2, w2, 4))
        np.put_along_axis(buf, arg[..., None], g[..., None], axis=-1)
        dx = buf.reshape(c, h2, w2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h, w)
        _accumulate(x, dx)

    return _finalize("downsample2", out, (x,), vjp)


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbor x2 upsampling."""
    c, h, w = x.data.shape
    out = x.data.repeat(2, axis=1).repeat(2, axis=2)

    def vjp(g):
        if x.requires_grad:
            _accumulate(x, g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)))

    return _finalize("upsample2", out, (x,), vjp)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Stack two tensors along the channel axis (equal spatial dims)."""
    if a.data.shape[1:] != b.data.shape[1:]:
        raise ShapeError(
            f"concat_channels: spatial dims {a.data.shape[1:]} vs {b.data.shape[1:]}")
    ca = a.data.shape[0]

    def vjp(g):
        _accumulate(a, g[:ca])
        _accumulate(b, g[ca:])

    return _finalize("concat", np.concatenate([a.data, b.data], axis=0), (a, b), vjp)


def crop(x: Tensor, top: int, left: int, height: int, width: int) -> Tensor:
    """Spatial window [top:top+height, left:left+width] of all channels."""
    c, h, w = x.data.shape
    if top < 0 or left < 0 or height < 1 or width < 1 \
            or top + height > h or left + width > w:
        raise ShapeError(
            f"crop window {(top, left, height, width)} exceeds input {h}x{w}")

    def vjp(g):
        if x.requires_grad:
            buf = np.zeros_like(x.data)
            buf[:, top:top + height, left:left + width] = g
            _accumulate(x, buf)

    out = x.data[:, top:top + height, left:left + width].copy()
    return _finalize("crop", out, (x,), vjp)


def _strided_cols(arr: np.ndarray, k: int) -> tuple[np.ndarray, int, int]:
    """(C, H, W) -> stride-2 patch matrix (n_out, C*k*k), zero padding k//2."""
    c, h, w = arr.shape
    p = k // 2
    if p:
        arr = np.pad(arr, ((0, 0), (p, p), (p, p)))
    win = sliding_window_view(arr, (k, k), axis=(1, 2))[:, ::2, ::2]
    h2, w2 = win.shape[1], win.shape[2]
    return win.transpose(1, 2, 0, 3, 4).reshape(h2 * w2, c * k * k), h2, w2


def _strided_input_grad(gcols: np.ndarray, c: int, h: int, w: int, k: int) -> np.ndarray:
    """Scatter stride-2 patch gradients back onto the (C, H, W) input."""
    p = k // 2
    hp, wp = h + 2 * p, w + 2 * p
    idx = np.arange(c * hp * wp).reshape(c, hp, wp)
    win = sliding_window_view(idx, (k, k), axis=(1, 2))[:, ::2, ::2]
    icols = win.transpose(1, 2, 0, 3, 4).reshape(gcols.shape[0], c * k * k)
    flat = np.zeros(c * hp * wp)
    np.add.at(flat, icols, gcols)
    dxp = flat.reshape(c, hp, wp)
    return dxp[:, p:p + h, p:p + w] if p else dxp


def _check_s2_input(x: Tensor, cin: int, op: str) -> tuple[int, int, int]:
    if x.data.ndim != 3:
        raise ShapeError(f"{op} input must be (C, H, W), got {x.data.shape}")
    c, h, w = x.data.shape
    if c != cin:
        raise ShapeError(f"{op}: input has {c} channels, weight expects {cin}")
    if h % 2 or w % 2:
        raise ShapeError(f"{op} needs even spatial dims, got {h}x{w}")
    return c, h, w


def conv2d_s2(x: Tensor, p: ConvParams) -> Tensor:
    """Stride-2 convolution (learnable downsampling alternative to pooling)."""
    cout, cin, k, _ = p.weight.data.shape
    c, h, w = _check_s2_input(x, cin, "conv2d_s2")
    cols, h2, w2 = _strided_cols(x.data, k)
    wmat = p.weight.data.reshape(cout, cin * k * k)
    y = cols @ wmat.T
    y += p.bias.data
    out = y.T.reshape(cout, h2, w2)

    def vjp(g):
        gm = g.reshape(cout, h2 * w2)
        if p.weight.requires_grad:
            _accumulate(p.weight, (gm @ cols).reshape(cout, cin, k, k))
        if p.bias.requires_grad:
            _accumulate(p.bias, g.sum(axis=(1, 2)))
        if x.requires_grad:
            _accumulate(x, _strided_input_grad(gm.T @ wmat, c, h, w, k))

    return _finalize("conv2d_s2", out, (x, p.weight, p.bias), vjp)


def pconv2d_s2(x: Tensor, mask: Tensor, p: ConvParams) -> tuple[Tensor, Tensor]:
    """Stride-2 partial convolution; returns the downsampled validity mask too.

    Same valid-cell rescaling and zero-window/bias rules as pconv2d, sampled
    at every other position, so it both downsamples and updates the mask in
    one learnable step.
    """
    _check_binary_mask(mask)
    cout, cin, k, _ = p.weight.data.shape
    c, h, w = _check_s2_input(x, cin, "pconv2d_s2")
    if mask.data.shape[1:] != (h, w):
        raise ShapeError(
            f"pconv2d_s2: mask spatial {mask.data.shape[1:]} does not match input {(h, w)}")

    counts = _strided_cols(mask.data, k)[0].sum(axis=1)
    valid = counts > 0.0
    ratio = np.zeros(counts.shape[0])
    ratio[valid] = _inbounds_counts(h, w, k, stride=2)[valid] / counts[valid]

    cols, h2, w2 = _strided_cols(x.data * mask.data, k)
    wmat = p.weight.data.reshape(cout, cin * k * k)
    raw = cols @ wmat.T
    y = (raw * ratio[:, None] + p.bias.data) * valid[:, None]
    out = y.T.reshape(cout, h2, w2)
    new_mask = Tensor(valid.astype(np.float64).reshape(1, h2, w2), op="mask_update_s2")

    def vjp(g):
        gm = g.reshape(cout, h2 * w2).T
        graw = gm * (ratio * valid)[:, None]
        if p.weight.requires_grad:
            _accumulate(p.weight, (graw.T @ cols).reshape(cout, cin, k, k))
        if p.bias.requires_grad:
            _accumulate(p.bias, (gm * valid[:, None]).sum(axis=0))
        if x.requires_grad:
            dxm = _strided_input_grad(graw @ wmat, c, h, w, k)
            _accumulate(x, dxm * mask.data)

    return _finalize("pconv2d_s2", out, (x, p.weight, p.bias), vjp), new_mask


def mask_downsample2(mask: Tensor) -> Tensor:
    """Mask variant of downsampling: logical OR over each 2x2 block."""
    _check_binary_mask(mask)
    _, h, w = mask.data.shape
    if h % 2 or w % 2:
        raise ShapeError(f"mask_downsample2 needs even spatial dims, got {h}x{w}")
    out = mask.data.reshape(1, h // 2, 2, w // 2, 2).max(axis=(2, 4))
    return Tensor(out, op="mask_downsample2")


def mask_or(a: Tensor, b: Tensor) -> Tensor:
    """Combine two validity masks; validity only grows."""
    _check_binary_mask(a)
    _check_binary_mask(b)
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mask_or: shapes {a.data.shape} vs {b.data.shape} differ")
    return Tensor(np.maximum(a.data, b.data), op="mask_or")


# ---------------------------------------------------------------------------
# Backward pass and optimizer


def backward(loss: Tensor) -> Tape:
    """Reverse-mode gradient of a scalar loss over its recorded graph.

    Fills ``.grad`` (accumulating) on every reachable tensor that requires
    gradients. The walked graph is consumed: a second backward over any of
    its interior nodes raises GraphError; rebuild the graph (or zero grads
    and rerun the forward pass) instead.
    """
    if loss.data.shape != ():
        raise GraphError(
            f"backward requires a scalar loss, got shape {loss.data.shape}")
    if loss._consumed:
        raise GraphError("backward already ran on this graph; rebuild it first")

    seen: set[int] = set()
    nodes: list[Tensor] = []
    stack: list[Tensor] = [loss]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    # Creation order is execution order; parents always precede children.
    nodes.sort(key=lambda t: t._seq)
    tape = Tape(nodes=nodes)

    for node in tape.nodes:
        if node._vjp is not None and node._consumed:
            raise GraphError(
                f"graph node '{node._op}' was already consumed by a previous "
                "backward; rebuild the graph before differentiating again")

    loss.grad = np.ones(())
    for node in reversed(tape.nodes):
        if node._vjp is not None:
            if node.grad is not None:
                node._vjp(node.grad)
            node._consumed = True
    return tape


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = None


@dataclass
class AdamState:
    """First/second moment accumulators (plus scratch) for one parameter list."""

    m: list
    v: list
    scratch: list
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   scratch=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One standard Adam update with bias correction, in place on params.

    The update lr * (m/bc1) / (sqrt(v/bc2) + eps) is applied in the
    algebraically identical grouping (lr*sqrt(bc2)/bc1) * m / (sqrt(v) +
    eps*sqrt(bc2)), which needs no temporaries beyond the state scratch.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ParameterError("params, grads, and state must have equal lengths")
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    root_bc2 = math.sqrt(1.0 - beta2 ** state.t)
    step_size = lr * root_bc2 / bc1
    eps_hat = eps * root_bc2
    for p, g, m, v, buf in zip(params, grads, state.m, state.v, state.scratch):
        if g is None:
            continue
        m *= beta1
        np.multiply(g, 1.0 - beta1, out=buf)
        m += buf
        v *= beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - beta2
        v += buf
        np.sqrt(v, out=buf)
        buf += eps_hat
        np.divide(m, buf, out=buf)
        buf *= step_size
        p -= buf
