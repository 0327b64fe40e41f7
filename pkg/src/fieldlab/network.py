"""Encoder-decoder interpolation network and its single-field training loop.

The architecture is a U-Net-like stack: ``depth`` double-convolution blocks
(two conv+ReLU each) with channel doubling and spatial downsampling on the
way in, a double-conv bottleneck, then mirrored upsampling stages whose
inputs are concatenated with the matching encoder features, finished by a
1x1 projection to one channel. No normalization layers; no output
activation; the output range is unconstrained.

Two variants share the code path:

* standard mode (``partial_conv=False``): plain convolutions; the
  observation mask enters only as a second input channel if requested.
* partial mode (``partial_conv=True``): every convolution is a partial
  convolution with an explicit validity-mask stream, pooled alongside the
  features (logical OR) and merged with skip masks by OR in the decoder.

Training is deep-image-prior style: the network sees the same masked field
at every iteration, and its parameters are optimized so the output matches
the observations under a decaying smoothness penalty. There is no dataset
and no generalization step; one training run produces one interpolation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import (ConfigError, DivergenceError, InsufficientDataError,
                     MaskError, NonFiniteError, ParameterError, ShapeError)
from .grid import GridField, ObservationMask
from .losses import (distance_weight, gaussian_kernel, masked_mse,
                     smoothness_loss, weight_decay)

__all__ = [
    "UNetConfig",
    "TrainConfig",
    "LossRecord",
    "TrainReport",
    "ModelParameters",
    "build_unet",
    "forward",
    "make_network_input",
    "train_single_field",
]

DOWNSAMPLE_MODES = ("pool", "conv_stride2")


@dataclass(frozen=True)
class UNetConfig:
    """Architecture switches.

    ``depth`` counts down/up stages; inputs whose sides are not divisible by
    2**depth are symmetrically zero-padded up to the next multiple and the
    output cropped back (disable via ``pad_inputs=False`` to make that an
    error instead). ``downsample`` selects 2x2 max pooling (default) or a
    learnable stride-2 convolution per encoder stage.
    """

    depth: int = 3
    base_channels: int = 32
    kernel_size: int = 3
    partial_conv: bool = True
    in_channels: int = 1
    downsample: str = "pool"
    pad_inputs: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.in_channels < 1:
            raise ConfigError(f"in_channels must be >= 1, got {self.in_channels}")
        if self.downsample not in DOWNSAMPLE_MODES:
            raise ConfigError(
                f"downsample must be one of {DOWNSAMPLE_MODES}, got '{self.downsample}'")

    @property
    def side_multiple(self) -> int:
        return 2 ** self.depth

    def channels_at(self, level: int) -> int:
        return self.base_channels * (2 ** level)


@dataclass
class ModelParameters:
    """All learnable tensors of one network, grouped by stage.

    ``encoder[i]`` and ``decoder[i]`` are the double-conv pairs at level i
    (0 = finest); ``down[i]`` exists only in conv_stride2 mode. Iteration
    order of ``all_params()`` is the construction order, which is what makes
    optimizer state and seeding reproducible.
    """

    config: UNetConfig
    encoder: list[tuple[ad.ConvParams, ad.ConvParams]]
    down: list[ad.ConvParams]
    bottleneck: tuple[ad.ConvParams, ad.ConvParams]
    decoder: list[tuple[ad.ConvParams, ad.ConvParams]]
    final: ad.ConvParams

    def conv_params(self) -> list[ad.ConvParams]:
        out: list[ad.ConvParams] = []
        for level in range(self.config.depth):
            out.extend(self.encoder[level])
            if self.down:
                out.append(self.down[level])
        out.extend(self.bottleneck)
        for level in reversed(range(self.config.depth)):
            out.extend(self.decoder[level])
        out.append(self.final)
        return out

    def all_params(self) -> list[ad.Tensor]:
        tensors: list[ad.Tensor] = []
        for cp in self.conv_params():
            tensors.append(cp.weight)
            tensors.append(cp.bias)
        return tensors

    @property
    def n_scalars(self) -> int:
        return sum(cp.n_scalars for cp in self.conv_params())


def build_unet(cfg: UNetConfig, seed: int) -> ModelParameters:
    """Initialize all convolution stages from one seeded generator.

    Construction order is fixed (encoder top-down, bottleneck, decoder
    bottom-up, final projection) so identical (cfg-shape, seed) pairs give
    identical parameters; the partial_conv flag does not affect shapes, so
    a partial and a standard network built from the same seed start from
    the same weights.
    """
    rng = np.random.default_rng(seed)
    k = cfg.kernel_size
    encoder: list[tuple[ad.ConvParams, ad.ConvParams]] = []
    down: list[ad.ConvParams] = []
    prev = cfg.in_channels
    for level in range(cfg.depth):
        ch = cfg.channels_at(level)
        encoder.append((ad.init_conv_params(ch, prev, k, rng),
                        ad.init_conv_params(ch, ch, k, rng)))
        if cfg.downsample == "conv_stride2":
            down.append(ad.init_conv_params(ch, ch, k, rng))
        prev = ch
    deep = cfg.channels_at(cfg.depth)
    bottleneck = (ad.init_conv_params(deep, prev, k, rng),
                  ad.init_conv_params(deep, deep, k, rng))
    decoder: list[tuple[ad.ConvParams, ad.ConvParams] | None] = [None] * cfg.depth
    above = deep
    for level in reversed(range(cfg.depth)):
        ch = cfg.channels_at(level)
        decoder[level] = (ad.init_conv_params(ch, above + ch, k, rng),
                          ad.init_conv_params(ch, ch, k, rng))
        above = ch
    final = ad.init_conv_params(1, cfg.base_channels, 1, rng)
    return ModelParameters(config=cfg, encoder=encoder, down=down,
                           bottleneck=bottleneck, decoder=decoder, final=final)


def _conv_block(t: ad.Tensor, m: ad.Tensor | None,
                pair: tuple[ad.ConvParams, ad.ConvParams],
                partial: bool) -> tuple[ad.Tensor, ad.Tensor | None]:
    for cp in pair:
        if partial:
            t, m = ad.pconv2d(t, m, cp)
        else:
            t = ad.conv2d(t, cp)
        t = ad.relu(t)
    return t, m


def _pad_amounts(side: int, multiple: int) -> tuple[int, int]:
    extra = (-side) % multiple
    return extra // 2, extra - extra // 2


def forward(params: ModelParameters, x: np.ndarray,
            mask: np.ndarray | None = None) -> ad.Tensor:
    """One differentiable pass; returns the (1, H, W) prediction tensor.

    ``x`` is (in_channels, H, W); ``mask`` is the (H, W) binary validity
    grid, required in partial mode and ignored otherwise. Padding cells
    added to reach divisibility count as unobserved.
    """
    cfg = params.config
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != cfg.in_channels:
        raise ShapeError(
            f"network input must be ({cfg.in_channels}, H, W), got {x.shape}")
    if cfg.partial_conv and mask is None:
        raise MaskError("partial-conv network needs the observation mask")

    h, w = x.shape[1:]
    top, bottom = _pad_amounts(h, cfg.side_multiple)
    left, right = _pad_amounts(w, cfg.side_multiple)
    padded = bool(top or bottom or left or right)
    if padded and not cfg.pad_inputs:
        raise ShapeError(
            f"grid {h}x{w} is not divisible by 2^depth={cfg.side_multiple} "
            "and padding is disabled")
    if padded:
        x = np.pad(x, ((0, 0), (top, bottom), (left, right)))
        if mask is not None:
            mask = np.pad(np.asarray(mask, dtype=np.float64),
                          ((top, bottom), (left, right)))

    t = ad.constant(x)
    m = ad.constant(np.asarray(mask, dtype=np.float64)[None]) \
        if cfg.partial_conv else None
    partial = cfg.partial_conv

    skips: list[tuple[ad.Tensor, ad.Tensor | None]] = []
    for level in range(cfg.depth):
        t, m = _conv_block(t, m, params.encoder[level], partial)
        skips.append((t, m))
        if cfg.downsample == "pool":
            t = ad.downsample2(t)
            if partial:
                m = ad.mask_downsample2(m)
        else:
            if partial:
                t, m = ad.pconv2d_s2(t, m, params.down[level])
            else:
                t = ad.conv2d_s2(t, params.down[level])
            t = ad.relu(t)

    t, m = _conv_block(t, m, params.bottleneck, partial)

    for level in reversed(range(cfg.depth)):
        t = ad.upsample2(t)
        skip_t, skip_m = skips[level]
        t = ad.concat_channels(t, skip_t)
        if partial:
            m = ad.mask_or(ad.upsample2(m), skip_m)
        t, m = _conv_block(t, m, params.decoder[level], partial)

    if partial:
        t, _ = ad.pconv2d(t, m, params.final)
    else:
        t = ad.conv2d(t, params.final)

    if padded:
        t = ad.crop(t, top, left, h, w)
    return t


def make_network_input(field: GridField, mask: ObservationMask,
                       in_channels: int) -> np.ndarray:
    """Network input: observed values with unobserved cells zeroed, plus the
    mask itself as a second channel when the architecture asks for two."""
    mask.require_same_shape(field)
    bits = mask.bits.astype(np.float64)
    observed = field.values * bits
    if in_channels == 1:
        return observed[None]
    if in_channels == 2:
        return np.stack([observed, bits])
    raise ConfigError(
        f"in_channels must be 1 (values) or 2 (values+mask), got {in_channels}")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults are the package's reference values."""

    iterations: int = 2000
    learning_rate: float = 1e-3
    omega0: float = 1.0
    lambda_l: float = 0.1
    gauss_k: int = 5
    gauss_sigma: float = 1.0
    blur_k: int = 7
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    gauss_form: str = "wide"

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.omega0 < 0 or self.lambda_l < 0:
            raise ConfigError("omega0 and lambda_l must be non-negative")
        for name in ("gauss_k", "blur_k"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise ConfigError(f"{name} must be odd and positive, got {v}")
        if self.gauss_sigma <= 0:
            raise ConfigError(f"gauss_sigma must be positive, got {self.gauss_sigma}")
        if self.gauss_form not in ("wide", "standard"):
            raise ConfigError(
                f"gauss_form must be 'wide' or 'standard', got '{self.gauss_form}'")


@dataclass(frozen=True)
class LossRecord:
    """One iteration's logged loss components."""

    iteration: int
    masked: float
    gauss: float
    laplace: float
    omega_s: float
    d_bar: float
    total: float


@dataclass
class TrainReport:
    """Everything a training run produced.

    ``wall_time_s`` is informational and excluded from the determinism
    contract; records and prediction are bit-reproducible for identical
    inputs and seeds.
    """

    records: list[LossRecord] = field(default_factory=list)
    prediction: GridField | None = None
    wall_time_s: float = 0.0


def train_single_field(field_: GridField, mask: ObservationMask,
                       unet: UNetConfig, train: TrainConfig) -> TrainReport:
    """Fit the network to one masked field and return its interpolation.

    Every iteration runs the same masked input through the network, scores

        total = masked_mse + omega_s(t) * d_bar * (L_gauss + lambda_l * L_laplace)

    with the smoothness terms computed on the raw output (so their gradient
    reaches every cell), backpropagates, and takes one Adam step. The final
    prediction re-runs the forward pass and overwrites observed cells with
    their exact observed values.
    """
    mask.require_same_shape(field_)
    if mask.count < 1:
        raise InsufficientDataError("training needs at least one observed cell")

    t_start = time.perf_counter()
    x = make_network_input(field_, mask, unet.in_channels)
    mask_arr = mask.bits.astype(np.float64) if unet.partial_conv else None
    params = build_unet(unet, train.seed)
    gauss = gaussian_kernel(train.gauss_k, train.gauss_sigma, train.gauss_form)
    _, d_bar = distance_weight(mask, train.blur_k)

    tensors = params.all_params()
    arrays = [t.data for t in tensors]
    state = ad.AdamState.for_params(arrays)
    report = TrainReport()

    def one_pass() -> ad.Tensor:
        return forward(params, x, mask_arr)

    for it in range(train.iterations):
        try:
            pred = one_pass()
            l_masked = masked_mse(pred, field_.values, mask.bits)
            l_gauss, l_laplace, l_smooth = smoothness_loss(pred, gauss, train.lambda_l)
            omega_s = weight_decay(train.omega0, it, train.iterations)
            total = ad.add(l_masked, ad.scale(l_smooth, omega_s * d_bar))
        except NonFiniteError as exc:
            raise DivergenceError(f"training diverged: {exc}", iteration=it) from exc
        total_val = float(total.data)
        if not np.isfinite(total_val):
            raise DivergenceError("training diverged: non-finite total loss",
                                  iteration=it)
        report.records.append(LossRecord(
            iteration=it, masked=float(l_masked.data), gauss=float(l_gauss.data),
            laplace=float(l_laplace.data), omega_s=omega_s, d_bar=d_bar,
            total=total_val))
        ad.backward(total)
        ad.adam_step(arrays, [t.grad for t in tensors], state,
                     train.learning_rate, train.beta1, train.beta2, train.eps)
        ad.zero_grads(tensors)

    raw = one_pass().data[0]
    composed = np.where(mask.bits.astype(bool), field_.values, raw)
    report.prediction = GridField(values=composed, cell_size=field_.cell_size,
                                  origin=field_.origin)
    report.wall_time_s = time.perf_counter() - t_start
    return report
