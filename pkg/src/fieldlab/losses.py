"""Loss terms for single-field interpolation training.

The total objective combines a masked data-fit term with two smoothness
penalties whose weight decays linearly over training and scales with how
sparse the observations are:

    total = masked + omega_s * d_bar * (gauss + lambda_l * laplace)

All pieces are built from the differentiation engine's primitives so the
whole objective is differentiable end to end. The distance weight d_bar and
the schedule omega_s are data/iteration statistics, not graph nodes.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import autodiff as ad
from .errors import MaskError, ParameterError, ShapeError
from .grid import GridField, ObservationMask

__all__ = [
    "LAPLACIAN_KERNEL",
    "masked_mse",
    "gaussian_weights_1d",
    "gaussian_kernel",
    "smoothness_loss",
    "distance_weight",
    "weight_decay",
]

# Five-point Laplacian stencil; zero response on locally linear fields.
LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0],
                             [1.0, -4.0, 1.0],
                             [0.0, 1.0, 0.0]])


def masked_mse(pred: ad.Tensor, target: np.ndarray, mask: np.ndarray) -> ad.Tensor:
    """Mean squared error over observed cells only: sum(M*(f-Z)^2) / sum(M).

    ``pred`` is a single-channel (1, H, W) graph tensor; ``target`` and
    ``mask`` are plain (H, W) arrays. Requires at least one observed cell.
    """
    if pred.data.ndim != 3 or pred.data.shape[0] != 1:
        raise ShapeError(f"masked_mse expects (1, H, W) prediction, got {pred.data.shape}")
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if target.shape != pred.data.shape[1:] or mask.shape != target.shape:
        raise ShapeError(
            f"masked_mse: prediction {pred.data.shape[1:]}, target {target.shape}, "
            f"mask {mask.shape} must agree")
    n_obs = float(mask.sum())
    if n_obs == 0:
        raise MaskError("masked_mse needs at least one observed cell")
    diff = ad.sub(pred, ad.constant(target[None]))
    masked_sq = ad.mul(ad.square(diff), ad.constant(mask[None]))
    return ad.scale(ad.ssum(masked_sq), 1.0 / n_obs)


def gaussian_weights_1d(k: int, sigma: float, form: str = "wide") -> np.ndarray:
    """Normalized 1-D Gaussian taps g(h) = exp(-(h / (2*sigma))^2), h centered.

    ``form='wide'`` uses that literal width-2*sigma parameterization (the
    default everywhere in this package); ``form='standard'`` uses the usual
    density exponent exp(-h^2 / (2*sigma^2)) for comparison runs.
    """
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"kernel size must be odd and positive, got {k}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    h = np.arange(k, dtype=np.float64) - (k - 1) / 2.0
    if form == "wide":
        w = np.exp(-((h / (2.0 * sigma)) ** 2))
    elif form == "standard":
        w = np.exp(-(h ** 2) / (2.0 * sigma ** 2))
    else:
        raise ParameterError(f"unknown gaussian form '{form}'")
    return w / w.sum()


def gaussian_kernel(k: int, sigma: float, form: str = "wide") -> np.ndarray:
    """Separable k x k smoothing kernel: outer product of normalized 1-D taps."""
    w = gaussian_weights_1d(k, sigma, form)
    return np.outer(w, w)


def _const_conv(x: ad.Tensor, kernel: np.ndarray) -> ad.Tensor:
    """Convolve a (1, H, W) tensor with a fixed kernel (gradient passes through)."""
    k = kernel.shape[0]
    if kernel.shape != (k, k) or k % 2 == 0:
        raise ShapeError(f"smoothing kernel must be odd square, got {kernel.shape}")
    params = ad.ConvParams(ad.constant(kernel[None, None]), ad.constant(np.zeros(1)))
    return ad.conv2d(x, params)


def smoothness_loss(pred: ad.Tensor, gauss: np.ndarray,
                    lambda_l: float) -> tuple[ad.Tensor, ad.Tensor, ad.Tensor]:
    """Gaussian-residual and Laplacian penalties on a (1, H, W) prediction.

    Returns (gauss_term, laplace_term, combined) where

        gauss_term   = mean((f - G(f))^2)      high-frequency residual energy
        laplace_term = mean(L(f)^2)            curvature energy
        combined     = gauss_term + lambda_l * laplace_term

    Both filters use same-size symmetric zero padding, so cells within the
    kernel radius of the border see implicit zeros; the penalty is computed
    over the full field regardless.
    """
    if pred.data.ndim != 3 or pred.data.shape[0] != 1:
        raise ShapeError(f"smoothness_loss expects (1, H, W), got {pred.data.shape}")
    if lambda_l < 0:
        raise ParameterError(f"lambda_l must be non-negative, got {lambda_l}")
    residual = ad.sub(pred, _const_conv(pred, gauss))
    gauss_term = ad.mean_all(ad.square(residual))
    curvature = _const_conv(pred, LAPLACIAN_KERNEL)
    laplace_term = ad.mean_all(ad.square(curvature))
    combined = ad.add(gauss_term, ad.scale(laplace_term, lambda_l))
    return gauss_term, laplace_term, combined


def distance_weight(mask: ObservationMask, blur_k: int = 7) -> tuple[GridField, float]:
    """Per-cell sparsity weight: box-blurred complement of the mask, clamped.

    D = clamp(boxblur(1 - M, blur_k), 0, 1), with zero padding outside the
    grid counting as observed (it contributes 0 to the blur). Returns the
    weight field and its mean d_bar, the scalar that scales the smoothness
    penalty: densely observed fields get little smoothing pressure, sparse
    ones get more.
    """
    if blur_k < 1 or blur_k % 2 == 0:
        raise ParameterError(f"blur size must be odd and positive, got {blur_k}")
    holes = 1.0 - mask.bits.astype(np.float64)
    blurred = ndimage.uniform_filter(holes, size=blur_k, mode="constant", cval=0.0)
    d = np.clip(blurred, 0.0, 1.0)
    return GridField(values=d), float(d.mean())


def weight_decay(omega0: float, iteration: int, total: int) -> float:
    """Linear decay of the smoothness weight: omega0 * (1 - min(1, t/T)).

    Full strength at t=0, exactly zero at t>=T. ``iteration`` is 0-based.
    """
    if total <= 0:
        raise ParameterError(f"total iterations must be positive, got {total}")
    if iteration < 0:
        raise ParameterError(f"iteration must be non-negative, got {iteration}")
    if omega0 < 0:
        raise ParameterError(f"omega0 must be non-negative, got {omega0}")
    return omega0 * (1.0 - min(1.0, iteration / total))
