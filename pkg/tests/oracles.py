"""Independent reference implementations used only by the tests.

Everything here is written the slow, obvious way (explicit loops, direct
formulas, dense solves) so that the fast library code can be checked against
something with no shared structure.
"""

import numpy as np


def naive_conv2d(x, weight, bias):
    """Direct nested-loop convolution with symmetric zero padding."""
    cin, h, w = x.shape
    cout, cin2, k, _ = weight.shape
    assert cin == cin2 and k % 2 == 1
    r = k // 2
    xp = np.zeros((cin, h + 2 * r, w + 2 * r))
    xp[:, r:r + h, r:r + w] = x
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for c in range(cin):
                    for di in range(k):
                        for dj in range(k):
                            acc += weight[o, c, di, dj] * xp[c, i + di, j + dj]
                out[o, i, j] = acc + bias[o]
    return out


def naive_pconv2d(x, mask, weight, bias):
    """Loop reference for the mask-renormalized convolution.

    Ratio numerator is the number of in-grid cells under the window (so a
    full mask reduces exactly to naive_conv2d); denominator is the count of
    valid cells. Empty windows give output 0 with bias suppressed.
    Returns (out, new_mask).
    """
    cin, h, w = x.shape
    cout, _, k, _ = weight.shape
    r = k // 2
    xp = np.zeros((cin, h + 2 * r, w + 2 * r))
    xp[:, r:r + h, r:r + w] = x
    mp = np.zeros((h + 2 * r, w + 2 * r))
    mp[r:r + h, r:r + w] = mask[0]
    out = np.zeros((cout, h, w))
    new_mask = np.zeros((1, h, w))
    for i in range(h):
        for j in range(w):
            n_valid = 0
            n_inb = 0
            for di in range(k):
                for dj in range(k):
                    ii, jj = i + di - r, j + dj - r
                    if 0 <= ii < h and 0 <= jj < w:
                        n_inb += 1
                        if mask[0, ii, jj] > 0.5:
                            n_valid += 1
            if n_valid == 0:
                continue
            new_mask[0, i, j] = 1.0
            ratio = n_inb / n_valid
            for o in range(cout):
                acc = 0.0
                for c in range(cin):
                    for di in range(k):
                        for dj in range(k):
                            acc += (weight[o, c, di, dj]
                                    * xp[c, i + di, j + dj]
                                    * mp[i + di, j + dj])
                out[o, i, j] = acc * ratio + bias[o]
    return out, new_mask


def brute_force_ok(obs_locs, obs_vals, targets, cov_fn):
    """Ordinary kriging by one augmented solve per target.

    [C  1][lam] = [c0]
    [1' 0][mu ]   [1 ]

    cov_fn(a, b) gives the covariance of two locations (nugget included on
    the diagonal only). Returns (predictions, weight_sums).
    """
    n = len(obs_locs)
    a = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            a[i, j] = cov_fn(obs_locs[i], obs_locs[j], i == j)
    a[n, :n] = 1.0
    a[:n, n] = 1.0
    preds = np.zeros(len(targets))
    wsums = np.zeros(len(targets))
    for t, loc in enumerate(targets):
        rhs = np.zeros(n + 1)
        for i in range(n):
            rhs[i] = cov_fn(obs_locs[i], loc, False)
        rhs[n] = 1.0
        sol = np.linalg.solve(a, rhs)
        preds[t] = sol[:n] @ obs_vals
        wsums[t] = sol[:n].sum()
    return preds, wsums


_ROOK = ((-1, 0), (1, 0), (0, -1), (0, 1))
_QUEEN = _ROOK + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def brute_force_morans_i(values, scheme="rook", normalization="binary"):
    """Moran's I by the literal double sum over all cell pairs."""
    h, w = values.shape
    n = h * w
    offsets = _ROOK if scheme == "rook" else _QUEEN
    wmat = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            for di, dj in offsets:
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w:
                    wmat[i * w + j, ii * w + jj] = 1.0
    if normalization == "row":
        wmat = wmat / wmat.sum(axis=1, keepdims=True)
    x = values.ravel()
    dev = x - x.mean()
    denom = (dev ** 2).sum()
    num = 0.0
    for i in range(n):
        for j in range(n):
            num += wmat[i, j] * dev[i] * dev[j]
    return (n / wmat.sum()) * (num / denom)


def naive_box_blur(arr, k):
    """Mean filter with zero padding, loop form."""
    h, w = arr.shape
    r = k // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-r, r + 1):
                for dj in range(-r, r + 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < h and 0 <= jj < w:
                        acc += arr[ii, jj]
            out[i, j] = acc / (k * k)
    return out


def fd_gradient(fn, arr, step=1e-5):
    """Central finite-difference gradient of scalar fn w.r.t. array arr."""
    grad = np.zeros_like(arr)
    flat = arr.ravel()
    gflat = grad.ravel()
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + step
        up = fn()
        flat[idx] = orig - step
        down = fn()
        flat[idx] = orig
        gflat[idx] = (up - down) / (2 * step)
    return grad


def rel_err(a, b):
    """Relative error with an absolute floor so zero gradients compare."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b) / denom))


def mp_matern(h, nu, phi):
    """Matern correlation at lag h via arbitrary-precision Bessel K."""
    import mpmath
    if h == 0:
        return 1.0
    with mpmath.workdps(50):
        d = mpmath.mpf(h) / mpmath.mpf(phi)
        nu_mp = mpmath.mpf(nu)
        val = (2 ** (1 - nu_mp) / mpmath.gamma(nu_mp)
               * d ** nu_mp * mpmath.besselk(nu_mp, d))
        return float(val)


def naive_gauss_taps(k, sigma, form="wide"):
    """Normalized 1-D Gaussian taps by the direct formula."""
    r = k // 2
    hs = np.arange(-r, r + 1, dtype=np.float64)
    if form == "wide":
        taps = np.exp(-((hs / (2.0 * sigma)) ** 2))
    else:
        taps = np.exp(-(hs ** 2) / (2.0 * sigma ** 2))
    return taps / taps.sum()
