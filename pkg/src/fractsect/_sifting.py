"""Compiled kernels for EMD sifting.

Everything here works on plain float64 arrays so it can run under numba
with ``nogil``. The public, validated API lives in :mod:`fractsect.emd`.
Hot loops take a preallocated :func:`workspace` tuple so that a sift
iteration never allocates.
"""

import numpy as np
from numba import njit

SD_TOL = 1e-4
MAX_SIFT = 64


@njit(cache=True, nogil=True)
def extrema(h, max_idx, min_idx):
    """Fill ``max_idx``/``min_idx`` with strict interior extrema of ``h``.

    Plateaus count once, at their midpoint (rounded down). Runs touching
    either endpoint never count. Returns ``(n_max, n_min)``.
    """
    n = h.shape[0]
    n_max = 0
    n_min = 0
    flat = False
    prev = h[1] - h[0]
    for i in range(1, n - 1):
        nxt = h[i + 1] - h[i]
        flat |= nxt == 0.0
        # branch-free append; overwritten slots are harmless
        max_idx[n_max] = i
        n_max += (prev > 0.0) & (nxt < 0.0)
        min_idx[n_min] = i
        n_min += (prev < 0.0) & (nxt > 0.0)
        prev = nxt
    if not flat and h[1] != h[0]:
        return n_max, n_min
    return _extrema_plateau(h, max_idx, min_idx)


@njit(cache=True, nogil=True)
def _extrema_plateau(h, max_idx, min_idx):
    n = h.shape[0]
    n_max = 0
    n_min = 0
    i = 1
    while i < n - 1:
        if h[i] == h[i - 1]:
            # run started at i-1 or earlier and was already handled
            i += 1
            continue
        j = i
        while j + 1 < n and h[j + 1] == h[i]:
            j += 1
        if j >= n - 1:
            break
        left = h[i - 1]
        right = h[j + 1]
        if h[i] > left and h[i] > right:
            max_idx[n_max] = (i + j) // 2
            n_max += 1
        elif h[i] < left and h[i] < right:
            min_idx[n_min] = (i + j) // 2
            n_min += 1
        i = j + 1
    return n_max, n_min


@njit(cache=True, nogil=True)
def workspace(n):
    return (np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64),
            np.empty(n), np.empty(n),
            np.empty(n + 4, dtype=np.int64), np.empty(n + 4),
            np.empty(n + 4), np.empty(n + 4), np.empty(n + 4))


@njit(cache=True, nogil=True)
def natural_spline_eval(xk, yk, m, out, M, cp, dp):
    """Evaluate the natural cubic spline through integer knots ``xk[:m]``.

    ``out[t]`` receives the spline at t = 0..len(out)-1; the knots must be
    strictly increasing and bracket that support. ``M``, ``cp``, ``dp`` are
    scratch of length >= m.
    """
    M[0] = 0.0
    M[m - 1] = 0.0
    if m > 2:
        cp[0] = 0.0
        dp[0] = 0.0
        h0 = float(xk[1] - xk[0])
        slope0 = (yk[1] - yk[0]) / h0
        for k in range(1, m - 1):
            h1 = float(xk[k + 1] - xk[k])
            slope1 = (yk[k + 1] - yk[k]) / h1
            inv = 1.0 / (2.0 * (h0 + h1) - h0 * cp[k - 1])
            cp[k] = h1 * inv
            dp[k] = (6.0 * (slope1 - slope0) - h0 * dp[k - 1]) * inv
            h0 = h1
            slope0 = slope1
        for k in range(m - 2, 0, -1):
            M[k] = dp[k] - cp[k] * M[k + 1]
    n = out.shape[0]
    for k in range(m - 1):
        x0 = xk[k]
        x1 = xk[k + 1]
        if x1 <= 0:
            continue
        if x0 > n - 1:
            break
        h = float(x1 - x0)
        b = (yk[k + 1] - yk[k]) / h - h * (2.0 * M[k] + M[k + 1]) / 6.0
        c = 0.5 * M[k]
        d = (M[k + 1] - M[k]) / (6.0 * h)
        lo = x0 if x0 > 0 else 0
        hi = x1 if x1 < n else n
        y0 = yk[k]
        for t in range(lo, hi):
            u = float(t - x0)
            out[t] = y0 + u * (b + u * (c + u * d))
    if xk[m - 1] == n - 1:
        out[n - 1] = yk[m - 1]


@njit(cache=True, nogil=True)
def envelope(h, idx, n_idx, out, xk, yk, M, cp, dp):
    """Spline envelope through ``h[idx]`` with two extrema mirrored per end."""
    last = h.shape[0] - 1
    xk[0] = -idx[1]
    yk[0] = h[idx[1]]
    xk[1] = -idx[0]
    yk[1] = h[idx[0]]
    for k in range(n_idx):
        xk[k + 2] = idx[k]
        yk[k + 2] = h[idx[k]]
    xk[n_idx + 2] = 2 * last - idx[n_idx - 1]
    yk[n_idx + 2] = h[idx[n_idx - 1]]
    xk[n_idx + 3] = 2 * last - idx[n_idx - 2]
    yk[n_idx + 3] = h[idx[n_idx - 2]]
    natural_spline_eval(xk, yk, n_idx + 4, out, M, cp, dp)


@njit(cache=True, nogil=True)
def sift_ws(x, sd_tol, max_iter, out, ws):
    """Sift one IMF out of ``x`` into ``out``.

    Returns ``(status, iterations)``: status 0 = converged on the SD
    criterion, 1 = iteration cap reached, 2 = ran out of extrema mid-way
    (current iterate kept), -1 = ``x`` itself lacks extrema (``out`` holds
    a copy of ``x``).
    """
    max_idx, min_idx, upper, lower, xk, yk, M, cp, dp = ws
    n = x.shape[0]
    for t in range(n):
        out[t] = x[t]
    for it in range(max_iter):
        n_max, n_min = extrema(out, max_idx, min_idx)
        if n_max < 2 or n_min < 2:
            if it == 0:
                return -1, 0
            return 2, it
        envelope(out, max_idx, n_max, upper, xk, yk, M, cp, dp)
        envelope(out, min_idx, n_min, lower, xk, yk, M, cp, dp)
        num = 0.0
        den = 0.0
        for t in range(n):
            m = 0.5 * (upper[t] + lower[t])
            den += out[t] * out[t]
            num += m * m
            out[t] -= m
        if den == 0.0 or num / den < sd_tol:
            return 0, it + 1
    return 1, max_iter


@njit(cache=True, nogil=True)
def sift(x, sd_tol, max_iter, out):
    return sift_ws(x, sd_tol, max_iter, out, workspace(x.shape[0]))


@njit(cache=True, nogil=True)
def max_imfs_for(n):
    return int(2.0 * np.log2(max(n, 2))) + 4


@njit(cache=True, nogil=True)
def emd_ws(x, sd_tol, max_iter, imfs, residual, ws):
    """Decompose ``x``; IMFs go to rows of ``imfs``, remainder to ``residual``.

    Returns ``(n_imfs, n_capped)`` where ``n_capped`` counts IMFs that hit
    the sift iteration cap.
    """
    n = x.shape[0]
    max_idx = ws[0]
    min_idx = ws[1]
    for t in range(n):
        residual[t] = x[t]
    count = 0
    capped = 0
    while count < imfs.shape[0]:
        n_max, n_min = extrema(residual, max_idx, min_idx)
        if n_max < 2 or n_min < 2:
            break
        status, _ = sift_ws(residual, sd_tol, max_iter, imfs[count], ws)
        if status == 1:
            capped += 1
        for t in range(n):
            residual[t] -= imfs[count, t]
        count += 1
    return count, capped


@njit(cache=True, nogil=True)
def emd_into(x, sd_tol, max_iter, imfs, residual):
    return emd_ws(x, sd_tol, max_iter, imfs, residual, workspace(x.shape[0]))


@njit(cache=True, nogil=True)
def eemd_into(x, noise, sd_tol, max_iter, mean_imfs):
    """Ensemble-mean IMFs of ``x + noise[i]`` over all rows of ``noise``.

    Members lacking a slot contribute zero to it; every slot is divided by
    the full ensemble size. Members are summed in row order. Returns
    ``(n_slots, n_capped)``.
    """
    n_members, n = noise.shape
    slots = mean_imfs.shape[0]
    ws = workspace(n)
    member = np.empty(n)
    imfs = np.empty((slots, n))
    residual = np.empty(n)
    mean_imfs[:, :] = 0.0
    used = 0
    capped = 0
    for i in range(n_members):
        for t in range(n):
            member[t] = x[t] + noise[i, t]
        count, c = emd_ws(member, sd_tol, max_iter, imfs, residual, ws)
        capped += c
        if count > used:
            used = count
        for k in range(count):
            for t in range(n):
                mean_imfs[k, t] += imfs[k, t]
    for k in range(used):
        for t in range(n):
            mean_imfs[k, t] /= n_members
    return used, capped


@njit(cache=True, nogil=True)
def pearson(a, b):
    n = a.shape[0]
    ma = 0.0
    mb = 0.0
    for t in range(n):
        ma += a[t]
        mb += b[t]
    ma /= n
    mb /= n
    sab = 0.0
    saa = 0.0
    sbb = 0.0
    for t in range(n):
        da = a[t] - ma
        db = b[t] - mb
        sab += da * db
        saa += da * da
        sbb += db * db
    if saa == 0.0 or sbb == 0.0:
        return 0.0
    return sab / np.sqrt(saa * sbb)


@njit(cache=True, nogil=True)
def select_mask(corr, n, mask):
    """Correlation-threshold IMF selection; returns 1 if the threshold had a pole."""
    if n == 0:
        return 0
    top = corr[0]
    for k in range(1, n):
        if corr[k] > top:
            top = corr[k]
    if top <= 0.3:
        for k in range(n):
            mask[k] = True
        return 1
    thr = top / (10.0 * top - 3.0)
    for k in range(n):
        mask[k] = corr[k] > thr
    return 0


@njit(cache=True, nogil=True)
def window_eemd_f2(seg, noise, sd_tol, max_iter):
    """Detrended variance of one window under EEMD detrending.

    ``noise`` is already scaled. The fluctuation is the sum of the
    selected ensemble-mean IMFs (segment minus trend). Returns
    ``(f2, n_slots, pole_flag, n_capped)``; ``n_slots == 0`` means no IMF
    could be extracted and ``f2`` is 0.
    """
    n = seg.shape[0]
    slots = max_imfs_for(n)
    mean_imfs = np.empty((slots, n))
    used, capped = eemd_into(seg, noise, sd_tol, max_iter, mean_imfs)
    if used == 0:
        return 0.0, 0, 0, capped
    corr = np.empty(used)
    for k in range(used):
        corr[k] = pearson(mean_imfs[k], seg)
    mask = np.zeros(used, dtype=np.bool_)
    pole = select_mask(corr, used, mask)
    f2 = 0.0
    for t in range(n):
        acc = 0.0
        for k in range(used):
            if mask[k]:
                acc += mean_imfs[k, t]
        f2 += acc * acc
    return f2 / n, used, pole, capped
