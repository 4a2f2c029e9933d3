"""Pure-NumPy implementations of the hot kernels.

These mirror the compiled versions in ``_scan.pyx`` operation for
operation: prefix sums are plain left-to-right accumulations (which is
what ``np.cumsum`` performs for 1-D float64), gains are evaluated with
the same expression shapes, and argmax resolution keeps the first
strictly-best candidate. Models trained through either backend therefore
serialize identically.
"""
import numpy as np

NO_SPLIT = (-np.inf, -1, True)


def scan_split(sorted_grad, sorted_hess, candidates, g_miss, h_miss, lam, gamma, min_child_hessian):
    """Best boundary among ``candidates`` for one feature at one node.

    ``sorted_grad``/``sorted_hess`` are the gradient/hessian of the
    node's non-missing records in ascending feature order. A candidate
    boundary ``b`` puts positions ``0..b`` left and the rest right; the
    missing bucket (``g_miss``, ``h_miss``) is tried on both sides and
    the higher-gain side wins (ties stay left).

    Returns ``(gain, boundary, missing_left)``; ``boundary == -1`` means
    no candidate was valid. Gains are net of ``gamma``.
    """
    if len(candidates) == 0 or len(sorted_grad) == 0:
        return NO_SPLIT
    cum_g = np.cumsum(sorted_grad)
    cum_h = np.cumsum(sorted_hess)
    sum_g = cum_g[-1]
    sum_h = cum_h[-1]
    total_g = sum_g + g_miss
    total_h = sum_h + h_miss
    parent = (total_g * total_g) / (total_h + lam)

    gl = cum_g[candidates]
    hl = cum_h[candidates]
    gr = sum_g - gl
    hr = sum_h - hl

    neg = np.float64(-np.inf)

    with np.errstate(divide="ignore", invalid="ignore"):
        # Missing bucket on the left.
        gl_m = gl + g_miss
        hl_m = hl + h_miss
        valid = (hl_m >= min_child_hessian) & (hr >= min_child_hessian)
        gain_left = np.where(
            valid,
            0.5 * ((gl_m * gl_m) / (hl_m + lam) + (gr * gr) / (hr + lam) - parent) - gamma,
            neg,
        )

        # Missing bucket on the right.
        gr_m = gr + g_miss
        hr_m = hr + h_miss
        valid = (hl >= min_child_hessian) & (hr_m >= min_child_hessian)
        gain_right = np.where(
            valid,
            0.5 * ((gl * gl) / (hl + lam) + (gr_m * gr_m) / (hr_m + lam) - parent) - gamma,
            neg,
        )

    missing_left = gain_right <= gain_left
    gain = np.where(missing_left, gain_left, gain_right)
    best = int(np.argmax(gain))
    best_gain = float(gain[best])
    if best_gain == -np.inf:
        return NO_SPLIT
    return best_gain, int(candidates[best]), bool(missing_left[best])


def route_tree(X, feature, threshold, left, right, default_left):
    """Leaf node index in one flat tree for every row of ``X``.

    ``X`` holds NaN for missing values. Node arrays are indexed by flat
    node id; ``feature[node] < 0`` marks a leaf. Routing: missing goes to
    the stored default child, otherwise value > threshold goes right.
    """
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    active = feature[node] >= 0
    while np.any(active):
        idx = np.nonzero(active)[0]
        cur = node[idx]
        vals = X[idx, feature[cur]]
        miss = np.isnan(vals)
        go_right = ~miss & (vals > threshold[cur])
        go_left_default = miss & (default_left[cur] != 0)
        nxt = np.where(go_right | (miss & ~go_left_default), right[cur], left[cur])
        node[idx] = nxt.astype(np.int32)
        active[idx] = feature[nxt] >= 0
    return node
