"""Independent reference implementations used only by the tests.

Everything here is written as plain per-row Python loops so it shares no
code path with the vectorised package implementations.
"""

import math

import mpmath


def count_cells(y_true, y_pred, s):
    cells = {(g, k): 0 for g in (0, 1) for k in ("tp", "fp", "tn", "fn")}
    for yt, yp, g in zip(y_true, y_pred, s):
        yt, yp, g = int(yt), int(yp), int(g)
        if yt == 1 and yp == 1:
            cells[g, "tp"] += 1
        elif yt == 0 and yp == 1:
            cells[g, "fp"] += 1
        elif yt == 0 and yp == 0:
            cells[g, "tn"] += 1
        else:
            cells[g, "fn"] += 1
    return cells


def _rate(values, cond):
    num = den = 0
    for v, c in zip(values, cond):
        if c:
            den += 1
            num += int(v) == 1
    return num / den


def disparate_impact(y_pred, s):
    minority = _rate(y_pred, [int(g) != 1 for g in s])
    majority = _rate(y_pred, [int(g) == 1 for g in s])
    return minority / majority


def underestimation_score(y_true, y_pred, s):
    predicted = _rate(y_pred, [int(g) != 1 for g in s])
    actual = _rate(y_true, [int(g) != 1 for g in s])
    return predicted / actual


def balanced_accuracy(y_true, y_pred):
    tpr = _rate(y_pred, [int(y) == 1 for y in y_true])
    tnr = _rate([1 - int(p) for p in y_pred], [int(y) == 0 for y in y_true])
    return 0.5 * (tpr + tnr)


def log_loss(y_true, p, eps=1e-12):
    total = 0.0
    for y, q in zip(y_true, p):
        q = min(max(float(q), eps), 1 - eps)
        total += -(y * math.log(q) + (1 - y) * math.log(1 - q))
    return total / len(p)


def sigmoid_mp(z, dps=50):
    with mpmath.workdps(dps):
        return float(1 / (1 + mpmath.exp(-mpmath.mpf(float(z)))))


def mean_log_loss_theta(theta, X, y):
    n = len(y)
    total = 0.0
    for xi, yi in zip(X, y):
        z = sum(w * x for w, x in zip(theta[:-1], xi)) + theta[-1]
        # log(1 + exp(z)) - y*z, evaluated stably
        total += max(z, 0.0) + math.log1p(math.exp(-abs(z))) - yi * z
    return total / n


def central_difference(f, theta, h=1e-6):
    grad = []
    for i in range(len(theta)):
        up = list(theta)
        dn = list(theta)
        up[i] += h
        dn[i] -= h
        grad.append((f(up) - f(dn)) / (2 * h))
    return grad


def dominates(a, b):
    return a[0] >= b[0] and a[1] <= b[1] and (a[0] > b[0] or a[1] < b[1])


def pareto_filter(points, order_keys):
    """O(n^2) non-dominated filter over (ba, us_dev) points.

    Duplicated objective pairs keep only the entry with the smallest
    ``order_keys`` value. Returns indices.
    """
    keep = []
    for i, p in enumerate(points):
        if any(dominates(q, p) for j, q in enumerate(points) if j != i):
            continue
        if any(q == p and order_keys[j] < order_keys[i] for j, q in enumerate(points) if j != i):
            continue
        keep.append(i)
    return keep


def pareto_filter_np(ba, us, order_keys):
    """Vectorised O(n^2) variant of :func:`pareto_filter` for large archives."""
    import numpy as np

    ba = np.asarray(ba)[:, None]
    us = np.asarray(us)[:, None]
    keys = np.asarray(order_keys)
    # [i, j]: does j dominate i / duplicate i with an earlier key?
    dominated = (ba.T >= ba) & (us.T <= us) & ((ba.T > ba) | (us.T < us))
    duplicate = (ba.T == ba) & (us.T == us) & (keys[None, :] < keys[:, None])
    return np.flatnonzero(~(dominated | duplicate).any(axis=1)).tolist()
