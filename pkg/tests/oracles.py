"""Independent reference implementations used only by the tests.

These deliberately avoid the library's code paths: loops instead of
vectorized algebra, explicit pseudo-inverses instead of Cholesky solves,
and a line-by-line transcription of the selection pseudocode.
"""

import math

import numpy as np


def mean_loop(probs, idx):
    m = probs.shape[1]
    out = [0.0] * m
    for j in idx:
        for k in range(m):
            out[k] += probs[j, k]
    return np.array([v / len(idx) for v in out])


def covariance_loop(probs, idx, mean):
    """s[j][k] = 1/N * sum_l (p[l][j] - mean[j]) * (p[l][k] - mean[k])."""
    m = probs.shape[1]
    n = len(idx)
    s = np.zeros((m, m))
    for j in range(m):
        for k in range(m):
            acc = 0.0
            for l in idx:
                acc += (probs[l, j] - mean[j]) * (probs[l, k] - mean[k])
            s[j, k] = acc / n
    return s


def ridge_oracle(cov):
    return max(1e-6 * np.trace(cov) / cov.shape[0], 1e-10)


def mahalanobis_pinv(mean_i, mean_j, cov_i, eps):
    diff = np.asarray(mean_j) - np.asarray(mean_i)
    inv = np.linalg.pinv(cov_i + eps * np.eye(len(diff)))
    return math.sqrt(max(float(diff @ inv @ diff), 0.0))


def distance_matrix_loop(probs, class_indices):
    m = len(class_indices)
    means = [mean_loop(probs, ix) for ix in class_indices]
    covs = [covariance_loop(probs, ix, mu) for ix, mu in zip(class_indices, means)]
    d = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                d[i, j] = mahalanobis_pinv(means[i], means[j], covs[i], ridge_oracle(covs[i]))
    return d


class SelectionOracle:
    """Literal transcription of the mixup class-selection pseudocode.

    State is indexed by epoch the way the pseudocode writes it (``n[c][t]``,
    ``r[c][t]``, ``acc[c][t]``). The only additions are the clamp of ``n`` to
    ``[min(n_min, M-1), M-1]`` and the tie-break of equal distances by class id.
    """

    def __init__(self, M, r_init, n_min, delta):
        self.M, self.delta = M, delta
        self.n_lo = min(n_min, M - 1)
        self.n = {c: {} for c in range(M)}
        self.r = {c: {} for c in range(M)}
        self.acc = {c: {} for c in range(M)}
        self.sel = {c: {} for c in range(M)}
        self.r_init, self.n_min = r_init, n_min

    def after_epoch_1(self, acc_1, d):
        for c in range(self.M):                                 # for c in C
            self.acc[c][1] = acc_1[c]                           #   compute acc_1(X_c)
        for c in range(self.M):                                 # for c in C
            self.n[c][2] = min(self.n_min, self.M - 1)          #   n_{c,2} <- n_min
            self.r[c][2] = self.r_init                          #   r_{c,2} <- r_init
            self.sel[c][2] = self._select(c, d, self.r[c][2], self.n[c][2])

    def after_epoch(self, t, acc_t, d):
        """Bookkeeping after training epoch ``t >= 2``; selections are for epoch ``t + 1``."""
        for c in range(self.M):
            self.acc[c][t] = acc_t[c]
            n_prev, r_prev = self.n[c][t], self.r[c][t]
            if self.acc[c][t] >= self.acc[c][t - 1]:
                n_new = n_prev + self.delta
                r_new = r_prev
            elif self.acc[c][t] < self.acc[c][t - 1]:
                n_new = n_prev - self.delta
                if r_prev == "desc":
                    r_new = "asc"
                else:
                    r_new = "desc"
            n_new = max(self.n_lo, min(self.M - 1, n_new))
            self.n[c][t + 1], self.r[c][t + 1] = n_new, r_new
            self.sel[c][t + 1] = self._select(c, d, r_new, n_new)

    def _select(self, c, d, r, n):
        row = d[c]
        if r == "asc":
            pairs = sorted((row[k], k) for k in range(self.M) if k != c)
        else:
            pairs = sorted((-row[k], k) for k in range(self.M) if k != c)
        return [k for _, k in pairs[:n]]


def finite_diff_grads(loss_fn, params, h=1e-4):
    """Central differences of ``loss_fn()`` with respect to every entry of ``params`` (mutated in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            old = p[ix]
            p[ix] = old + h
            up = loss_fn()
            p[ix] = old - h
            down = loss_fn()
            p[ix] = old
            g[ix] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def ece_loop(probs, labels, n_bins):
    n = len(labels)
    bins = [[] for _ in range(n_bins)]
    for row, y in zip(probs, labels):
        conf = max(row)
        pred = int(np.argmax(row))
        k = 0
        for b in range(n_bins):
            if b / n_bins < conf <= (b + 1) / n_bins:
                k = b
        bins[k].append((conf, pred == y))
    total = 0.0
    for items in bins:
        if items:
            conf = sum(c for c, _ in items) / len(items)
            acc = sum(1.0 for _, ok in items if ok) / len(items)
            total += len(items) / n * abs(acc - conf)
    return total
