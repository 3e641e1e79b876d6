"""Independent reference computations used by the unit and acceptance tests."""

import math

import numpy as np
from scipy import integrate
from scipy.stats import norm

from pecsurrogate import nn
from pecsurrogate.regress import gaussian


def nn_loss(net, X, y, seed):
    # train-mode pass with a replayed rng so dropout masks stay fixed
    out, _ = nn.forward(net, X, "train", np.random.default_rng(seed))
    return nn.loss_value(net.spec, out, y)


def nn_gradient_error(net, X, y, seed=0, h=1e-5):
    """Largest per-array relative error between backprop and central finite differences."""
    _, cache = nn.forward(net, X, "train", np.random.default_rng(seed))
    grads = nn.backward(net, cache, y)
    params = net.params
    worst = 0.0
    for k, p in enumerate(params):
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            lp = nn_loss(net, X, y, seed)
            p[idx] = old - h
            lm = nn_loss(net, X, y, seed)
            p[idx] = old
            fd[idx] = (lp - lm) / (2 * h)
        num = np.linalg.norm(grads[k] - fd)
        den = max(np.linalg.norm(grads[k]), np.linalg.norm(fd), 1e-8)
        worst = max(worst, num / den)
    return worst


def natural_gradient_fd(y, mu, log_sigma, h=1e-5):
    """Inverse Fisher times a central-difference gradient of the Gaussian NLL in (mu, log sigma)."""
    g_mu = (gaussian.nll(y, mu + h, log_sigma) - gaussian.nll(y, mu - h, log_sigma)) / (2 * h)
    g_ls = (gaussian.nll(y, mu, log_sigma + h) - gaussian.nll(y, mu, log_sigma - h)) / (2 * h)
    sigma2 = math.exp(2 * log_sigma)
    fisher = np.array([[1.0 / sigma2, 0.0], [0.0, 2.0]])
    return np.linalg.solve(fisher, np.array([g_mu, g_ls]))


def gpr_dense(X, y, Xs, signal_var, lengthscale, noise_var):
    """GP posterior with an explicit matrix inverse."""

    def k(A, B):
        d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
        return signal_var * np.exp(-0.5 * d2 / lengthscale**2)

    Kinv = np.linalg.inv(k(X, X) + noise_var * np.eye(len(X)))
    Ks = k(X, Xs)
    mean = Ks.T @ Kinv @ y
    var = signal_var - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
    return mean, var


def crps_quadrature(mu, sigma, y):
    """CRPS as the integral of (F(x) - 1{x >= y})^2 over the real line."""
    cdf = norm(mu, sigma).cdf
    lo, hi = mu - 12 * sigma, mu + 12 * sigma
    a, _ = integrate.quad(lambda x: cdf(x) ** 2, min(lo, y), y, epsabs=1e-12, epsrel=1e-12, limit=200)
    b, _ = integrate.quad(lambda x: (1 - cdf(x)) ** 2, y, max(hi, y), epsabs=1e-12, epsrel=1e-12, limit=200)
    return a + b


def auc_pr_enumeration(p, y):
    """O(N^2) PR area: recount TP/FP for every distinct threshold, anchor (0, 1), trapezoid."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    pos = y.sum()
    if pos == 0:
        return 0.0
    rec, prec = [0.0], [1.0]
    for t in sorted(set(p.tolist()), reverse=True):
        tp = fp = 0
        for pi, yi in zip(p, y):
            if pi >= t:
                if yi == 1:
                    tp += 1
                else:
                    fp += 1
        rec.append(tp / pos)
        prec.append(tp / (tp + fp))
    area = 0.0
    for i in range(1, len(rec)):
        area += (rec[i] - rec[i - 1]) * (prec[i] + prec[i - 1]) / 2
    return area


def tree_walk(feature, threshold, value, x, depth):
    """Follow one heap-stored tree from the root for a single sample."""
    node = 0
    for _ in range(depth):
        node = 2 * node + (1 if x[feature[node]] <= threshold[node] else 2)
    return value[node - (2**depth - 1)]


def ngboost_replay(model, x):
    """Re-run the additive update recurrence stage by stage for one sample."""
    mu, ls = float(model.init[0]), float(model.init[1])
    for s in range(model.n_stages):
        step = model.lr * model.scale[s]
        mu -= step * tree_walk(model.feature[s, 0], model.threshold[s, 0], model.value[s, 0], x, model.depth)
        ls -= step * tree_walk(model.feature[s, 1], model.threshold[s, 1], model.value[s, 1], x, model.depth)
    return mu, max(math.exp(ls), gaussian.SIGMA_FLOOR)
