"""Independent reference implementations used to compute expected values.

Nothing here imports the package under test; each oracle is brute force or a
textbook algorithm different from the one in the library.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def jacobi_eigh(C: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver; eigenpairs sorted by descending eigenvalue."""
    A = np.array(C, dtype=float)
    n = len(A)
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
                V = V @ J
    vals = np.diag(A)
    order = np.argsort(vals)[::-1]
    return vals[order], V[:, order]


def power_top_singular(M: np.ndarray, iters: int = 100000, tol: float = 1e-15) -> float:
    """Largest singular value via power iteration on ``M Mᵀ``."""
    G = M @ M.T
    v = np.ones(len(G)) / math.sqrt(len(G))
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        new = float(np.linalg.norm(w))
        v = w / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return math.sqrt(lam)


def hmm_enumerate(A, B, pi, obs):
    """Likelihood and best (path, probability) by listing every state path.

    Ties between paths go to the lexicographically smallest one.
    """
    k, T = len(pi), len(obs)
    paths = np.array(list(itertools.product(range(k), repeat=T)), dtype=int).reshape(-1, T)
    p = pi[paths[:, 0]] * B[paths[:, 0], obs[0]]
    for t in range(1, T):
        p = p * A[paths[:, t - 1], paths[:, t]] * B[paths[:, t], obs[t]]
    best = int(np.argmax(p))
    return float(p.sum()), paths[best], float(p[best])


def path_probability(A, B, pi, obs, path) -> float:
    p = pi[path[0]] * B[path[0], obs[0]]
    for t in range(1, len(obs)):
        p *= A[path[t - 1], path[t]] * B[path[t], obs[t]]
    return float(p)


def gaussian_density(x, mean, cov) -> float:
    d = len(mean)
    diff = np.asarray(x) - mean
    det = np.linalg.det(cov)
    quad = diff @ np.linalg.solve(cov, diff)
    return math.exp(-0.5 * quad) / math.sqrt((2 * math.pi) ** d * det)


def gmm_loglik_naive(X, weights, means, covs) -> float:
    return float(sum(
        math.log(sum(w * gaussian_density(x, m, c) for w, m, c in zip(weights, means, covs)))
        for x in X
    ))


def empirical_quantile(x, q: float) -> float:
    xs = np.sort(np.asarray(x, dtype=float))
    return float(xs[min(int(math.ceil(q * len(xs))) - 1, len(xs) - 1)])


def auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties 1/2)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    pos, neg = s[y], s[~y]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    return float((gt + 0.5 * eq) / (len(pos) * len(neg)))


def dominance_ratio(M: np.ndarray) -> float:
    """Smallest per-row ratio of largest to second-largest absolute entry."""
    a = np.sort(np.abs(M), axis=1)
    return float(np.min(a[:, -1] / a[:, -2]))


def best_permutation_error(est: np.ndarray, true: np.ndarray) -> tuple[float, tuple]:
    """Smallest max-abs error of ``est`` against ``true`` over state relabelings."""
    k = len(true)
    best = (np.inf, None)
    for perm in itertools.permutations(range(k)):
        P = list(perm)
        err = float(np.max(np.abs(est[np.ix_(P, P)] - true)))
        if err < best[0]:
            best = (err, perm)
    return best
