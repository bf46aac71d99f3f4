"""Compiled kernels for the fixed-point fits and Monte-Carlo trial loops.

Everything here works on plain complex128 arrays with samples in rows.
Small-matrix factorizations are hand rolled so a trial costs no LAPACK
dispatch overhead; only the geodesic update needs an eigendecomposition.
"""

import math

import numpy as np
from numba import njit

MU_CLAMP = 1.0 - 1e-12
SAT_EPS = 1e-15


@njit(cache=True)
def _chol(A, L):
    # lower Cholesky factor of Hermitian PD A into L, True on success
    d = A.shape[0]
    for j in range(d):
        s = A[j, j].real
        for k in range(j):
            s -= (L[j, k] * np.conj(L[j, k])).real
        if s <= 0.0:
            return False
        ljj = math.sqrt(s)
        L[j, j] = ljj
        inv = 1.0 / ljj
        for i in range(j + 1, d):
            c = A[i, j]
            for k in range(j):
                c -= L[i, k] * np.conj(L[j, k])
            L[i, j] = c * inv
        for i in range(j):
            L[i, j] = 0.0
    return True


@njit(cache=True)
def _fwd_quad(L, x, y):
    # solve L y = x, return ||y||^2
    d = L.shape[0]
    q = 0.0
    for i in range(d):
        c = x[i]
        for k in range(i):
            c -= L[i, k] * y[k]
        yi = c / L[i, i]
        y[i] = yi
        q += (yi * np.conj(yi)).real
    return q


@njit(cache=True)
def _resid_prev_inv(L, T):
    # tr((R^{-1} T - I)^2) where L is the Cholesky factor of R
    d = L.shape[0]
    A = np.empty((d, d), np.complex128)
    for c in range(d):
        for i in range(d):
            v = T[i, c]
            for k in range(i):
                v -= L[i, k] * A[k, c]
            A[i, c] = v / L[i, i]
        for i in range(d - 1, -1, -1):
            v = A[i, c]
            for k in range(i + 1, d):
                v -= np.conj(L[k, i]) * A[k, c]
            A[i, c] = v / L[i, i]
    for i in range(d):
        A[i, i] -= 1.0
    res = 0.0
    for i in range(d):
        for j in range(d):
            res += (A[i, j] * A[j, i]).real
    return res


@njit(cache=True)
def tyler_fit(X, eps, max_iter, loading):
    # distribution-free fixed point, trace-mean normalized iterates
    N, d = X.shape
    R = np.eye(d, dtype=np.complex128)
    L = np.empty((d, d), np.complex128)
    T = np.empty((d, d), np.complex128)
    y = np.empty(d, np.complex128)
    res = np.inf
    for it in range(1, max_iter + 1):
        if not _chol(R, L):
            return R, it, res, 2
        for i in range(d):
            for j in range(d):
                T[i, j] = 0.0
        for n in range(N):
            q = _fwd_quad(L, X[n], y)
            if q <= 0.0:
                return R, it, res, 2
            w = 1.0 / q
            for i in range(d):
                xi = X[n, i] * w
                for j in range(i + 1):
                    T[i, j] += xi * np.conj(X[n, j])
        tr = 0.0
        for i in range(d):
            tr += T[i, i].real
            for j in range(i):
                T[j, i] = np.conj(T[i, j])
        scale = d / tr
        for i in range(d):
            for j in range(d):
                T[i, j] *= scale
        if loading > 0.0:
            for i in range(d):
                for j in range(d):
                    T[i, j] *= 1.0 - loading
                T[i, i] += loading
        res = _resid_prev_inv(L, T)
        for i in range(d):
            for j in range(d):
                R[i, j] = T[i, j]
        if res <= eps:
            return R, it, res, 0
    return R, max_iter, res, 1


@njit(cache=True)
def burg_fit(X, order, mu):
    # multisegment lattice recursion, fills mu[:order], returns (sigma2, status)
    N, d = X.shape
    f = X.copy()
    b = X.copy()
    p0 = 0.0
    for n in range(N):
        for k in range(d):
            p0 += (X[n, k] * np.conj(X[n, k])).real
    p0 /= N * d
    gain = 1.0
    for m in range(1, order + 1):
        num = 0.0 + 0.0j
        den = 0.0
        for n in range(N):
            for k in range(m, d):
                fk = f[n, k]
                bk = b[n, k - 1]
                num += fk * np.conj(bk)
                den += (fk * np.conj(fk)).real + (bk * np.conj(bk)).real
        if den <= 0.0:
            return 0.0, 2
        mk = -2.0 * num / den
        am = abs(mk)
        if am >= MU_CLAMP:
            mk = mk * (MU_CLAMP / am)
        mu[m - 1] = mk
        cmk = np.conj(mk)
        for n in range(N):
            for k in range(d - 1, m - 1, -1):
                fk = f[n, k]
                bk = b[n, k - 1]
                f[n, k] = fk + mk * bk
                b[n, k] = bk + cmk * fk
        gain *= 1.0 - (mk * cmk).real
    return p0 * gain, 0


@njit(cache=True)
def trench_inv(sigma2, mu):
    # inverse of the Hermitian Toeplitz covariance with final residual
    # power sigma2 and reflection coefficients mu, assembled from the
    # stacked prediction-error filters: Sinv = U^H D^{-1} U
    p = mu.shape[0]
    d = p + 1
    coef = np.zeros((d, d), np.complex128)
    P = np.empty(d)
    gain = 1.0
    for m in range(p):
        gain *= 1.0 - (mu[m] * np.conj(mu[m])).real
    P[0] = sigma2 / gain
    for m in range(1, d):
        mk = mu[m - 1]
        for j in range(1, m):
            coef[m, j] = coef[m - 1, j] + mk * np.conj(coef[m - 1, m - j])
        coef[m, m] = mk
        P[m] = P[m - 1] * (1.0 - (mk * np.conj(mk)).real)
    # row k of the prediction-error filter contributes conj(u_i) u_j / P[k]
    S = np.zeros((d, d), np.complex128)
    for k in range(d):
        w = 1.0 / P[k]
        for i in range(k + 1):
            if i < k:
                li = np.conj(coef[k, k - i])
            else:
                li = 1.0 + 0.0j
            for j in range(k + 1):
                if j < k:
                    lj = coef[k, k - j]
                else:
                    lj = 1.0 + 0.0j
                S[i, j] += li * lj * w
    for i in range(d):
        S[i, i] = complex(S[i, i].real, 0.0)
        for j in range(i):
            v = 0.5 * (S[i, j] + np.conj(S[j, i]))
            S[i, j] = v
            S[j, i] = np.conj(v)
    return S


@njit(cache=True)
def schur_dist(nu, mu):
    # sum_m (d - m) atanh^2 |(nu_m - mu_m) / (1 - conj(mu_m) nu_m)|
    p = nu.shape[0]
    d = p + 1
    tot = 0.0
    for m in range(1, d):
        a = nu[m - 1]
        c = mu[m - 1]
        den = abs(1.0 - np.conj(c) * a)
        if den <= 0.0:
            r = MU_CLAMP
        else:
            r = abs(a - c) / den
            if r > MU_CLAMP:
                r = MU_CLAMP
        at = math.atanh(r)
        tot += (d - m) * at * at
    return tot


@njit(cache=True)
def bt_fit(X, eps, max_iter):
    # alternate elliptical whitening with the lattice fit until the
    # hyperbolic distance between successive coefficient vectors is small
    N, d = X.shape
    p = d - 1
    mu = np.zeros(p, np.complex128)
    nu = np.zeros(p, np.complex128)
    Y = np.empty_like(X)
    res = np.inf
    Sinv = np.eye(d, dtype=np.complex128)
    for it in range(1, max_iter + 1):
        Sinv = trench_inv(1.0, mu)
        for n in range(N):
            q = 0.0
            for i in range(d):
                v = 0.0 + 0.0j
                for j in range(d):
                    v += Sinv[i, j] * X[n, j]
                q += (np.conj(X[n, i]) * v).real
            if q <= 0.0:
                return Sinv, mu, it, res, 2
            w = 1.0 / math.sqrt(q)
            for i in range(d):
                Y[n, i] = X[n, i] * w
        s2, st = burg_fit(Y, p, nu)
        if st != 0:
            return Sinv, mu, it, res, 2
        res = schur_dist(nu, mu)
        if res <= eps:
            return Sinv, mu, it, res, 0
        for i in range(p):
            mu[i] = nu[i]
    Sinv = trench_inv(1.0, mu)
    return Sinv, mu, max_iter, res, 1


@njit(cache=True)
def _whiten(L, S):
    # W = L^{-1} S L^{-H}
    d = L.shape[0]
    B = np.empty((d, d), np.complex128)
    for c in range(d):
        for i in range(d):
            v = S[i, c]
            for k in range(i):
                v -= L[i, k] * B[k, c]
            B[i, c] = v / L[i, i]
    C = np.empty((d, d), np.complex128)
    for c in range(d):
        for i in range(d):
            v = np.conj(B[c, i])
            for k in range(i):
                v -= L[i, k] * C[k, c]
            C[i, c] = v / L[i, i]
    W = np.empty((d, d), np.complex128)
    for i in range(d):
        for j in range(d):
            W[i, j] = np.conj(C[j, i])
    for i in range(d):
        W[i, i] = complex(W[i, i].real, 0.0)
        for j in range(i):
            v = 0.5 * (W[i, j] + np.conj(W[j, i]))
            W[i, j] = v
            W[j, i] = np.conj(v)
    return W


@njit(cache=True)
def cg_fit(X, eps, max_iter):
    # phase-symmetrized Gaussian scatter via the geodesic update,
    # started at the sample covariance
    N, d = X.shape
    Sigma = np.zeros((d, d), np.complex128)
    for n in range(N):
        for i in range(d):
            xi = X[n, i]
            for j in range(i + 1):
                Sigma[i, j] += xi * np.conj(X[n, j])
    for i in range(d):
        for j in range(i):
            Sigma[j, i] = np.conj(Sigma[i, j])
    for i in range(d):
        for j in range(d):
            Sigma[i, j] /= N
    cd = 1.0 / ((1.0 - 0.5 / d) * N)
    L = np.empty((d, d), np.complex128)
    S = np.empty((d, d), np.complex128)
    y = np.empty(d, np.complex128)
    res = np.inf
    for it in range(1, max_iter + 1):
        if not _chol(Sigma, L):
            return Sigma, it, res, 2
        for i in range(d):
            for j in range(d):
                S[i, j] = 0.0
        for n in range(N):
            q = _fwd_quad(L, X[n], y)
            if q <= 0.0:
                return Sigma, it, res, 2
            w = cd * (1.0 - 0.5 / q)
            for i in range(d):
                xi = X[n, i] * w
                for j in range(i + 1):
                    S[i, j] += xi * np.conj(X[n, j])
        for i in range(d):
            for j in range(i):
                S[j, i] = np.conj(S[i, j])
        W = _whiten(L, S)
        for i in range(d):
            W[i, i] -= 1.0
        w_e, V = np.linalg.eigh(W)
        res = 0.0
        ew = np.empty(d)
        for i in range(d):
            e = math.exp(w_e[i])
            ew[i] = e
            res += (e - 1.0) * (e - 1.0)
        B = L @ V
        for i in range(d):
            for j in range(i + 1):
                v = 0.0 + 0.0j
                for k in range(d):
                    v += B[i, k] * ew[k] * np.conj(B[j, k])
                Sigma[i, j] = v
                if j < i:
                    Sigma[j, i] = np.conj(v)
        for i in range(d):
            Sigma[i, i] = complex(Sigma[i, i].real, 0.0)
        if res <= eps:
            return Sigma, it, res, 0
    return Sigma, max_iter, res, 1


@njit(cache=True)
def _coh_terms_chol(L, x, s, a, b):
    # returns (tau, s_quad, |cross|^2) under the metric with factor L L^H
    qa = _fwd_quad(L, x, a)
    qb = _fwd_quad(L, s, b)
    c = 0.0 + 0.0j
    for i in range(L.shape[0]):
        c += np.conj(b[i]) * a[i]
    return qa, qb, (c * np.conj(c)).real


@njit(cache=True)
def _nmf_value(coh, factor):
    if coh > 1.0 - SAT_EPS:
        return -factor * math.log(SAT_EPS)
    return -factor * math.log1p(-coh)


@njit(cache=True)
def _glrcg_value(tau, m):
    if m > tau:
        m = tau
    if tau - m <= 0.5:
        return tau - 0.5 * math.log(tau) - 0.5 * (1.0 + math.log(2.0))
    return m + 0.5 * math.log1p(-m / tau)


@njit(cache=True)
def mc_tyler_nmf(train, test, s, eps, max_iter, loading):
    T = train.shape[0]
    d = test.shape[1]
    stats = np.empty(T)
    status = np.zeros(T, np.int64)
    a = np.empty(d, np.complex128)
    b = np.empty(d, np.complex128)
    L = np.empty((d, d), np.complex128)
    for t in range(T):
        R, it, res, st = tyler_fit(train[t], eps, max_iter, loading)
        if st != 0:
            status[t] = st
            stats[t] = np.nan
            continue
        if not _chol(R, L):
            status[t] = 2
            stats[t] = np.nan
            continue
        qa, qb, c2 = _coh_terms_chol(L, test[t], s, a, b)
        stats[t] = _nmf_value(c2 / (qa * qb), d - 1.0)
    return stats, status


@njit(cache=True)
def mc_bt_nmf(train, test, s, eps, max_iter):
    T = train.shape[0]
    d = test.shape[1]
    stats = np.empty(T)
    status = np.zeros(T, np.int64)
    for t in range(T):
        Sinv, mu, it, res, st = bt_fit(train[t], eps, max_iter)
        if st != 0:
            status[t] = st
            stats[t] = np.nan
            continue
        tau = 0.0
        sb = 0.0
        c = 0.0 + 0.0j
        x = test[t]
        for i in range(d):
            vx = 0.0 + 0.0j
            vs = 0.0 + 0.0j
            for j in range(d):
                vx += Sinv[i, j] * x[j]
                vs += Sinv[i, j] * s[j]
            tau += (np.conj(x[i]) * vx).real
            sb += (np.conj(s[i]) * vs).real
            c += np.conj(s[i]) * vx
        coh = (c * np.conj(c)).real / (tau * sb)
        stats[t] = _nmf_value(coh, d - 1.0)
    return stats, status


@njit(cache=True)
def mc_scm_mf(train, test, s):
    T, N, d = train.shape
    stats = np.empty(T)
    status = np.zeros(T, np.int64)
    C = np.empty((d, d), np.complex128)
    L = np.empty((d, d), np.complex128)
    a = np.empty(d, np.complex128)
    b = np.empty(d, np.complex128)
    for t in range(T):
        for i in range(d):
            for j in range(d):
                C[i, j] = 0.0
        for n in range(N):
            for i in range(d):
                xi = train[t, n, i]
                for j in range(i + 1):
                    C[i, j] += xi * np.conj(train[t, n, j])
        for i in range(d):
            for j in range(i):
                C[j, i] = np.conj(C[i, j])
            for j in range(d):
                C[i, j] /= N
        if not _chol(C, L):
            status[t] = 2
            stats[t] = np.nan
            continue
        qa, qb, c2 = _coh_terms_chol(L, test[t], s, a, b)
        stats[t] = c2 / qb
    return stats, status


@njit(cache=True)
def mc_cg_glrcg(train, test, s, eps, max_iter):
    T = train.shape[0]
    d = test.shape[1]
    stats = np.empty(T)
    status = np.zeros(T, np.int64)
    L = np.empty((d, d), np.complex128)
    a = np.empty(d, np.complex128)
    b = np.empty(d, np.complex128)
    for t in range(T):
        Sigma, it, res, st = cg_fit(train[t], eps, max_iter)
        if st != 0:
            status[t] = st
            stats[t] = np.nan
            continue
        if not _chol(Sigma, L):
            status[t] = 2
            stats[t] = np.nan
            continue
        qa, qb, c2 = _coh_terms_chol(L, test[t], s, a, b)
        stats[t] = _glrcg_value(qa, c2 / qb)
    return stats, status


def warmup():
    """Compile every kernel on a toy problem (cached across processes)."""
    rng = np.random.default_rng(0)
    X = (rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))) / np.sqrt(2)
    X = np.ascontiguousarray(X)
    tyler_fit(X, 1e-6, 50, 0.0)
    mu = np.zeros(2, np.complex128)
    burg_fit(X, 2, mu)
    trench_inv(1.0, mu)
    bt_fit(X, 1e-6, 50)
    cg_fit(X, 1e-6, 50)
    tr = np.ascontiguousarray(X[None, :, :])
    te = np.ascontiguousarray(X[:1, :])
    s = np.ascontiguousarray(X[0] / np.linalg.norm(X[0]))
    mc_tyler_nmf(tr, te, s, 1e-6, 50, 0.0)
    mc_bt_nmf(tr, te, s, 1e-6, 50)
    mc_scm_mf(tr, te, s)
    mc_cg_glrcg(tr, te, s, 1e-6, 50)
