"""Pure numpy fallback for the kernel surface.

Single fits run batched with a batch of one; Monte-Carlo batches keep
every trial in flight at once and retire trials as they converge, so the
fallback stays usable without the compiled path (slower, same results up
to floating-point reassociation).
"""

import numpy as np

MU_CLAMP = 1.0 - 1e-12
SAT_EPS = 1e-15


def _eye_batch(t, d):
    return np.broadcast_to(np.eye(d, dtype=np.complex128), (t, d, d)).copy()


def _herm(A):
    return (A + A.conj().transpose(0, 2, 1)) / 2


def _chol_batch(A):
    # batched Cholesky; numpy raises collectively, so retry per trial
    try:
        return np.linalg.cholesky(A), np.ones(A.shape[0], dtype=bool)
    except np.linalg.LinAlgError:
        ok = np.ones(A.shape[0], dtype=bool)
        L = np.zeros_like(A)
        for t in range(A.shape[0]):
            try:
                L[t] = np.linalg.cholesky(A[t])
            except np.linalg.LinAlgError:
                ok[t] = False
                L[t] = np.eye(A.shape[1])
        return L, ok


def _tyler_fit_batch(X, eps, max_iter, loading):
    T, N, d = X.shape
    X = np.ascontiguousarray(X, dtype=np.complex128)
    R = _eye_batch(T, d)
    resid = np.full(T, np.inf)
    iters = np.zeros(T, np.int64)
    status = np.full(T, 1, np.int64)
    active = np.arange(T)
    di = np.arange(d)
    while active.size:
        Xa = X[active]
        Rinv = np.linalg.inv(R[active])
        q = np.einsum("tni,tij,tnj->tn", Xa.conj(), Rinv, Xa, optimize=True).real
        Tm = np.einsum("tn,tni,tnj->tij", 1.0 / q, Xa, Xa.conj(), optimize=True)
        tr = np.einsum("tii->t", Tm).real
        Tm *= (d / tr)[:, None, None]
        if loading > 0.0:
            Tm *= 1.0 - loading
            Tm[:, di, di] += loading
        A = Rinv @ Tm
        A[:, di, di] -= 1.0
        res = np.einsum("tij,tji->t", A, A).real
        R[active] = Tm
        resid[active] = res
        iters[active] += 1
        done = res <= eps
        status[active[done]] = 0
        hit_cap = iters[active] >= max_iter
        active = active[~done & ~hit_cap]
    return R, iters, resid, status


def tyler_fit(X, eps, max_iter, loading):
    R, iters, resid, status = _tyler_fit_batch(np.asarray(X)[None], eps, max_iter, loading)
    return R[0], int(iters[0]), float(resid[0]), int(status[0])


def _burg_fit_batch(X, order):
    T, N, d = X.shape
    f = np.array(X, dtype=np.complex128)
    b = f.copy()
    p0 = np.mean(np.abs(X) ** 2, axis=(1, 2))
    mu = np.zeros((T, order), np.complex128)
    gain = np.ones(T)
    status = np.zeros(T, np.int64)
    for m in range(1, order + 1):
        fk = f[:, :, m:]
        bk = b[:, :, m - 1 : d - 1]
        num = np.einsum("tnk,tnk->t", fk, bk.conj())
        den = np.einsum("tnk,tnk->t", fk, fk.conj()).real + np.einsum("tnk,tnk->t", bk, bk.conj()).real
        bad = den <= 0.0
        status[bad] = 2
        mk = -2.0 * num / np.where(bad, 1.0, den)
        am = np.abs(mk)
        mk = np.where(am >= MU_CLAMP, mk * (MU_CLAMP / np.maximum(am, MU_CLAMP)), mk)
        mu[:, m - 1] = mk
        fnew = fk + mk[:, None, None] * bk
        bnew = bk + mk.conj()[:, None, None] * fk
        f[:, :, m:] = fnew
        b[:, :, m:] = bnew
        gain *= 1.0 - np.abs(mk) ** 2
    sigma2 = np.where(status == 0, p0 * gain, 0.0)
    return sigma2, mu, status


def burg_fit(X, order, mu):
    sigma2, mub, status = _burg_fit_batch(np.asarray(X)[None], order)
    mu[:] = mub[0]
    return float(sigma2[0]), int(status[0])


def _trench_inv_batch(sigma2, mu):
    T, p = mu.shape
    d = p + 1
    coef = np.zeros((T, d, d), np.complex128)
    P = np.empty((T, d))
    gain = np.prod(1.0 - np.abs(mu) ** 2, axis=1) if p else np.ones(T)
    P[:, 0] = sigma2 / gain
    for m in range(1, d):
        mk = mu[:, m - 1]
        if m > 1:
            coef[:, m, 1:m] = coef[:, m - 1, 1:m] + mk[:, None] * coef[:, m - 1, m - 1 : 0 : -1].conj()
        coef[:, m, m] = mk
        P[:, m] = P[:, m - 1] * (1.0 - np.abs(mk) ** 2)
    Lm = np.zeros((T, d, d), np.complex128)
    for k in range(d):
        if k:
            Lm[:, k, :k] = coef[:, k, k:0:-1]
        Lm[:, k, k] = 1.0
    Sinv = np.einsum("tki,tkj,tk->tij", Lm.conj(), Lm, 1.0 / P, optimize=True)
    return _herm(Sinv)


def trench_inv(sigma2, mu):
    return _trench_inv_batch(np.asarray([sigma2], dtype=float), np.asarray(mu)[None])[0]


def _schur_dist_batch(nu, mu):
    p = nu.shape[1]
    d = p + 1
    den = np.abs(1.0 - mu.conj() * nu)
    r = np.abs(nu - mu) / np.where(den > 0, den, 1.0)
    r = np.where(den > 0, r, MU_CLAMP)
    r = np.minimum(r, MU_CLAMP)
    w = (d - np.arange(1, d))[None, :]
    return np.sum(w * np.arctanh(r) ** 2, axis=1)


def schur_dist(nu, mu):
    return float(_schur_dist_batch(np.asarray(nu)[None], np.asarray(mu)[None])[0])


def _bt_fit_batch(X, eps, max_iter):
    T, N, d = X.shape
    p = d - 1
    X = np.ascontiguousarray(X, dtype=np.complex128)
    mu = np.zeros((T, p), np.complex128)
    Sinv = _eye_batch(T, d)
    resid = np.full(T, np.inf)
    iters = np.zeros(T, np.int64)
    status = np.full(T, 1, np.int64)
    active = np.arange(T)
    while active.size:
        Sa = _trench_inv_batch(np.ones(active.size), mu[active])
        Xa = X[active]
        q = np.einsum("tni,tij,tnj->tn", Xa.conj(), Sa, Xa, optimize=True).real
        Y = Xa / np.sqrt(q)[:, :, None]
        _, nu, st = _burg_fit_batch(Y, p)
        res = _schur_dist_batch(nu, mu[active])
        Sinv[active] = Sa
        resid[active] = res
        iters[active] += 1
        bad = st != 0
        done = (res <= eps) & ~bad
        status[active[done]] = 0
        status[active[bad]] = 2
        keep = ~done & ~bad
        mu[active] = np.where((done | bad)[:, None], mu[active], nu)
        hit_cap = iters[active] >= max_iter
        active = active[keep & ~hit_cap]
    nc = status == 1
    if np.any(nc):
        Sinv[nc] = _trench_inv_batch(np.ones(int(nc.sum())), mu[nc])
    return Sinv, mu, iters, resid, status


def bt_fit(X, eps, max_iter):
    Sinv, mu, iters, resid, status = _bt_fit_batch(np.asarray(X)[None], eps, max_iter)
    return Sinv[0], mu[0], int(iters[0]), float(resid[0]), int(status[0])


def _cg_fit_batch(X, eps, max_iter):
    T, N, d = X.shape
    X = np.ascontiguousarray(X, dtype=np.complex128)
    Sigma = np.einsum("tni,tnj->tij", X, X.conj(), optimize=True) / N
    cd = 1.0 / ((1.0 - 0.5 / d) * N)
    resid = np.full(T, np.inf)
    iters = np.zeros(T, np.int64)
    status = np.full(T, 1, np.int64)
    active = np.arange(T)
    di = np.arange(d)
    while active.size:
        Xa = X[active]
        La, ok = _chol_batch(Sigma[active])
        if not np.all(ok):
            status[active[~ok]] = 2
            active = active[ok]
            if not active.size:
                break
            Xa = Xa[ok]
            La = La[ok]
        Ya = np.linalg.solve(La, Xa.transpose(0, 2, 1))
        q = np.sum(np.abs(Ya) ** 2, axis=1)
        w = cd * (1.0 - 0.5 / q)
        S = np.einsum("tn,tni,tnj->tij", w, Xa, Xa.conj(), optimize=True)
        B = np.linalg.solve(La, S)
        W = np.linalg.solve(La, B.conj().transpose(0, 2, 1)).conj().transpose(0, 2, 1)
        W = _herm(W)
        W[:, di, di] -= 1.0
        we, V = np.linalg.eigh(W)
        ew = np.exp(we)
        res = np.sum((ew - 1.0) ** 2, axis=1)
        Bv = La @ V
        Snew = _herm(np.einsum("tik,tk,tjk->tij", Bv, ew, Bv.conj(), optimize=True))
        Sigma[active] = Snew
        resid[active] = res
        iters[active] += 1
        done = res <= eps
        status[active[done]] = 0
        hit_cap = iters[active] >= max_iter
        active = active[~done & ~hit_cap]
    return Sigma, iters, resid, status


def cg_fit(X, eps, max_iter):
    Sigma, iters, resid, status = _cg_fit_batch(np.asarray(X)[None], eps, max_iter)
    return Sigma[0], int(iters[0]), float(resid[0]), int(status[0])


def _coh_batch(M, Xt, s):
    # per-trial (tau, s_quad, |cross|^2) for covariance batch M
    L, ok = _chol_batch(M)
    T, d = Xt.shape
    a = np.linalg.solve(L, Xt[:, :, None])[:, :, 0]
    b = np.linalg.solve(L, np.broadcast_to(s[None, :, None], (T, d, 1)).copy())[:, :, 0]
    tau = np.sum(np.abs(a) ** 2, axis=1)
    sq = np.sum(np.abs(b) ** 2, axis=1)
    c2 = np.abs(np.sum(b.conj() * a, axis=1)) ** 2
    return tau, sq, c2, ok


def _nmf_values(coh, factor):
    out = np.empty_like(coh)
    sat = coh > 1.0 - SAT_EPS
    out[sat] = -factor * np.log(SAT_EPS)
    out[~sat] = -factor * np.log1p(-coh[~sat])
    return out


def _glrcg_values(tau, m):
    m = np.minimum(m, tau)
    out = np.empty_like(tau)
    low = (tau - m) <= 0.5
    out[low] = tau[low] - 0.5 * np.log(tau[low]) - 0.5 * (1.0 + np.log(2.0))
    hi = ~low
    out[hi] = m[hi] + 0.5 * np.log1p(-m[hi] / tau[hi])
    return out


def mc_tyler_nmf(train, test, s, eps, max_iter, loading):
    R, _, _, status = _tyler_fit_batch(train, eps, max_iter, loading)
    d = test.shape[1]
    stats = np.full(train.shape[0], np.nan)
    ok = status == 0
    if np.any(ok):
        tau, sq, c2, chok = _coh_batch(R[ok], test[ok], s)
        stats[ok] = _nmf_values(c2 / (tau * sq), d - 1.0)
        failed = np.flatnonzero(ok)[~chok]
        status[failed] = 2
        stats[failed] = np.nan
    return stats, status


def mc_bt_nmf(train, test, s, eps, max_iter):
    Sinv, _, _, _, status = _bt_fit_batch(train, eps, max_iter)
    d = test.shape[1]
    stats = np.full(train.shape[0], np.nan)
    ok = status == 0
    if np.any(ok):
        Sa = Sinv[ok]
        Xt = test[ok]
        tau = np.einsum("ti,tij,tj->t", Xt.conj(), Sa, Xt, optimize=True).real
        sq = np.einsum("i,tij,j->t", s.conj(), Sa, s, optimize=True).real
        c2 = np.abs(np.einsum("i,tij,tj->t", s.conj(), Sa, Xt, optimize=True)) ** 2
        stats[ok] = _nmf_values(c2 / (tau * sq), d - 1.0)
    return stats, status


def mc_scm_mf(train, test, s):
    T, N, d = train.shape
    C = np.einsum("tni,tnj->tij", train, train.conj(), optimize=True) / N
    tau, sq, c2, ok = _coh_batch(C, test, s)
    stats = np.where(ok, c2 / sq, np.nan)
    status = np.where(ok, 0, 2).astype(np.int64)
    return stats, status


def mc_cg_glrcg(train, test, s, eps, max_iter):
    Sigma, _, _, status = _cg_fit_batch(train, eps, max_iter)
    stats = np.full(train.shape[0], np.nan)
    ok = status == 0
    if np.any(ok):
        tau, sq, c2, chok = _coh_batch(Sigma[ok], test[ok], s)
        stats[ok] = _glrcg_values(tau, c2 / sq)
        failed = np.flatnonzero(ok)[~chok]
        status[failed] = 2
        stats[failed] = np.nan
    return stats, status


def warmup():
    """Interface parity with the compiled backend; nothing to compile."""
