"""Pure-numpy likelihood kernels; reference fallback for ``_ckernels``.

Both modules expose the same functions with the same signatures. Inputs are
float64 arrays; binary columns are passed as 0.0/1.0.
"""
import numpy as np

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _log_expit(x):
    return -np.logaddexp(0.0, -x)


def _expit(x):
    return np.exp(_log_expit(x))


def unmeasured_ll_grad(eta, gamma, xi1, xi2, u, y, a, l):
    """Outcome, treatment and latent-confounder terms of the latent-U model.

    Returns ``(ll, g_eta[3], g_gamma[2], g_xi1, g_xi2, g_u[n])``.
    """
    x = eta[0] + eta[1] * a + eta[2] * l + xi1 * u
    z = gamma[0] + gamma[1] * l + xi2 * u
    ll = (
        np.sum(y * _log_expit(x) + (1.0 - y) * _log_expit(-x))
        + np.sum(a * _log_expit(z) + (1.0 - a) * _log_expit(-z))
        - 0.5 * np.dot(u, u)
        - HALF_LOG_2PI * u.shape[0]
    )
    dx = y - _expit(x)
    dz = a - _expit(z)
    g_eta = np.array([dx.sum(), np.dot(dx, a), np.dot(dx, l)])
    g_gamma = np.array([dz.sum(), np.dot(dz, l)])
    g_u = dx * xi1 + dz * xi2 - u
    return float(ll), g_eta, g_gamma, float(np.dot(dx, u)), float(np.dot(dz, u)), g_u


def tsb_ll_grad(log_nu, eta0, eta1, eta2, sigma, gamma0, gamma1, theta0, phi, xi, y, a, l, delta):
    """Mixture and missingness terms of the truncated stick-breaking model.

    ``xi`` holds the four missingness coefficients (intercept, a, y, a*y).
    Returns ``(ll, g_log_nu, g_eta0, g_eta1, g_eta2, g_sigma, g_gamma0,
    g_gamma1, g_theta0, g_phi, g_xi[4], g_y[n])``.
    """
    yc = y[:, None]
    ac = a[:, None]
    lc = l[:, None]
    mu = eta0 + eta1 * lc + eta2 * ac
    ry = (yc - mu) / sigma
    g = gamma0 + gamma1 * lc
    rl = (lc - theta0) / phi
    comp = (
        log_nu
        - 0.5 * ry * ry
        - np.log(sigma)
        + ac * _log_expit(g)
        + (1.0 - ac) * _log_expit(-g)
        - 0.5 * rl * rl
        - np.log(phi)
        - 2.0 * HALF_LOG_2PI
    )
    cmax = comp.max(axis=1, keepdims=True)
    e = np.exp(comp - cmax)
    s = e.sum(axis=1, keepdims=True)
    resp = e / s
    ll_mix = float(np.sum(cmax[:, 0] + np.log(s[:, 0])))

    m = xi[0] + xi[1] * a + xi[2] * y + xi[3] * a * y
    ll_mis = float(np.sum(delta * _log_expit(m) + (1.0 - delta) * _log_expit(-m)))
    dm = delta - _expit(m)

    dmu = resp * ry / sigma
    dg = resp * (ac - _expit(g))
    drl = resp * rl / phi
    g_y = -dmu.sum(axis=1) + dm * (xi[2] + xi[3] * a)
    g_xi = np.array([dm.sum(), np.dot(dm, a), np.dot(dm, y), np.dot(dm, a * y)])
    return (
        ll_mix + ll_mis,
        resp.sum(axis=0),
        dmu.sum(axis=0),
        (dmu * lc).sum(axis=0),
        (dmu * ac).sum(axis=0),
        (resp * (ry * ry - 1.0)).sum(axis=0) / sigma,
        dg.sum(axis=0),
        (dg * lc).sum(axis=0),
        drl.sum(axis=0),
        (resp * (rl * rl - 1.0)).sum(axis=0) / phi,
        g_xi,
        g_y,
    )
