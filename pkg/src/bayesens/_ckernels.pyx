# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled likelihood kernels; same contract as ``_pykernels``."""
import numpy as np

from libc.math cimport exp, log, log1p, fabs

cdef double HALF_LOG_2PI = 0.91893853320467274178


cdef inline double log_expit(double x) nogil:
    if x >= 0.0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double expit(double x) nogil:
    cdef double z
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    z = exp(x)
    return z / (1.0 + z)


def unmeasured_ll_grad(const double[::1] eta, const double[::1] gamma, double xi1, double xi2,
                       const double[::1] u, const double[::1] y, const double[::1] a, const double[::1] l):
    cdef Py_ssize_t n = u.shape[0], i
    cdef double ll = 0.0, x, z, dx, dz
    cdef double ge0 = 0.0, ge1 = 0.0, ge2 = 0.0, gg0 = 0.0, gg1 = 0.0, gx1 = 0.0, gx2 = 0.0
    g_u_arr = np.empty(n)
    cdef double[::1] g_u = g_u_arr
    with nogil:
        for i in range(n):
            x = eta[0] + eta[1] * a[i] + eta[2] * l[i] + xi1 * u[i]
            z = gamma[0] + gamma[1] * l[i] + xi2 * u[i]
            if y[i] > 0.5:
                ll += log_expit(x)
            else:
                ll += log_expit(-x)
            if a[i] > 0.5:
                ll += log_expit(z)
            else:
                ll += log_expit(-z)
            ll -= 0.5 * u[i] * u[i] + HALF_LOG_2PI
            dx = y[i] - expit(x)
            dz = a[i] - expit(z)
            ge0 += dx
            ge1 += dx * a[i]
            ge2 += dx * l[i]
            gg0 += dz
            gg1 += dz * l[i]
            gx1 += dx * u[i]
            gx2 += dz * u[i]
            g_u[i] = dx * xi1 + dz * xi2 - u[i]
    return ll, np.array([ge0, ge1, ge2]), np.array([gg0, gg1]), gx1, gx2, g_u_arr


def tsb_ll_grad(const double[::1] log_nu, const double[::1] eta0, const double[::1] eta1, const double[::1] eta2,
                const double[::1] sigma, const double[::1] gamma0, const double[::1] gamma1,
                const double[::1] theta0, const double[::1] phi, const double[::1] xi,
                const double[::1] y, const double[::1] a, const double[::1] l, const double[::1] delta):
    cdef Py_ssize_t n = y.shape[0], K = log_nu.shape[0], i, k
    cdef double ll = 0.0, cmax, s, r, mu, ry, g, rl, pg, m, dm, gy, dmu, e, l1, ai, li, yi
    out = np.zeros((10, K))
    cdef double[:, ::1] acc = out
    g_xi_arr = np.zeros(4)
    cdef double[::1] g_xi = g_xi_arr
    g_y_arr = np.empty(n)
    cdef double[::1] g_y = g_y_arr
    work = np.empty((6, K))
    cdef double[:, ::1] wk = work
    # wk rows: component log-term, ry, rl, expit(g), 1/sigma, 1/phi; base holds the
    # parameter-only part of each component's log term
    base_arr = np.empty(K)
    cdef double[::1] base = base_arr

    with nogil:
        for k in range(K):
            wk[4, k] = 1.0 / sigma[k]
            wk[5, k] = 1.0 / phi[k]
            base[k] = log_nu[k] - log(sigma[k]) - log(phi[k]) - 2.0 * HALF_LOG_2PI
        for i in range(n):
            ai = a[i]
            li = l[i]
            yi = y[i]
            cmax = -1e308
            for k in range(K):
                mu = eta0[k] + eta1[k] * li + eta2[k] * ai
                ry = (yi - mu) * wk[4, k]
                rl = (li - theta0[k]) * wk[5, k]
                g = gamma0[k] + gamma1[k] * li
                e = exp(-fabs(g))
                l1 = log1p(e)
                if g >= 0.0:
                    pg = 1.0 / (1.0 + e)
                    l1 = -l1
                else:
                    pg = e / (1.0 + e)
                    l1 = g - l1
                # l1 = log expit(g); log(1 - expit(g)) = l1 - g
                if ai < 0.5:
                    l1 = l1 - g
                wk[0, k] = base[k] - 0.5 * (ry * ry + rl * rl) + l1
                wk[1, k] = ry
                wk[2, k] = rl
                wk[3, k] = pg
                if wk[0, k] > cmax:
                    cmax = wk[0, k]
            s = 0.0
            for k in range(K):
                wk[0, k] = exp(wk[0, k] - cmax)
                s += wk[0, k]
            ll += cmax + log(s)
            gy = 0.0
            s = 1.0 / s
            for k in range(K):
                r = wk[0, k] * s
                ry = wk[1, k]
                rl = wk[2, k]
                acc[0, k] += r
                dmu = r * ry * wk[4, k]
                acc[1, k] += dmu
                acc[2, k] += dmu * li
                acc[3, k] += dmu * ai
                gy -= dmu
                acc[4, k] += r * (ry * ry - 1.0) * wk[4, k]
                pg = r * (ai - wk[3, k])
                acc[5, k] += pg
                acc[6, k] += pg * li
                acc[7, k] += r * rl * wk[5, k]
                acc[8, k] += r * (rl * rl - 1.0) * wk[5, k]

            m = xi[0] + xi[1] * ai + xi[2] * yi + xi[3] * ai * yi
            if delta[i] > 0.5:
                ll += log_expit(m)
            else:
                ll += log_expit(-m)
            dm = delta[i] - expit(m)
            g_xi[0] += dm
            g_xi[1] += dm * ai
            g_xi[2] += dm * yi
            g_xi[3] += dm * ai * yi
            g_y[i] = gy + dm * (xi[2] + xi[3] * ai)

    return (ll, out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7], out[8],
            g_xi_arr, g_y_arr)
