"""Truncated stick-breaking mixture for a continuous outcome missing not at random."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .. import kernels
from ..data import NormalPrior, PointMass
from ..estimands.gformula import DEFAULT_TSB_MC, gformula_tsb
from ..numkit import DomainError
from ..sampler.hmc import ConfigurationError
from ..sampler.transforms import Constraint
from .base import Block, ModelMismatchError, ModelSpec, normal_prior

COEF_PRIOR_SD = 3.0
SCALE_PRIOR_SD = 2.0
MAX_COMPONENTS = 50
_LOG_HALF_NORMAL_CONST = np.log(2.0) - np.log(SCALE_PRIOR_SD) - 0.5 * np.log(2.0 * np.pi)

_COEFS = ("eta0", "eta1", "eta2", "gamma0", "gamma1", "theta0")
_SCALES = ("sigma", "phi")


def stick_breaking(V) -> np.ndarray:
    """Mixture weights ``nu_k = V_k prod_{j<k} (1 - V_j)``, remainder in ``nu_K``."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 1:
        raise DomainError("V must be one-dimensional")
    if np.any(~(V > 0.0) | ~(V < 1.0)):
        raise DomainError("stick fractions must lie strictly inside (0, 1)")
    rest = np.concatenate([[1.0], np.cumprod(1.0 - V)])
    return np.concatenate([V, [1.0]]) * rest


def log_stick_breaking(V):
    """``log nu`` computed from ``log V`` and ``log1p(-V)`` without cancellation."""
    V = np.asarray(V, dtype=float)
    log1m = np.log1p(-V)
    prefix = np.concatenate([[0.0], np.cumsum(log1m)])
    return np.concatenate([np.log(V), [0.0]]) + prefix


def log_stick_breaking_vjp(V, g_log_nu) -> np.ndarray:
    """Pull a gradient on ``log nu`` back to the stick fractions."""
    V = np.asarray(V, dtype=float)
    g = np.asarray(g_log_nu, dtype=float)
    tail = np.cumsum(g[::-1])[::-1][1:]  # sum_{k > j} g_k
    return g[:-1] / V - tail / (1.0 - V)


class TSBMNARModel(ModelSpec):
    """Continuous outcome with a K-component joint mixture over ``(y, a, l)``.

    Component k: ``y ~ N(eta0_k + eta1_k*l + eta2_k*a, sigma_k^2)``,
    ``a ~ Bernoulli(expit(gamma0_k + gamma1_k*l))``, ``l ~ N(theta0_k, phi_k^2)``.
    Weights come from stick fractions ``V_k ~ Beta(1, alpha)`` and
    ``alpha ~ Gamma(1, 1)`` unless ``alpha`` is given. Missing outcomes are
    sampled as continuous parameters ``y_mis``. Missingness follows
    ``expit(xi0 + xi1*a + xi2*y + xi3*a*y)``.

    Parameters
    ----------
    data : Dataset
    sens : mapping, optional
        Entries for ``xi0`` .. ``xi3``.
    K : int
        Truncation level, 1 to 50.
    alpha : float, optional
        Fixed concentration; sampled when omitted.
    n_mc : int
        Monte Carlo size of the per-draw g-formula.
    """

    name = "tsb-mnar"
    sensitivity = {
        "xi0": (Constraint.unbounded(), NormalPrior(0.0, COEF_PRIOR_SD)),
        "xi1": (Constraint.unbounded(), NormalPrior(0.0, COEF_PRIOR_SD)),
        "xi2": (Constraint.unbounded(), PointMass(0.0)),
        "xi3": (Constraint.unbounded(), PointMass(0.0)),
    }
    null_values = {"xi2": 0.0, "xi3": 0.0}

    def __init__(self, data, sens=None, K: int = 10, alpha: float | None = None, n_mc: int = DEFAULT_TSB_MC):
        if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or not 1 <= K <= MAX_COMPONENTS:
            raise ConfigurationError(f"K must be an integer in 1..{MAX_COMPONENTS}, got {K!r}")
        if alpha is not None and not (np.isfinite(alpha) and alpha > 0):
            raise ConfigurationError(f"fixed alpha must be positive, got {alpha!r}")
        if n_mc < 1:
            raise ConfigurationError("n_mc must be at least 1")
        self.K = int(K)
        self.alpha_fixed = None if alpha is None else float(alpha)
        self.n_mc = int(n_mc)
        super().__init__(data, sens)
        if self.alpha_fixed is not None:
            self.fixed["alpha"] = self.alpha_fixed
        obs = data.observed
        self._obs_idx = np.flatnonzero(obs)
        self._mis_idx = np.flatnonzero(~obs)
        self._y = np.ascontiguousarray(np.where(obs, data.y, 0.0))
        self._a = np.ascontiguousarray(data.a, dtype=float)
        self._l = np.ascontiguousarray(data.l, dtype=float)
        self._delta = np.ascontiguousarray(data.delta, dtype=float)
        self.y_init = float(np.mean(data.y[obs]))

    def validate(self, data):
        if data.n_obs == 0:
            raise ModelMismatchError("the TSB model needs at least one observed outcome")

    def core_blocks(self):
        K = self.K
        blocks = [Block(name, K, Constraint.unbounded()) for name in ("eta0", "eta1", "eta2")]
        blocks.append(Block("sigma", K, Constraint.lower(0.0)))
        blocks += [Block(name, K, Constraint.unbounded()) for name in ("gamma0", "gamma1", "theta0")]
        blocks.append(Block("phi", K, Constraint.lower(0.0)))
        if K > 1:
            blocks.append(Block("V", K - 1, Constraint.interval(0.0, 1.0)))
            if self.alpha_fixed is None:
                blocks.append(Block("alpha", None, Constraint.lower(0.0)))
        if self.data.n_mis:
            blocks.append(Block("y_mis", self.data.n_mis, Constraint.unbounded()))
        return blocks

    def _full_y(self, p):
        y = self._y.copy()
        if len(self._mis_idx):
            y[self._mis_idx] = p["y_mis"]
        return y

    def weights(self, p) -> np.ndarray:
        return stick_breaking(p["V"]) if self.K > 1 else np.ones(1)

    def _lp_grad(self, p):
        K = self.K
        arr = {k: np.ascontiguousarray(p[k], dtype=float) for k in _COEFS + _SCALES}
        V = np.asarray(p["V"], dtype=float) if K > 1 else np.empty(0)
        log_nu = np.ascontiguousarray(log_stick_breaking(V)) if K > 1 else np.zeros(1)
        xi = np.array([p["xi0"], p["xi1"], p["xi2"], p["xi3"]], dtype=float)
        y = self._full_y(p)
        (ll, g_lnu, g_e0, g_e1, g_e2, g_sig, g_g0, g_g1, g_t0, g_phi, g_xi, g_y) = kernels.tsb_ll_grad(
            log_nu, arr["eta0"], arr["eta1"], arr["eta2"], arr["sigma"], arr["gamma0"], arr["gamma1"],
            arr["theta0"], arr["phi"], xi, y, self._a, self._l, self._delta,
        )
        coefs = np.concatenate([arr[k] for k in _COEFS])
        lp_c, g_c = normal_prior(coefs, COEF_PRIOR_SD)
        g_c = g_c.reshape(len(_COEFS), K)
        grads = {k: g + g_c[j] for j, (k, g) in enumerate(zip(_COEFS, (g_e0, g_e1, g_e2, g_g0, g_g1, g_t0)))}
        scales = np.concatenate([arr["sigma"], arr["phi"]])
        lp = ll + lp_c + float(2 * K * _LOG_HALF_NORMAL_CONST - 0.5 * np.dot(scales, scales) / SCALE_PRIOR_SD**2)
        grads["sigma"] = g_sig - arr["sigma"] / SCALE_PRIOR_SD**2
        grads["phi"] = g_phi - arr["phi"] / SCALE_PRIOR_SD**2
        if K > 1:
            alpha = float(p["alpha"])
            log1m = np.log1p(-V)
            lp += (K - 1) * np.log(alpha) + (alpha - 1.0) * float(log1m.sum())
            grads["V"] = log_stick_breaking_vjp(V, g_lnu) - (alpha - 1.0) / (1.0 - V)
            if self.alpha_fixed is None:
                lp += -alpha
                grads["alpha"] = (K - 1) / alpha + float(log1m.sum()) - 1.0
        for j in range(4):
            grads[f"xi{j}"] = float(g_xi[j])
        if len(self._mis_idx):
            grads["y_mis"] = g_y[self._mis_idx]
        return float(lp), grads

    def _expr(self, p):
        K = self.K
        d = self.data
        if K > 1:
            V = p["V"]
            log_nu, prefix = [], 0.0
            for k in range(K - 1):
                log_nu.append(ad.log(V[k]) + prefix)
                prefix = prefix + ad.log1p(-V[k])
            log_nu.append(prefix)
        else:
            log_nu = [0.0]
        xi0, xi1, xi2, xi3 = p["xi0"], p["xi1"], p["xi2"], p["xi3"]
        terms = []
        j_mis = 0
        for i in range(d.n):
            a, l = float(d.a[i]), float(d.l[i])
            if d.delta[i] == 1:
                y = p["y_mis"][j_mis]
                j_mis += 1
            else:
                y = float(d.y[i])
            comps = []
            for k in range(K):
                mu = p["eta0"][k] + p["eta1"][k] * l + p["eta2"][k] * a
                comps.append(ad.add_n([
                    log_nu[k],
                    ad.normal_lpdf(y, mu, p["sigma"][k]),
                    ad.bernoulli_logit_lpmf(int(a), p["gamma0"][k] + p["gamma1"][k] * l),
                    ad.normal_lpdf(l, p["theta0"][k], p["phi"][k]),
                ]))
            terms.append(ad.log_sum_exp(comps))
            terms.append(ad.bernoulli_logit_lpmf(int(d.delta[i]), xi0 + xi1 * a + xi2 * y + xi3 * a * y))
        for name in _COEFS:
            terms += [ad.normal_lpdf(v, 0.0, COEF_PRIOR_SD) for v in p[name]]
        for name in _SCALES:
            terms += [ad.half_normal_lpdf(v, SCALE_PRIOR_SD) for v in p[name]]
        if K > 1:
            terms += [ad.beta_lpdf(v, 1.0, p["alpha"]) for v in p["V"]]
            if self.alpha_fixed is None:
                terms.append(ad.gamma_lpdf(p["alpha"], 1.0, 1.0))
        return ad.add_n(terms)

    def initial_point(self, rng, radius: float = 2.0) -> np.ndarray:
        q = rng.uniform(-radius, radius, size=self.dim)
        if self.data.n_mis:
            lo, hi = self.layout.offsets["y_mis"]
            q[lo:hi] = self.y_init
        return q

    def components(self, p) -> dict:
        return {k: np.asarray(p[k], dtype=float) for k in _COEFS + _SCALES}

    def _ate(self, p, rng):
        return gformula_tsb(self.components(p), self.weights(p), self.n_mc, rng)

    def describe(self) -> dict:
        out = super().describe()
        out.update(K=self.K, alpha=self.alpha_fixed if self.alpha_fixed is not None else "sampled", n_mc=self.n_mc)
        return out
