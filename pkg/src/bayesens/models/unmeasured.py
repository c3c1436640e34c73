"""Unmeasured confounding through a per-subject latent standard-normal ``u``."""
import numpy as np

from .. import autodiff as ad
from .. import kernels
from ..data import PointMass
from ..estimands.gformula import DEFAULT_RULE, gformula_with_u
from ..sampler.transforms import Constraint
from .base import ETA_PRIOR_SD, GAMMA_PRIOR_SD, Block, ModelMismatchError, ModelSpec, bernoulli_counts, normal_prior
from .complete import check_binary, theta_expr, theta_terms


class UnmeasuredConfoundingModel(ModelSpec):
    """Outcome logit ``eta0 + eta1*a + eta2*l + xi1*u``, treatment logit
    ``gamma0 + gamma1*l + xi2*u`` with ``u_i ~ N(0, 1)`` sampled per subject.

    Note the coefficient order differs from the complete-data model:
    ``eta1`` multiplies the treatment here. Null values ``xi1 = xi2 = 0``.
    """

    name = "unmeasured"
    sensitivity = {
        "xi1": (Constraint.unbounded(), PointMass(0.0)),
        "xi2": (Constraint.unbounded(), PointMass(0.0)),
    }
    null_values = {"xi1": 0.0, "xi2": 0.0}

    def __init__(self, data, sens=None, rule=DEFAULT_RULE):
        super().__init__(data, sens)
        self.rule = rule
        self._y = np.ascontiguousarray(data.y, dtype=float)
        self._a = np.ascontiguousarray(data.a, dtype=float)
        self._l = np.ascontiguousarray(data.l, dtype=float)
        self._l1, self._l0 = bernoulli_counts(data.l)

    def validate(self, data):
        if data.n_mis:
            raise ModelMismatchError("the unmeasured-confounding model needs every outcome observed")
        check_binary(data, "the unmeasured-confounding model")

    def core_blocks(self):
        return [
            Block("eta", 3, Constraint.unbounded()),
            Block("gamma", 2, Constraint.unbounded()),
            Block("theta", None, Constraint.interval(0.0, 1.0)),
            Block("u", self.data.n, Constraint.unbounded()),
        ]

    def _lp_grad(self, p):
        eta = np.ascontiguousarray(p["eta"], dtype=float)
        gamma = np.ascontiguousarray(p["gamma"], dtype=float)
        u = np.ascontiguousarray(p["u"], dtype=float)
        ll, g_eta, g_gamma, g_xi1, g_xi2, g_u = kernels.unmeasured_ll_grad(
            eta, gamma, float(p["xi1"]), float(p["xi2"]), u, self._y, self._a, self._l
        )
        lp_e, g_e = normal_prior(eta, ETA_PRIOR_SD)
        lp_g, g_g = normal_prior(gamma, GAMMA_PRIOR_SD)
        lp_t, g_t = theta_terms(p["theta"], self._l1, self._l0)
        grads = {"eta": g_eta + g_e, "gamma": g_gamma + g_g, "theta": g_t, "u": g_u, "xi1": g_xi1, "xi2": g_xi2}
        return ll + lp_e + lp_g + lp_t, grads

    def _expr(self, p):
        eta, gamma, theta, u, xi1, xi2 = p["eta"], p["gamma"], p["theta"], p["u"], p["xi1"], p["xi2"]
        d = self.data
        terms = []
        for i, (y, a, l) in enumerate(zip(d.y, d.a, d.l)):
            terms.append(ad.bernoulli_logit_lpmf(int(y), eta[0] + eta[1] * a + eta[2] * l + xi1 * u[i]))
            terms.append(ad.bernoulli_logit_lpmf(int(a), gamma[0] + gamma[1] * l + xi2 * u[i]))
            terms.append(ad.normal_lpdf(u[i], 0.0, 1.0))
        terms += [ad.normal_lpdf(e, 0.0, ETA_PRIOR_SD) for e in eta]
        terms += [ad.normal_lpdf(g, 0.0, GAMMA_PRIOR_SD) for g in gamma]
        terms.append(theta_expr(d.l, theta))
        return ad.add_n(terms)

    def _ate(self, p, rng):
        return gformula_with_u(p["eta"], p["xi1"], p["theta"], self.rule)
