"""Exposure misclassification with the true treatment marginalized out."""
import numpy as np

from .. import autodiff as ad
from ..data import PointMass
from ..estimands.gformula import gformula_binary_l
from ..sampler.transforms import Constraint
from .base import ETA_PRIOR_SD, GAMMA_PRIOR_SD, Block, ModelMismatchError, ModelSpec, bernoulli_counts, cells, expit, log_expit, normal_prior
from .complete import check_binary, theta_expr, theta_terms


class MisclassificationModel(ModelSpec):
    """Outcome ``expit(eta0 + eta1*l + eta2*a)`` with the recorded treatment
    ``a~`` misclassified: ``P(a~=1 | a=1) = xi1``, ``P(a~=1 | a=0) = xi2``.

    Each row contributes ``log sum_a Ber(a~; xi1^a xi2^(1-a)) Ber(y; .) Ber(a; expit(gamma0 + gamma1*l))``
    plus the covariate term. The dataset's ``a`` column holds ``a~``.
    Null values: ``xi1 -> 1``, ``xi2 -> 0``.
    """

    name = "misclassification"
    sensitivity = {
        "xi1": (Constraint.interval(0.0, 1.0), PointMass(0.999)),
        "xi2": (Constraint.interval(0.0, 1.0), PointMass(0.001)),
    }
    null_values = {"xi1": 0.999, "xi2": 0.001}

    def validate(self, data):
        if data.n_mis:
            raise ModelMismatchError("the misclassification model needs every outcome observed")
        check_binary(data, "the misclassification model")

    def core_blocks(self):
        return [
            Block("eta", 3, Constraint.unbounded()),
            Block("gamma", 2, Constraint.unbounded()),
            Block("theta", None, Constraint.interval(0.0, 1.0)),
        ]

    def __init__(self, data, sens=None):
        super().__init__(data, sens)
        (self._y, self._at, self._l), self._w = cells(data.y, data.a, data.l)
        self._l1, self._l0 = bernoulli_counts(data.l)

    def _lp_grad(self, p):
        eta, gamma, theta, xi1, xi2 = p["eta"], p["gamma"], p["theta"], p["xi1"], p["xi2"]
        y, at, l, w = self._y, self._at, self._l, self._w
        x1 = eta[0] + eta[1] * l + eta[2]
        x0 = eta[0] + eta[1] * l
        z = gamma[0] + gamma[1] * l
        c1 = at * np.log(xi1) + (1.0 - at) * np.log1p(-xi1) + y * log_expit(x1) + (1.0 - y) * log_expit(-x1) + log_expit(z)
        c0 = at * np.log(xi2) + (1.0 - at) * np.log1p(-xi2) + y * log_expit(x0) + (1.0 - y) * log_expit(-x0) + log_expit(-z)
        row = np.logaddexp(c1, c0)
        r1 = np.exp(c1 - row)
        r0 = 1.0 - r1
        lp = float(np.dot(w, row))
        d1 = w * r1 * (y - expit(x1))
        d0 = w * r0 * (y - expit(x0))
        g_eta = np.array([np.sum(d1 + d0), np.dot(d1 + d0, l), np.sum(d1)])
        dz = w * (r1 - expit(z))
        g_gamma = np.array([dz.sum(), np.dot(dz, l)])
        g_xi1 = float(np.sum(w * r1 * (at / xi1 - (1.0 - at) / (1.0 - xi1))))
        g_xi2 = float(np.sum(w * r0 * (at / xi2 - (1.0 - at) / (1.0 - xi2))))
        lp_e, g_e = normal_prior(eta, ETA_PRIOR_SD)
        lp_g, g_g = normal_prior(gamma, GAMMA_PRIOR_SD)
        lp_t, g_t = theta_terms(theta, self._l1, self._l0)
        grads = {"eta": g_eta + g_e, "gamma": g_gamma + g_g, "theta": g_t, "xi1": g_xi1, "xi2": g_xi2}
        return lp + lp_e + lp_g + lp_t, grads

    def _expr(self, p):
        eta, gamma, theta, xi1, xi2 = p["eta"], p["gamma"], p["theta"], p["xi1"], p["xi2"]
        d = self.data
        terms = []
        for y, at, l in zip(d.y, d.a, d.l):
            y, at = int(y), int(at)
            z = gamma[0] + gamma[1] * l
            c1 = ad.bernoulli_lpmf(at, xi1) + ad.bernoulli_logit_lpmf(y, eta[0] + eta[1] * l + eta[2]) + ad.log_expit(z)
            c0 = ad.bernoulli_lpmf(at, xi2) + ad.bernoulli_logit_lpmf(y, eta[0] + eta[1] * l) + ad.log_expit(-z)
            terms.append(ad.log_sum_exp([c1, c0]))
        terms += [ad.normal_lpdf(e, 0.0, ETA_PRIOR_SD) for e in eta]
        terms += [ad.normal_lpdf(g, 0.0, GAMMA_PRIOR_SD) for g in gamma]
        terms.append(theta_expr(d.l, theta))
        return ad.add_n(terms)

    def _ate(self, p, rng):
        return gformula_binary_l(p["eta"], p["theta"])
