"""Complete-data logistic outcome model with a Bernoulli covariate."""
import numpy as np

from .. import autodiff as ad
from ..estimands.gformula import gformula_binary_l
from ..sampler.transforms import Constraint
from .base import ETA_PRIOR_SD, Block, ModelMismatchError, ModelSpec, bernoulli_counts, cells, expit, log_expit, normal_prior


def theta_terms(theta, ones, zeros):
    """``Bernoulli(l; theta)`` over the sample plus the flat Beta(1, 1) prior."""
    return ones * np.log(theta) + zeros * np.log1p(-theta), ones / theta - zeros / (1.0 - theta)


def theta_expr(l, theta):
    return ad.add_n([ad.bernoulli_lpmf(int(li), theta) for li in l] + [ad.beta_lpdf(theta, 1.0, 1.0)])


def check_binary(data, what):
    if not data.binary_covariate:
        raise ModelMismatchError(f"{what} requires a binary covariate l")
    if not data.binary_outcome:
        raise ModelMismatchError(f"{what} requires a binary outcome y")


class CompleteDataModel(ModelSpec):
    """``y ~ Bernoulli(expit(eta0 + eta1*l + eta2*a))``, ``l ~ Bernoulli(theta)``.

    Priors: ``eta ~ N(0, 3)``, ``theta ~ Beta(1, 1)``. The treatment model
    factorizes out of the posterior and is omitted.
    """

    name = "complete"
    sensitivity = {}

    def validate(self, data):
        if data.n_mis:
            raise ModelMismatchError(
                f"{data.n_mis} outcomes are missing; the complete-data model needs every outcome. "
                "Use the 'mnar-binary' model for data with missing outcomes."
            )
        check_binary(data, "the complete-data model")

    def core_blocks(self):
        return [Block("eta", 3, Constraint.unbounded()), Block("theta", None, Constraint.interval(0.0, 1.0))]

    def __init__(self, data, sens=None):
        super().__init__(data, sens)
        (self._y, self._a, self._l), self._w = cells(data.y, data.a, data.l)
        self._l1, self._l0 = bernoulli_counts(data.l)

    def _lp_grad(self, p):
        eta, theta = p["eta"], p["theta"]
        x = eta[0] + eta[1] * self._l + eta[2] * self._a
        y, w = self._y, self._w
        lp = float(np.sum(w * (y * log_expit(x) + (1.0 - y) * log_expit(-x))))
        dx = w * (y - expit(x))
        g_eta = np.array([dx.sum(), np.dot(dx, self._l), np.dot(dx, self._a)])
        lp_e, g_e = normal_prior(eta, ETA_PRIOR_SD)
        lp_t, g_t = theta_terms(theta, self._l1, self._l0)
        return lp + lp_e + lp_t, {"eta": g_eta + g_e, "theta": g_t}

    def _expr(self, p):
        eta, theta = p["eta"], p["theta"]
        d = self.data
        terms = [
            ad.bernoulli_logit_lpmf(int(y), eta[0] + eta[1] * l + eta[2] * a)
            for y, a, l in zip(d.y, d.a, d.l)
        ]
        terms += [ad.normal_lpdf(e, 0.0, ETA_PRIOR_SD) for e in eta]
        terms.append(theta_expr(d.l, theta))
        return ad.add_n(terms)

    def _ate(self, p, rng):
        return gformula_binary_l(p["eta"], p["theta"])
