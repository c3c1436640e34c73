"""Binary outcome missing not at random, missing outcomes summed out."""
import numpy as np

from .. import autodiff as ad
from ..data import NormalPrior, PointMass
from ..estimands.gformula import gformula_binary_l
from ..sampler.transforms import Constraint
from .base import ETA_PRIOR_SD, Block, ModelMismatchError, ModelSpec, bernoulli_counts, cells, expit, log_expit, normal_prior
from .complete import theta_expr, theta_terms

MISSINGNESS_PRIOR_SD = 3.0


class MNARBinaryModel(ModelSpec):
    """Outcome ``expit(eta0 + eta1*l + eta2*a)`` with missingness
    ``P(delta=1 | y, a) = expit(xi0 + xi1*a + xi2*y + xi3*a*y)``.

    Observed rows contribute the outcome and ``delta = 0`` terms; each
    missing row contributes ``log sum_y P(delta=1 | y, a) P(y | a, l)``.
    The treatment model factors out and is dropped. ``xi0`` and ``xi1`` are
    estimable and sampled under ``N(0, 3)`` priors by default; ``xi2`` and
    ``xi3`` default to their MAR null value 0.
    """

    name = "mnar-binary"
    sensitivity = {
        "xi0": (Constraint.unbounded(), NormalPrior(0.0, MISSINGNESS_PRIOR_SD)),
        "xi1": (Constraint.unbounded(), NormalPrior(0.0, MISSINGNESS_PRIOR_SD)),
        "xi2": (Constraint.unbounded(), PointMass(0.0)),
        "xi3": (Constraint.unbounded(), PointMass(0.0)),
    }
    null_values = {"xi2": 0.0, "xi3": 0.0}

    def validate(self, data):
        if not data.binary_covariate:
            raise ModelMismatchError("the MNAR binary model requires a binary covariate l")
        if not data.binary_outcome:
            raise ModelMismatchError("the MNAR binary model requires a binary outcome y")

    def core_blocks(self):
        return [Block("eta", 3, Constraint.unbounded()), Block("theta", None, Constraint.interval(0.0, 1.0))]

    def __init__(self, data, sens=None):
        super().__init__(data, sens)
        obs = data.observed
        (self._y, self._ao, self._lo), self._wo = cells(data.y[obs], data.a[obs], data.l[obs]) if obs.any() else ([np.empty(0)] * 3, np.empty(0))
        mis = ~obs
        (self._am, self._lm), self._wm = cells(data.a[mis], data.l[mis]) if mis.any() else ([np.empty(0)] * 2, np.empty(0))
        self._l1, self._l0 = bernoulli_counts(data.l)

    def _lp_grad(self, p):
        eta, theta = p["eta"], p["theta"]
        xi = np.array([p["xi0"], p["xi1"], p["xi2"], p["xi3"]], dtype=float)
        g_eta = np.zeros(3)
        g_xi = np.zeros(4)
        lp = 0.0

        # observed rows: outcome term plus delta = 0
        y, a, l, w = self._y, self._ao, self._lo, self._wo
        x = eta[0] + eta[1] * l + eta[2] * a
        m = xi[0] + xi[1] * a + xi[2] * y + xi[3] * a * y
        lp += float(np.dot(w, y * log_expit(x) + (1.0 - y) * log_expit(-x) + log_expit(-m)))
        dx = w * (y - expit(x))
        g_eta += [dx.sum(), np.dot(dx, l), np.dot(dx, a)]
        dm = -w * expit(m)
        g_xi += [dm.sum(), np.dot(dm, a), np.dot(dm, y), np.dot(dm, a * y)]

        # missing rows: two-term mixture over the unseen outcome
        a, l, w = self._am, self._lm, self._wm
        x = eta[0] + eta[1] * l + eta[2] * a
        m1 = xi[0] + xi[1] * a + xi[2] + xi[3] * a
        m0 = xi[0] + xi[1] * a
        c1 = log_expit(m1) + log_expit(x)
        c0 = log_expit(m0) + log_expit(-x)
        row = np.logaddexp(c1, c0)
        r1 = np.exp(c1 - row)
        r0 = 1.0 - r1
        lp += float(np.dot(w, row))
        dx = w * (r1 - expit(x))
        g_eta += [dx.sum(), np.dot(dx, l), np.dot(dx, a)]
        d1 = w * r1 * expit(-m1)
        d0 = w * r0 * expit(-m0)
        g_xi += [np.sum(d1 + d0), np.dot(d1 + d0, a), d1.sum(), np.dot(d1, a)]

        lp_e, g_e = normal_prior(eta, ETA_PRIOR_SD)
        lp_t, g_t = theta_terms(theta, self._l1, self._l0)
        grads = {"eta": g_eta + g_e, "theta": g_t}
        grads.update({f"xi{j}": float(g_xi[j]) for j in range(4)})
        return lp + lp_e + lp_t, grads

    def _expr(self, p):
        eta, theta = p["eta"], p["theta"]
        xi0, xi1, xi2, xi3 = p["xi0"], p["xi1"], p["xi2"], p["xi3"]
        d = self.data
        terms = []
        for y, a, l, dl in zip(d.y, d.a, d.l, d.delta):
            x = eta[0] + eta[1] * l + eta[2] * a
            if dl == 0:
                terms.append(ad.bernoulli_logit_lpmf(int(y), x))
                terms.append(ad.bernoulli_logit_lpmf(0, xi0 + xi1 * a + xi2 * y + xi3 * a * y))
            else:
                c1 = ad.bernoulli_logit_lpmf(1, xi0 + xi1 * a + xi2 + xi3 * a) + ad.bernoulli_logit_lpmf(1, x)
                c0 = ad.bernoulli_logit_lpmf(1, xi0 + xi1 * a) + ad.bernoulli_logit_lpmf(0, x)
                terms.append(ad.log_sum_exp([c1, c0]))
        terms += [ad.normal_lpdf(e, 0.0, ETA_PRIOR_SD) for e in eta]
        terms.append(theta_expr(d.l, theta))
        return ad.add_n(terms)

    def _ate(self, p, rng):
        return gformula_binary_l(p["eta"], p["theta"])
