"""Reverse-mode tape: values, gradients, partials and domain errors."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from bayesens import autodiff as ad
from bayesens import numkit as nk


def central_diff(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(list(x + e)) - f(list(x - e))) / (2 * h)
    return out


def rel_err(a, b, floor=1e-8):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), floor / 1e-6 * 1e-6 + 1.0))


def test_identity():
    value, g = ad.grad(lambda v: v[0], [3.7])
    assert value == 3.7
    assert list(g) == [1.0]


def test_product_rule():
    value, g = ad.grad(lambda v: v[0] * v[1], [2.0, 3.0])
    assert value == 6.0
    assert list(g) == [3.0, 2.0]


def test_constant_output_has_zero_gradient():
    value, g = ad.grad(lambda v: 4.0, [1.0, 2.0])
    assert value == 4.0 and list(g) == [0.0, 0.0]


def test_logistic_likelihood_against_finite_differences():
    y = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1]
    l = [0.3, -1.2, 0.8, 1.5, -0.4, 0.0, 2.1, -2.0, 0.6, 1.1]

    def f(b):
        return ad.add_n([ad.bernoulli_lpmf(yi, ad.expit(b[0] + b[1] * li)) for yi, li in zip(y, l)])

    value, g = ad.grad(f, [0.2, -0.5])
    fd = central_diff(lambda b: float(f(b)), [0.2, -0.5])
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)
    assert value == pytest.approx(sum(nk.bernoulli_lpmf(yi, nk.expit(0.2 - 0.5 * li)) for yi, li in zip(y, l)))


def test_every_primitive_against_finite_differences(rng):
    cases = [
        (lambda v: ad.exp(v[0]) / v[1] - v[0], [0.3, 1.7]),
        (lambda v: ad.log(v[0]) + ad.log1p(v[1]) + ad.square(v[0] - v[1]), [1.3, 0.4]),
        (lambda v: ad.log_expit(v[0]) + ad.expit(-v[1]), [-0.8, 2.2]),
        (lambda v: ad.log_sum_exp([v[0], 2.0 * v[1], v[0] * v[1]]), [0.5, -1.1]),
        (lambda v: ad.normal_lpdf(v[0], v[1], ad.exp(v[2])), [0.4, -0.2, 0.3]),
        (lambda v: ad.beta_lpdf(ad.expit(v[0]), ad.exp(v[1]), ad.exp(v[2])), [0.3, 0.2, -0.4]),
        (lambda v: ad.gamma_lpdf(ad.exp(v[0]), ad.exp(v[1]), ad.exp(v[2])), [0.1, 0.5, -0.3]),
        (lambda v: ad.half_normal_lpdf(ad.exp(v[0]), ad.exp(v[1])), [-0.2, 0.6]),
        (lambda v: ad.bernoulli_logit_lpmf(1, v[0]) + ad.bernoulli_logit_lpmf(0, v[1]), [0.7, -1.3]),
        (lambda v: -v[0] + (2.0 - v[1]) * 3.0 + 1.0 / v[0], [0.9, 0.2]),
    ]
    for f, x in cases:
        _, g = ad.grad(f, x)
        fd = central_diff(lambda v: float(f(v)), x)
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8), f


def test_partials_of_primitives():
    x = 0.37
    assert ad.supported_primitive_partials("expit", [x])[0] == pytest.approx(nk.expit(x) * (1 - nk.expit(x)), abs=1e-15)
    w = ad.supported_primitive_partials("log_sum_exp", [0.2, -1.4])
    assert abs(sum(w) - 1.0) < 1e-12
    assert w[0] == pytest.approx(1 / (1 + math.exp(-1.6)))
    d = ad.supported_primitive_partials("normal_lpdf", [1.0, 0.0, 1.0])
    h = 1e-6
    fd = (nk.normal_lpdf(1.0, h, 1.0) - nk.normal_lpdf(1.0, -h, 1.0)) / (2 * h)
    assert d[1] == pytest.approx(1.0) and d[1] == pytest.approx(fd, rel=1e-8)


def test_unknown_primitive_is_internal_error():
    with pytest.raises(RuntimeError):
        ad.supported_primitive_partials("tanh", [0.1])


def test_domain_error_carries_node():
    def f(v):
        return ad.log(v[0] - 2.0)

    with pytest.raises(ad.AutodiffDomainError) as info:
        ad.grad(f, [1.0])
    assert info.value.kind == "log"
    assert info.value.node >= 1
    assert isinstance(info.value, nk.DomainError)


def test_floats_pass_through_without_tape():
    assert ad.normal_lpdf(0.0, 0.0, 1.0) == nk.normal_lpdf(0.0, 0.0, 1.0)
    assert ad.log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2.0))


def test_mixing_tapes_is_rejected():
    t1, t2 = ad.Tape(), ad.Tape()
    with pytest.raises(ValueError):
        t1.variable(1.0) + t2.variable(2.0)


def test_tape_parents_precede_children():
    tape = ad.Tape()
    x = tape.variable(0.5)
    y = ad.exp(x) * x + ad.log1p(x)
    for i, parents in enumerate(tape.parents):
        assert all(p < i for p in parents)
    assert y.idx == len(tape) - 1


@settings(max_examples=30, deadline=None)
@given(hs.lists(hs.floats(-3, 3), min_size=3, max_size=3))
def test_gradient_of_sum_is_sum_of_gradients(x):
    def f(v):
        return ad.exp(v[0]) * v[1] + ad.log_expit(v[2])

    def g(v):
        return ad.square(v[0] - v[2]) + ad.expit(v[1])

    _, gf = ad.grad(f, x)
    _, gg = ad.grad(g, x)
    _, gs = ad.grad(lambda v: f(v) + g(v), x)
    assert np.allclose(gs, gf + gg, rtol=1e-12, atol=1e-12)


def test_repeat_evaluation_is_bit_identical():
    def f(v):
        return ad.log_sum_exp([ad.normal_lpdf(v[0], v[1], 1.3), ad.beta_lpdf(0.4, ad.exp(v[0]), 2.0)])

    a = ad.grad(f, [0.3, -0.1])
    b = ad.grad(f, [0.3, -0.1])
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
