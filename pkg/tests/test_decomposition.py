import numpy as np
import pytest
from numpy.testing import assert_allclose

from fdsplit import (
    build_linearized,
    build_quadratic_terms,
    f_ud_value,
    grad_f_ud,
    grad_f_ud_diag,
    identity_suite,
    mmse_filters,
)
from fdsplit.decomposition import (
    f_dl_value,
    f_ul_value,
    gamma1_ul,
    hermitian_residual,
    identity_diag_sandwich,
    identity_diag_trace,
    identity_hadamard_trace,
    identity_trace_cyclic,
    objective_value,
    theta_dl,
)
from fdsplit.mse_core import ReceiveFilters, sum_mse_fixed_filters

from conftest import make_instance


def _filters_and_terms(ch, x):
    f = mmse_filters(ch, x)
    return f, build_quadratic_terms(ch, f)


# ------------------------------------------------------- quadratic pieces


def test_zero_filters_zero_quadratics(rng):
    ch = make_instance(rng)
    f = ReceiveFilters(r_ul=np.zeros((4, 2), complex), r_dl=np.zeros(2, complex))
    terms = build_quadratic_terms(ch, f)
    assert_allclose(terms.lambda_ul, 0.0)
    assert_allclose(terms.a_ul, 0.0)
    assert_allclose(terms.lambda_dl, 0.0)
    assert_allclose(terms.a_dl, 0.0)
    assert_allclose(terms.r_mat, 0.0)


def test_scalar_collapse_lambda_ul(rng):
    ch = make_instance(rng, m=1, num_ul=1, num_dl=0, kappa=0.0, beta=0.0,
                       si_power=1e-12)
    f = mmse_filters(ch, np.array([1.0]))
    terms = build_quadratic_terms(ch, f)
    r = f.r_ul[0, 0]
    expected = abs(r) ** 2 * ch.q_ul[0] * abs(ch.h_ul[0, 0]) ** 2
    assert terms.lambda_ul[0, 0] == pytest.approx(expected, rel=1e-12)


def test_f_ul_two_code_paths(rng):
    """Vector quadratic form vs direct evaluation with diagonal maskings."""
    ch = make_instance(rng, m=5, num_ul=3, num_dl=2, kappa=1e-3, beta=1e-3)
    x = rng.random(5)
    f, terms = _filters_and_terms(ch, x)
    fast = f_ul_value(x, terms)
    big_x = np.diag(x)
    gam = gamma1_ul(ch)
    direct = 0.0
    for i in range(3):
        r = f.r_ul[:, i]
        direct += float(np.real(r.conj() @ big_x @ gam @ big_x @ r))
        direct += ch.noise_var_bs * float(np.real(r.conj() @ big_x @ r))
        direct -= 2 * np.sqrt(ch.q_ul[i]) * float(
            np.real(r.conj() @ big_x @ ch.h_ul[:, i])
        )
    assert fast == pytest.approx(direct, rel=1e-10)


def test_f_dl_two_code_paths(rng):
    ch = make_instance(rng, m=5, num_ul=2, num_dl=3, kappa=1e-3, beta=1e-3)
    x = rng.random(5)
    f, terms = _filters_and_terms(ch, x)
    xd = 1.0 - x
    fast = f_dl_value(xd, terms)
    big_xd = np.diag(xd)
    direct = 0.0
    for j in range(3):
        w = ch.w_dl[:, j]
        th = theta_dl(ch, f, j)
        direct += float(np.real(w.conj() @ big_xd @ th @ big_xd @ w))
        direct -= 2 * float(
            np.real(np.conj(f.r_dl[j]) * (ch.h_dl[:, j].conj() @ big_xd @ w))
        )
    assert fast == pytest.approx(direct, rel=1e-10)


def test_lambda_matrices_hermitian_psd(rng):
    ch = make_instance(rng, m=6, num_ul=3, num_dl=3, kappa=1e-3, beta=1e-3)
    _, terms = _filters_and_terms(ch, rng.random(6))
    for mat in (terms.lambda_ul, terms.lambda_dl, terms.sigma_dl, terms.r_mat):
        assert hermitian_residual(mat) < 1e-12
        assert np.linalg.eigvalsh(mat).min() >= -1e-10 * np.linalg.norm(mat)


# ---------------------------------------------------------------- coupling


def test_f_ud_vanishes_at_degenerate_assignments(rng):
    ch = make_instance(rng)
    _, terms = _filters_and_terms(ch, rng.random(4))
    assert f_ud_value(np.ones(4), terms, ch) == 0.0
    assert f_ud_value(np.zeros(4), terms, ch) == 0.0


def test_f_ud_matches_si_terms_of_covariance(rng):
    """The coupling equals the SI part of the UL covariance contracted with
    the filters (the two-trace form vs the per-user sum form)."""
    ch = make_instance(rng, m=5, num_ul=2, num_dl=3, kappa=1e-3, beta=1e-3)
    x = rng.random(5)
    f, terms = _filters_and_terms(ch, x)
    val = f_ud_value(x, terms, ch)
    xd = 1.0 - x
    h_si_eff = x[:, None] * ch.h_si * xd[None, :]
    acc = 0.0
    for i in range(2):
        r = f.r_ul[:, i]
        si = np.zeros((5, 5), complex)
        for j in range(3):
            w = ch.w_dl[:, j]
            ww = np.outer(w, w.conj())
            si += h_si_eff @ (ww + ch.kappa * np.diag(np.diag(ww))) @ h_si_eff.conj().T
            si += ch.beta * np.diag(np.diag(h_si_eff @ ww @ h_si_eff.conj().T))
        acc += float(np.real(np.vdot(r, si @ r)))
    assert val == pytest.approx(acc, rel=1e-10)


def test_grad_zero_when_si_channel_zero(rng):
    ch = make_instance(rng)
    ch.h_si[:] = 0.0
    _, terms = _filters_and_terms(ch, rng.random(4))
    assert_allclose(grad_f_ud(rng.random(4), terms, ch), 0.0)


def test_grad_beta_zero_kills_diag_summands(rng):
    # With beta = 0 the gradient reduces to the four filter-Gram terms;
    # check by comparing against a manual evaluation of those four.
    ch = make_instance(rng, m=4, num_ul=2, num_dl=2, kappa=1e-3, beta=0.0)
    x = rng.random(4)
    f, terms = _filters_and_terms(ch, x)
    g = grad_f_ud(x, terms, ch)
    big_x, big_xd = np.diag(x), np.diag(1.0 - x)
    ht, hc = ch.h_si.T, ch.h_si.conj()
    rt, wt = terms.r_mat.T, terms.w_mat.T
    manual = rt @ big_x @ hc @ big_xd @ wt @ big_xd @ ht
    manual += hc @ big_xd @ wt @ big_xd @ ht @ big_x @ rt
    manual -= ht @ big_x @ rt @ big_x @ hc @ big_xd @ wt
    manual -= wt @ big_xd @ ht @ big_x @ rt @ big_x @ hc
    assert_allclose(g, manual, rtol=1e-12, atol=1e-15)


def test_grad_finite_difference_agreement(rng):
    worst = 0.0
    for _ in range(4):
        ch = make_instance(rng, m=6, num_ul=2, num_dl=2,
                           si_power=0.05, kappa=1e-3, beta=1e-3)
        x = 0.1 + 0.8 * rng.random(6)
        _, terms = _filters_and_terms(ch, x)
        diag = grad_f_ud_diag(x, terms, ch)
        h = 1e-6
        for _ in range(5):
            d = rng.standard_normal(6)
            fd = (f_ud_value(x + h * d, terms, ch)
                  - f_ud_value(x - h * d, terms, ch)) / (2 * h)
            worst = max(worst, abs(fd - diag @ d) / max(abs(fd), 1e-30))
    assert worst < 1e-6


def test_grad_diag_fast_path_equals_full_matrix(rng):
    for _ in range(6):
        ch = make_instance(rng, m=5, num_ul=2, num_dl=3, kappa=2e-2, beta=1e-2)
        x = rng.random(5)
        _, terms = _filters_and_terms(ch, x)
        assert_allclose(
            grad_f_ud_diag(x, terms, ch),
            np.real(np.diag(grad_f_ud(x, terms, ch))),
            rtol=1e-11, atol=1e-16,
        )


# ------------------------------------------------------------ linearization


def test_linearized_b_reduces_when_terms_vanish(rng):
    # No SI and zero DL filters: B collapses to a_ul - a_dl = a_ul.
    ch = make_instance(rng, m=4, num_ul=2, num_dl=2)
    ch.h_si[:] = 0.0
    f = mmse_filters(ch, rng.random(4))
    f = ReceiveFilters(r_ul=f.r_ul, r_dl=np.zeros(2, complex))
    terms = build_quadratic_terms(ch, f)
    lin = build_linearized(rng.random(4), terms, ch)
    assert_allclose(lin.b_vec, terms.a_ul, rtol=1e-12, atol=1e-15)
    assert_allclose(terms.lambda_dl, 0.0)


def test_linearized_model_constant_offset(rng):
    """x^T L x - 2 b^T x differs from f_u + f_d + (linearized coupling) by a
    constant independent of x."""
    ch = make_instance(rng, m=5, num_ul=2, num_dl=2, kappa=1e-3, beta=1e-3)
    anchor = rng.random(5)
    f, terms = _filters_and_terms(ch, anchor)
    lin = build_linearized(anchor, terms, ch)
    diag = grad_f_ud_diag(anchor, terms, ch)
    base = f_ud_value(anchor, terms, ch)

    offsets = []
    for _ in range(10):
        x = rng.random(5)
        model = float(np.real(x @ lin.lambda_total @ x) - 2.0 * lin.b_vec @ x)
        g_u = base + diag @ (x - anchor)
        truth = f_ul_value(x, terms) + f_dl_value(1.0 - x, terms) + g_u
        offsets.append(truth - model)
    spread = max(offsets) - min(offsets)
    scale = max(1.0, max(abs(o) for o in offsets))
    assert spread / scale < 1e-8


def test_linearized_tangency_at_binary_anchor(rng):
    """At a binary anchor the model offset against the *full* objective is
    the same constant (first-order tangency of the coupling)."""
    ch = make_instance(rng, m=5, num_ul=2, num_dl=2, kappa=1e-3, beta=1e-3)
    anchor = (rng.random(5) > 0.5).astype(float)
    f, terms = _filters_and_terms(ch, anchor)
    lin = build_linearized(anchor, terms, ch)
    diag = grad_f_ud_diag(anchor, terms, ch)
    base = f_ud_value(anchor, terms, ch)

    # Constant measured at generic points against the linearized truth.
    x = rng.random(5)
    model_x = float(np.real(x @ lin.lambda_total @ x) - 2.0 * lin.b_vec @ x)
    g_u = base + diag @ (x - anchor)
    const = f_ul_value(x, terms) + f_dl_value(1.0 - x, terms) + g_u - model_x

    model_a = float(np.real(anchor @ lin.lambda_total @ anchor) - 2.0 * lin.b_vec @ anchor)
    full_a = objective_value(anchor, terms, ch)
    assert full_a - model_a == pytest.approx(const, rel=1e-8, abs=1e-10)


def test_decomposition_difference_form_matches_sum_mse(rng):
    """For fixed filters, objective differences equal sum-MSE differences."""
    worst = 0.0
    for _ in range(10):
        ch = make_instance(rng, m=6, num_ul=3, num_dl=3, kappa=1e-3, beta=1e-3)
        x1, x2 = rng.random(6), (rng.random(6) > 0.5).astype(float)
        f, terms = _filters_and_terms(ch, x1)
        lhs = objective_value(x1, terms, ch) - objective_value(x2, terms, ch)
        rhs = sum_mse_fixed_filters(ch, x1, f) - sum_mse_fixed_filters(ch, x2, f)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
    assert worst < 1e-8


def test_lambda_total_symmetrized(rng):
    ch = make_instance(rng, m=5, num_ul=2, num_dl=2)
    f, terms = _filters_and_terms(ch, rng.random(5))
    lin = build_linearized(rng.random(5), terms, ch)
    assert hermitian_residual(lin.lambda_total) < 1e-12
    assert np.all(np.isreal(lin.b_vec))


# ------------------------------------------------------------- identities


def test_identity_suite_all_pass():
    results = identity_suite(np.random.default_rng(77), trials=100, dim=6)
    for name, (passed, err) in results.items():
        assert passed, f"{name} failed with max rel err {err}"


def test_identity_diag_trace_with_identity_matrix(rng):
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    lhs, rhs = identity_diag_trace(x, np.eye(5, dtype=complex))
    assert lhs == pytest.approx(np.linalg.norm(x) ** 2)
    assert rhs == pytest.approx(lhs)


def test_identity_hadamard_with_identity_b(rng):
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    lhs, rhs = identity_hadamard_trace(x, a, y, np.eye(4, dtype=complex))
    expected = sum(np.conj(x[k]) * a[k, k] * y[k] for k in range(4))
    assert lhs == pytest.approx(expected)
    assert rhs == pytest.approx(expected)


def test_identity_sandwich_direct(rng):
    y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    x = rng.standard_normal(6)
    lhs, rhs = identity_diag_sandwich(y, x, a, z)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_identity_trace_cyclic_direct(rng):
    mats = [rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            for _ in range(4)]
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    lhs, rhs = identity_trace_cyclic(mats, x)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))
