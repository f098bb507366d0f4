"""Quadratic/biquadratic rewrite of the sum MSE in the assignment vector.

For fixed receive filters the sum MSE splits (up to an x-independent
constant) into two quadratics and one biquadratic coupling:

    f_u(x)  = x^T L_u x - 2 a_u^T x
    f_d(xd) = xd^T L_d xd - 2 a_d^T xd            with xd = 1 - x
    f_ud(x) = tr(X H X' W X' H^H X R)
              + beta * tr(X H X' S X' H^H X diag_of(R))

where X = diag(x), X' = I - X, H is the raw SI channel, S the beamformer
Gram sum, W = S + kappa*diag_of(S) and R the filter Gram sum.  The coupling
is linearized around an anchor point via the exact matrix gradient, whose
diagonal is the only part that matters along diagonal (assignment)
directions.  All matrices here are built from *unmasked* channels; maskings
enter exclusively through x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .mse_core import ReceiveFilters, ul_vector


@dataclass(frozen=True, eq=False)
class DecompositionTerms:
    """Matrices/vectors of the quadratic rewrite (all filter-dependent)."""

    lambda_ul: np.ndarray  # (M, M) Hermitian PSD
    lambda_dl: np.ndarray  # (M, M) Hermitian PSD
    a_ul: np.ndarray       # (M,) real
    a_dl: np.ndarray       # (M,) real
    sigma_dl: np.ndarray   # (M, M) beamformer Gram sum
    w_mat: np.ndarray      # (M, M) sigma_dl + kappa * diag_of(sigma_dl)
    r_mat: np.ndarray      # (M, M) UL filter Gram sum


@dataclass(frozen=True, eq=False)
class LinearizedObjective:
    """Quadratic model x^T L x - 2 b^T x of the full objective at an anchor."""

    lambda_total: np.ndarray  # (M, M) Hermitian
    b_vec: np.ndarray         # (M,) real
    anchor: np.ndarray        # (M,) the linearization point in [0, 1]^M


def hermitian_residual(mat: np.ndarray) -> float:
    """Relative asymmetry ||A - A^H|| / ||A|| (0 for exactly Hermitian)."""
    scale = np.linalg.norm(mat)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(mat - mat.conj().T) / scale)


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def gamma1_ul(ch: ChannelRealization) -> np.ndarray:
    """Sum over UL users of q * ((kappa+1) h h^H + beta diag_of(h h^H))."""
    g = (1.0 + ch.kappa) * (ch.h_ul * ch.q_ul[None, :]) @ ch.h_ul.conj().T
    g += ch.beta * np.diag(np.sum(np.abs(ch.h_ul) ** 2 * ch.q_ul[None, :], axis=1))
    return g


def theta_dl(ch: ChannelRealization, filters: ReceiveFilters, j: int) -> np.ndarray:
    """Per-user DL quadratic kernel, scaled by the total DL filter power."""
    r_d = float(np.sum(np.abs(filters.r_dl) ** 2))
    outer = np.outer(ch.h_dl[:, j], ch.h_dl[:, j].conj())
    return r_d * ((ch.beta + 1.0) * outer + ch.kappa * np.diag(np.diag(outer)))


def build_quadratic_terms(
    ch: ChannelRealization, filters: ReceiveFilters
) -> DecompositionTerms:
    r_ul, r_dl = filters.r_ul, filters.r_dl

    r_mat = r_ul @ r_ul.conj().T
    sigma_dl = ch.w_dl @ ch.w_dl.conj().T
    w_mat = sigma_dl + ch.kappa * np.diag(np.diag(sigma_dl))

    # lambda_ul[k,l] = Gamma1[k,l] * sum_i conj(R[k,i]) R[l,i]
    lambda_ul = _hermitize(gamma1_ul(ch) * r_mat.conj())

    # Per-beam kernels collapse to one Gram: v_j = conj(w_j) * h_j.
    r_d = float(np.sum(np.abs(r_dl) ** 2))
    v = ch.w_dl.conj() * ch.h_dl
    lambda_dl = r_d * (
        (ch.beta + 1.0) * v @ v.conj().T
        + ch.kappa * np.diag(np.sum(np.abs(v) ** 2, axis=1))
    )
    lambda_dl = _hermitize(lambda_dl)

    sqrt_q = np.sqrt(ch.q_ul)
    a_ul = np.sum(sqrt_q[None, :] * np.real(r_ul.conj() * ch.h_ul), axis=1)
    a_ul -= 0.5 * ch.noise_var_bs * np.sum(np.abs(r_ul) ** 2, axis=1)
    a_dl = np.real((ch.h_dl.conj() * ch.w_dl) @ r_dl.conj())

    return DecompositionTerms(
        lambda_ul=lambda_ul,
        lambda_dl=lambda_dl,
        a_ul=a_ul,
        a_dl=a_dl,
        sigma_dl=sigma_dl,
        w_mat=w_mat,
        r_mat=r_mat,
    )


def f_ul_value(x, terms: DecompositionTerms) -> float:
    xu = ul_vector(x)
    return float(np.real(xu @ terms.lambda_ul @ xu) - 2.0 * terms.a_ul @ xu)


def f_dl_value(x_dl, terms: DecompositionTerms) -> float:
    xd = np.asarray(x_dl, dtype=np.float64)
    return float(np.real(xd @ terms.lambda_dl @ xd) - 2.0 * terms.a_dl @ xd)


def f_ud_value(x, terms: DecompositionTerms, ch: ChannelRealization) -> float:
    """Biquadratic SI coupling at ``(x, 1-x)``; zero whenever either side is."""
    xu = ul_vector(x)
    xd = 1.0 - xu
    m1 = xu[:, None] * ch.h_si * xd[None, :]  # X H_SI X'
    core_w = m1 @ terms.w_mat @ m1.conj().T
    core_s = m1 @ terms.sigma_dl @ m1.conj().T
    diag_r = np.real(np.diag(terms.r_mat))
    val = np.real(np.trace(core_w @ terms.r_mat))
    val += ch.beta * float(np.real(np.diag(core_s)) @ diag_r)
    return float(val)


def grad_f_ud(x, terms: DecompositionTerms, ch: ChannelRealization) -> np.ndarray:
    """Matrix gradient of the coupling w.r.t. X = diag(x), with X' = I - X.

    Eight summands: four from differentiating the outer maskings, four (with
    opposite sign) from the inner ones.  Only the (real) diagonal enters the
    linearization; the full matrix is exposed for testing.  Diagonal factors
    are applied as row/column scalings (this sits in the solver's hot loop).
    """
    xu = ul_vector(x)
    xd = 1.0 - xu
    ht = ch.h_si.T
    hc = ch.h_si.conj()
    rt = terms.r_mat.T
    wt = terms.w_mat.T
    st = terms.sigma_dl.T
    db = ch.beta * np.real(np.diag(terms.r_mat))

    # Hc X' Wt X' Ht and its Sigma counterpart.
    k_w = ((hc * xd[None, :]) @ wt * xd[None, :]) @ ht
    k_s = ((hc * xd[None, :]) @ st * xd[None, :]) @ ht
    # Ht X Rt X Hc and the diag(beta R) analogue Ht (X Db X) Hc.
    n_r = ((ht * xu[None, :]) @ rt * xu[None, :]) @ hc
    n_d = (ht * (xu * db * xu)[None, :]) @ hc

    pos = (rt * xu[None, :]) @ k_w
    pos = pos + (k_w * xu[None, :]) @ rt
    pos = pos + (db * xu)[:, None] * k_s
    pos = pos + k_s * (xu * db)[None, :]

    neg = (n_r * xd[None, :]) @ wt
    neg = neg + (wt * xd[None, :]) @ n_r
    neg = neg + (n_d * xd[None, :]) @ st
    neg = neg + (st * xd[None, :]) @ n_d

    return pos - neg


def grad_f_ud_diag(x, terms: DecompositionTerms, ch: ChannelRealization) -> np.ndarray:
    """Real diagonal of the coupling gradient (directional derivative along
    a diagonal direction d is diag(grad) . d).

    Shares grad_f_ud's factors but extracts diagonals of the remaining
    products directly (einsum) instead of forming them; agreement with the
    full-matrix path is part of the test suite.
    """
    xu = ul_vector(x)
    xd = 1.0 - xu
    ht = ch.h_si.T
    hc = ch.h_si.conj()
    rt = terms.r_mat.T
    wt = terms.w_mat.T
    st = terms.sigma_dl.T
    db = ch.beta * np.real(np.diag(terms.r_mat))

    hcx = hc * xd[None, :]
    k_w = (hcx @ wt * xd[None, :]) @ ht
    k_s = (hcx @ st * xd[None, :]) @ ht
    n_r = ((ht * xu[None, :]) @ rt * xu[None, :]) @ hc
    n_d = (ht * (xu * db * xu)[None, :]) @ hc

    def prod_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("ij,ji->i", a, b)

    diag = prod_diag(rt * xu[None, :], k_w)
    diag = diag + prod_diag(k_w * xu[None, :], rt)
    diag = diag + 2.0 * (db * xu) * np.diag(k_s)
    diag = diag - prod_diag(n_r * xd[None, :], wt)
    diag = diag - prod_diag(wt * xd[None, :], n_r)
    diag = diag - prod_diag(n_d * xd[None, :], st)
    diag = diag - prod_diag(st * xd[None, :], n_d)
    return np.real(diag)


def build_linearized(
    x_anchor, terms: DecompositionTerms, ch: ChannelRealization
) -> LinearizedObjective:
    """Assemble the quadratic model of f_u(x) + f_d(1-x) + linearized f_ud.

    The dropped additive constant is never computed; tests check it only
    for x-independence.
    """
    anchor = ul_vector(x_anchor)
    lambda_total = _hermitize(terms.lambda_ul + terms.lambda_dl)
    ones = np.ones(anchor.size)
    b_vec = (
        terms.a_ul
        + np.real(terms.lambda_dl @ ones)
        - terms.a_dl
        - 0.5 * grad_f_ud_diag(anchor, terms, ch)
    )
    return LinearizedObjective(lambda_total=lambda_total, b_vec=b_vec, anchor=anchor)


def objective_value(x, terms: DecompositionTerms, ch: ChannelRealization) -> float:
    """f_u(x) + f_d(1-x) + f_ud(x): the sum MSE minus its constant part."""
    xu = ul_vector(x)
    return f_ul_value(xu, terms) + f_dl_value(1.0 - xu, terms) + f_ud_value(xu, terms, ch)


# ----------------------------------------------------------------------
# Trace/diagonal identities used by the rewrite (direct two-sided checks).
# ----------------------------------------------------------------------


def identity_trace_cyclic(mats: list[np.ndarray], x: np.ndarray) -> tuple[complex, complex]:
    """sum_i tr(x^H A_i x) == tr((sum_i A_i) x x^H)."""
    lhs = sum(np.vdot(x, a @ x) for a in mats)
    rhs = np.trace(sum(mats) @ np.outer(x, x.conj()))
    return complex(lhs), complex(rhs)


def identity_diag_trace(x: np.ndarray, a: np.ndarray) -> tuple[complex, complex]:
    """tr(diag_of(x x^H) A) == x^H diag_of(A) x."""
    lhs = np.trace(np.diag(np.diag(np.outer(x, x.conj()))) @ a)
    rhs = np.vdot(x, np.diag(np.diag(a)) @ x)
    return complex(lhs), complex(rhs)


def identity_diag_sandwich(
    y: np.ndarray, x: np.ndarray, a: np.ndarray, z: np.ndarray
) -> tuple[complex, complex]:
    """y^H diag(x) A diag(x) z == x^T (diag(conj(y)) A diag(z)) x, x real."""
    lhs = np.vdot(y, np.diag(x) @ a @ np.diag(x) @ z)
    rhs = x @ (np.diag(y.conj()) @ a @ np.diag(z)) @ x
    return complex(lhs), complex(rhs)


def identity_hadamard_trace(
    x: np.ndarray, a: np.ndarray, y: np.ndarray, b: np.ndarray
) -> tuple[complex, complex]:
    """tr(diag(conj(x)) A diag(y) B^T) == x^H (A o B) y."""
    lhs = np.trace(np.diag(x.conj()) @ a @ np.diag(y) @ b.T)
    rhs = np.vdot(x, (a * b) @ y)
    return complex(lhs), complex(rhs)


def identity_suite(
    rng: np.random.Generator | None = None,
    trials: int = 100,
    dim: int = 6,
    tol: float = 1e-10,
) -> dict[str, tuple[bool, float]]:
    """Exercise all four identities on random complex instances.

    Returns name -> (passed, max relative error).  The sandwich identity
    holds for real scaling vectors, matching its use on assignment vectors.
    """
    if rng is None:
        rng = np.random.default_rng(2024)

    def cplx(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def relerr(pair):
        lhs, rhs = pair
        scale = max(abs(lhs), abs(rhs), 1e-30)
        return abs(lhs - rhs) / scale

    results: dict[str, tuple[bool, float]] = {}
    errs = {name: 0.0 for name in
            ("trace_cyclic_sum", "diag_trace", "diag_sandwich", "hadamard_trace")}
    for _ in range(trials):
        x, y, z = cplx(dim), cplx(dim), cplx(dim)
        a, b = cplx(dim, dim), cplx(dim, dim)
        mats = [cplx(dim, dim) for _ in range(3)]
        x_real = rng.standard_normal(dim)
        errs["trace_cyclic_sum"] = max(errs["trace_cyclic_sum"],
                                       relerr(identity_trace_cyclic(mats, x)))
        errs["diag_trace"] = max(errs["diag_trace"], relerr(identity_diag_trace(x, a)))
        errs["diag_sandwich"] = max(errs["diag_sandwich"],
                                    relerr(identity_diag_sandwich(y, x_real, a, z)))
        errs["hadamard_trace"] = max(errs["hadamard_trace"],
                                     relerr(identity_hadamard_trace(x, a, y, b)))
    for name, err in errs.items():
        results[name] = (err < tol, err)
    return results
