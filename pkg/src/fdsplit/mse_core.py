"""Per-user MSE machinery under an UL/DL antenna assignment.

Conventions: the assignment is the length-M UL vector ``x`` (relaxed in
[0,1] or binary); the DL vector is always ``1 - x``.  Effective channels are
the diagonal maskings ``X^u H^u``, ``X^d H^d`` and ``X^u H_SI X^d``.  All
expressions are evaluated directly with fractional maskings when ``x`` is
relaxed; the BS noise term stays linear in ``x`` (it enters as ``sigma^2
X^u``), which coincides with the physical masking only at binary points.

The DL interference variance groups the multi-user and receive-distortion
terms per *beam*, pairing beam m with user m's own effective channel.  That
grouping is what makes the quadratic/biquadratic decomposition in
:mod:`fdsplit.decomposition` an exact rewrite of the sum MSE; as a per-user
expectation it is exact when a single DL user is served.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization

#: Assignment entries at or below this threshold are treated as "antenna
#: off" when restricting the UL MMSE inverse to the active set.
ACTIVE_EPS = 1e-9

#: Numerical slack allowed on the MSE <= 1 contract before raising.
_MSE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class AntennaAssignment:
    """UL assignment vector; entries in [0,1] (relaxed) or {0,1} (binary)."""

    x_ul: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x_ul, dtype=np.float64).reshape(-1)
        if x.size == 0:
            raise ValueError("assignment must have at least one antenna")
        if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
            raise ValueError("assignment entries must lie in [0, 1]")
        object.__setattr__(self, "x_ul", np.clip(x, 0.0, 1.0))

    @property
    def x_dl(self) -> np.ndarray:
        return 1.0 - self.x_ul

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.x_ul == 0.0) | (self.x_ul == 1.0)))

    @classmethod
    def from_bits(cls, bits) -> "AntennaAssignment":
        return cls(np.asarray(bits, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class ReceiveFilters:
    """UL filter columns ``r_ul (M, I)`` and DL scalars ``r_dl (J,)``."""

    r_ul: np.ndarray
    r_dl: np.ndarray


@dataclass(frozen=True, eq=False)
class MseReport:
    mse_ul: np.ndarray
    mse_dl: np.ndarray
    sum_mse: float
    sum_se: float


def ul_vector(x) -> np.ndarray:
    """Coerce an AntennaAssignment or array-like into the UL vector."""
    vec = x.x_ul if isinstance(x, AntennaAssignment) else np.asarray(x, dtype=np.float64)
    return np.asarray(vec, dtype=np.float64).reshape(-1)


def effective_channels(
    ch: ChannelRealization, x
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Masked channels ``(X^u H^u, X^d H^d, X^u H_SI X^d)``."""
    xu = ul_vector(x)
    if xu.size != ch.num_antennas:
        raise ValueError("assignment length does not match antenna count")
    xd = 1.0 - xu
    h_ul_eff = xu[:, None] * ch.h_ul
    h_dl_eff = xd[:, None] * ch.h_dl
    h_si_eff = xu[:, None] * ch.h_si * xd[None, :]
    return h_ul_eff, h_dl_eff, h_si_eff


# ----------------------------------------------------------------------
# UL side
# ----------------------------------------------------------------------


def _ul_unmasked_core(ch: ChannelRealization, xu: np.ndarray) -> np.ndarray:
    """Matrix A with ``q_i h~_i h~_i^H + Psi_i^u = X A X + sigma^2 X``.

    Collects the user, SI and receive-distortion terms on *unmasked* UL
    channels (the DL masking inside the SI pieces is applied; only the UL
    masking is factored out), enabling a symmetrically scaled MMSE solve
    that stays well conditioned as assignment entries approach zero.
    """
    xd = 1.0 - xu
    hsd = ch.h_si * xd[None, :]
    sigma_d = ch.w_dl @ ch.w_dl.conj().T
    hsd_sig = hsd @ sigma_d
    a = (1.0 + ch.kappa) * (ch.h_ul * ch.q_ul[None, :]) @ ch.h_ul.conj().T
    # SI term with the kappa diagonal folded in: hsd (sigma + k diag) hsd^H.
    a += (hsd_sig + ch.kappa * hsd * np.real(np.diag(sigma_d))[None, :]) @ hsd.conj().T
    a += ch.beta * np.diag(np.sum(np.abs(ch.h_ul) ** 2 * ch.q_ul[None, :], axis=1))
    a += ch.beta * np.diag(np.real(np.einsum("ij,ij->i", hsd_sig, hsd.conj())))
    return a


def _ul_cov_parts(ch: ChannelRealization, xu: np.ndarray):
    """Term-structured pieces of the UL interference covariance.

    Returns ``(h_ul_eff, s_full, common)`` where ``s_full`` is the summed
    user term ``sum_l q_l h~_l h~_l^H`` and ``common`` collects every term
    that does not depend on the user index: the kappa-scaled transmit
    distortion, both SI terms, the beta receive-distortion diagonals and the
    ``sigma^2 X^u`` noise.
    """
    xd = 1.0 - xu
    h_eff = xu[:, None] * ch.h_ul
    s_full = (h_eff * ch.q_ul[None, :]) @ h_eff.conj().T

    hsd = ch.h_si * xd[None, :]            # H_SI X^d
    h_si_eff = xu[:, None] * hsd           # X^u H_SI X^d
    sigma_d = ch.w_dl @ ch.w_dl.conj().T
    w_mat = sigma_d + ch.kappa * np.diag(np.diag(sigma_d))
    si_full = h_si_eff @ w_mat @ h_si_eff.conj().T
    si_rx_diag = np.diag(np.real(np.diag(h_si_eff @ sigma_d @ h_si_eff.conj().T)))
    ul_rx_diag = np.diag(np.sum(np.abs(h_eff) ** 2 * ch.q_ul[None, :], axis=1))

    common = (
        ch.kappa * s_full
        + si_full
        + ch.beta * ul_rx_diag
        + ch.beta * si_rx_diag
        + ch.noise_var_bs * np.diag(xu)
    )
    return h_eff, s_full, common


def interference_cov_ul(ch: ChannelRealization, x, i: int) -> np.ndarray:
    """Interference-plus-noise covariance Psi_i^u (M x M, Hermitian PSD)."""
    xu = ul_vector(x)
    if not 0 <= i < ch.num_ul:
        raise IndexError("UL user index out of range")
    h_eff, s_full, common = _ul_cov_parts(ch, xu)
    own = ch.q_ul[i] * np.outer(h_eff[:, i], h_eff[:, i].conj())
    psi = s_full - own + common
    return 0.5 * (psi + psi.conj().T)


def _ul_mmse_solve(ch: ChannelRealization, xu: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Filters from the scaled normal equations, restricted to x > ACTIVE_EPS."""
    m, num_i = ch.num_antennas, ch.num_ul
    r_ul = np.zeros((m, num_i), dtype=np.complex128)
    active = xu > ACTIVE_EPS
    if active.any() and num_i:
        u = np.sqrt(xu[active])
        b = core[np.ix_(active, active)] * np.outer(u, u)
        b[np.diag_indices_from(b)] += ch.noise_var_bs
        rhs = u[:, None] * ch.h_ul[active, :]
        y = np.linalg.solve(b, rhs)
        r_ul[active, :] = np.sqrt(ch.q_ul)[None, :] * y / u[:, None]
    return r_ul


# ----------------------------------------------------------------------
# DL side
# ----------------------------------------------------------------------


def _dl_parts(ch: ChannelRealization, xu: np.ndarray):
    """Per-beam scalars of the DL variance.

    ``s[m] = h~_m^H w_m`` (the beam-m signal scalar), ``p = |s|^2``,
    ``t[m] = h~_m^H diag(w_m w_m^H) h~_m`` and ``ue[j] = sum_i |g_ij|^2 q_i``.
    """
    xd = 1.0 - xu
    h_eff = xd[:, None] * ch.h_dl
    s = np.sum(h_eff.conj() * ch.w_dl, axis=0)
    p = np.abs(s) ** 2
    t = np.sum(np.abs(h_eff) ** 2 * np.abs(ch.w_dl) ** 2, axis=0)
    if ch.num_ul:
        ue = ch.q_ul @ (np.abs(ch.g_ue) ** 2)
    else:
        ue = np.zeros(ch.num_dl)
    return h_eff, s, p, t, ue


def _psi_dl_vector(ch: ChannelRealization, p, t, ue) -> np.ndarray:
    return (
        (p.sum() - p)
        + ch.kappa * t.sum()
        + (ch.kappa + ch.beta + 1.0) * ue
        + ch.beta * p.sum()
        + ch.noise_var_ue
    )


def interference_var_dl(ch: ChannelRealization, x, j: int) -> float:
    """Interference-plus-noise variance Psi_j^d (nonnegative scalar)."""
    xu = ul_vector(x)
    if not 0 <= j < ch.num_dl:
        raise IndexError("DL user index out of range")
    _, _, p, t, ue = _dl_parts(ch, xu)
    return float(_psi_dl_vector(ch, p, t, ue)[j])


# ----------------------------------------------------------------------
# Filters, per-user MSEs, spectral efficiency
# ----------------------------------------------------------------------


def mmse_filters(ch: ChannelRealization, x) -> ReceiveFilters:
    """MMSE receive filters at the given (relaxed or binary) assignment.

    The UL inverse is restricted to antennas with ``x > ACTIVE_EPS`` and
    embedded back with zero rows, so binary-off antennas yield exactly zero
    filter rows.  An all-zero UL assignment returns all-zero UL filters.
    """
    xu = ul_vector(x)
    r_ul = _ul_mmse_solve(ch, xu, _ul_unmasked_core(ch, xu))
    _, s, p, t, ue = _dl_parts(ch, xu)
    r_dl = s / (p + _psi_dl_vector(ch, p, t, ue))
    return ReceiveFilters(r_ul=r_ul, r_dl=r_dl)


def user_mse_ul(ch: ChannelRealization, x, filters: ReceiveFilters, i: int) -> float:
    """UL MSE for an arbitrary filter: |sqrt(q) r^H h~ - 1|^2 + r^H Psi r."""
    xu = ul_vector(x)
    h_eff = xu[:, None] * ch.h_ul
    r = filters.r_ul[:, i]
    signal = math.sqrt(ch.q_ul[i]) * np.vdot(r, h_eff[:, i])
    psi = interference_cov_ul(ch, xu, i)
    noise = float(np.real(np.vdot(r, psi @ r)))
    return float(abs(signal - 1.0) ** 2 + noise)


def user_mse_dl(ch: ChannelRealization, x, filters: ReceiveFilters, j: int) -> float:
    xu = ul_vector(x)
    _, s, _, _, _ = _dl_parts(ch, xu)
    r = filters.r_dl[j]
    psi = interference_var_dl(ch, xu, j)
    return float(abs(np.conj(r) * s[j] - 1.0) ** 2 + abs(r) ** 2 * psi)


def sum_mse_fixed_filters(ch: ChannelRealization, x, filters: ReceiveFilters) -> float:
    """Sum MSE over all users for a fixed (not necessarily MMSE) filter set."""
    total = sum(user_mse_ul(ch, x, filters, i) for i in range(ch.num_ul))
    total += sum(user_mse_dl(ch, x, filters, j) for j in range(ch.num_dl))
    return float(total)


def _se_from_mses(mse_ul: np.ndarray, mse_dl: np.ndarray) -> float:
    mses = np.concatenate([mse_ul, mse_dl])
    if np.any(mses <= 0.0) or np.any(mses > 1.0 + _MSE_SLACK):
        raise ValueError("spectral efficiency requires per-user MSEs in (0, 1]")
    return float(np.sum(np.log2(1.0 / np.minimum(mses, 1.0))))


def sum_spectral_efficiency(report: MseReport) -> float:
    """Sum rate surrogate: sum of log2(1 / MSE) over all users."""
    return _se_from_mses(np.asarray(report.mse_ul), np.asarray(report.mse_dl))


def mmse_filters_and_report(
    ch: ChannelRealization, x
) -> tuple[ReceiveFilters, MseReport]:
    """MMSE filters and their MSE report in one shared pass.

    Equivalent to ``mmse_filters`` followed by ``mse_report`` but computes
    the covariance core once; the solver's inner loop calls this every
    iteration.
    """
    xu = ul_vector(x)
    core = _ul_unmasked_core(ch, xu)
    r_ul = _ul_mmse_solve(ch, xu, core)
    h_eff = xu[:, None] * ch.h_ul
    # q_i h~ h~^H + Psi_i, identical for every UL user.
    g = xu[:, None] * core * xu[None, :]
    g[np.diag_indices_from(g)] += ch.noise_var_bs * xu

    mse_ul = np.empty(ch.num_ul)
    for i in range(ch.num_ul):
        r = r_ul[:, i]
        overlap = np.vdot(r, h_eff[:, i])
        signal = math.sqrt(ch.q_ul[i]) * overlap
        quad = float(np.real(np.vdot(r, g @ r))) - ch.q_ul[i] * abs(overlap) ** 2
        mse_ul[i] = abs(signal - 1.0) ** 2 + max(quad, 0.0)

    _, s, p, t, ue = _dl_parts(ch, xu)
    psi_dl = _psi_dl_vector(ch, p, t, ue)
    r_dl = s / (p + psi_dl)
    mse_dl = np.abs(r_dl.conj() * s - 1.0) ** 2 + np.abs(r_dl) ** 2 * psi_dl

    filters = ReceiveFilters(r_ul=r_ul, r_dl=r_dl)
    report = MseReport(
        mse_ul=mse_ul,
        mse_dl=mse_dl,
        sum_mse=float(mse_ul.sum() + mse_dl.sum()),
        sum_se=_se_from_mses(mse_ul, mse_dl),
    )
    return filters, report


def mse_report(
    ch: ChannelRealization, x, filters: ReceiveFilters | None = None
) -> MseReport:
    """Per-user MSEs, sum MSE and sum spectral efficiency.

    Filters default to the MMSE ones at ``x``; explicitly passed filters
    must keep every MSE in (0, 1] or the SE mapping raises.
    """
    xu = ul_vector(x)
    if filters is None:
        return mmse_filters_and_report(ch, xu)[1]

    h_eff, s_full, common = _ul_cov_parts(ch, xu)
    g = s_full + common
    mse_ul = np.empty(ch.num_ul)
    for i in range(ch.num_ul):
        r = filters.r_ul[:, i]
        overlap = np.vdot(r, h_eff[:, i])
        signal = math.sqrt(ch.q_ul[i]) * overlap
        quad = float(np.real(np.vdot(r, g @ r))) - ch.q_ul[i] * abs(overlap) ** 2
        mse_ul[i] = abs(signal - 1.0) ** 2 + max(quad, 0.0)

    _, s, p, t, ue = _dl_parts(ch, xu)
    psi_dl = _psi_dl_vector(ch, p, t, ue)
    mse_dl = np.abs(filters.r_dl.conj() * s - 1.0) ** 2 + np.abs(filters.r_dl) ** 2 * psi_dl

    sum_mse = float(mse_ul.sum() + mse_dl.sum())
    return MseReport(
        mse_ul=mse_ul,
        mse_dl=mse_dl,
        sum_mse=sum_mse,
        sum_se=_se_from_mses(mse_ul, mse_dl),
    )
