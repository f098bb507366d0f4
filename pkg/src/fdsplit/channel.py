"""Scenario generation: geometry, link gains, fading, powers, beamformers.

Every draw is a pure function of ``(cfg, rng)``; callers derive independent
substreams with :func:`substream` so Monte Carlo realizations can run in any
order (or in parallel) with identical results.

Large-scale model (pico BS, distances in km, one frozen spot check in the
test suite against the published table):

====== ==============================  ===================
branch path loss [dB]                  shadowing std [dB]
====== ==============================  ===================
LOS    103.8 + 20.9 log10(d)           3
NLOS   145.4 + 37.5 log10(d)           4
====== ==============================  ===================

LOS probability: ``0.5 - min(0.5, 5 exp(-0.156/d)) + min(0.5, 5 exp(-d/0.03))``.

The same family is reused for the UE-to-UE interference links (no height
correction).  Small-scale fading is unit-variance circular complex Gaussian,
composed as ``sqrt(linear gain) * fading``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

# Path-loss constants (pico cell, d in km).
_PLOS_INTERCEPT = 103.8
_PLOS_SLOPE = 20.9
_PNLOS_INTERCEPT = 145.4
_PNLOS_SLOPE = 37.5
SHADOWING_STD_LOS_DB = 3.0
SHADOWING_STD_NLOS_DB = 4.0

#: Users are never placed closer to the BS than this (avoids the path-loss
#: singularity at d -> 0); the same floor is applied to UE-UE separations.
MIN_DISTANCE_M = 3.0


@dataclass(eq=False)
class ChannelRealization:
    """One Monte Carlo draw of every random quantity the optimizer consumes.

    Shapes: ``h_ul (M, I)``, ``h_dl (M, J)``, ``h_si (M, M)``,
    ``g_ue (I, J)``, ``q_ul (I,)`` in W, ``w_dl (M, J)``.  The transceiver
    distortion factors ride along so the MSE layer needs no config handle.
    """

    h_ul: np.ndarray
    h_dl: np.ndarray
    h_si: np.ndarray
    g_ue: np.ndarray
    q_ul: np.ndarray
    w_dl: np.ndarray
    noise_var_bs: float
    noise_var_ue: float
    kappa: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        m = self.h_si.shape[0]
        i = self.h_ul.shape[1]
        j = self.h_dl.shape[1]
        if self.h_ul.shape != (m, i) or self.h_dl.shape != (m, j):
            raise ValueError("inconsistent channel matrix shapes")
        if self.h_si.shape != (m, m) or self.w_dl.shape != (m, j):
            raise ValueError("inconsistent SI / beamformer shapes")
        if self.g_ue.shape != (i, j) or self.q_ul.shape != (i,):
            raise ValueError("inconsistent UE-UE / power shapes")
        for arr in (self.h_ul, self.h_dl, self.h_si, self.g_ue, self.w_dl):
            if not np.all(np.isfinite(arr.view(np.float64))):
                raise ValueError("non-finite channel entries")

    @property
    def num_antennas(self) -> int:
        return self.h_si.shape[0]

    @property
    def num_ul(self) -> int:
        return self.h_ul.shape[1]

    @property
    def num_dl(self) -> int:
        return self.h_dl.shape[1]

    def digest(self) -> str:
        """Stable hash of the realization; used to assert paired designs."""
        import hashlib

        h = hashlib.sha256()
        for arr in (self.h_ul, self.h_dl, self.h_si, self.g_ue, self.q_ul, self.w_dl):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based RNG split: independent stream for (seed, *key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *key])))


def complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """i.i.d. circular complex Gaussian entries, zero mean, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def los_probability(distance_m: float) -> float:
    d_km = distance_m / 1000.0
    if d_km <= 0:
        raise ValueError("distance must be > 0")
    return (
        0.5
        - min(0.5, 5.0 * math.exp(-0.156 / d_km))
        + min(0.5, 5.0 * math.exp(-d_km / 0.03))
    )


def path_loss_db(distance_m: float, los: bool) -> float:
    """Median path loss of the LOS/NLOS branch at the given distance."""
    if distance_m <= 0:
        raise ValueError("distance must be > 0")
    d_km = distance_m / 1000.0
    if los:
        return _PLOS_INTERCEPT + _PLOS_SLOPE * math.log10(d_km)
    return _PNLOS_INTERCEPT + _PNLOS_SLOPE * math.log10(d_km)


def link_gain(
    distance_m: float,
    rng: np.random.Generator | None,
    *,
    shadowing: bool = True,
    los: bool | None = None,
) -> float:
    """Draw one linear power gain: LOS branch, path loss, lognormal shadowing.

    ``los=None`` draws the branch from the LOS-probability curve; passing a
    bool pins it (test hook).  ``shadowing=False`` drops the lognormal term.
    """
    if distance_m <= 0:
        raise ValueError("distance must be > 0")
    if los is None or shadowing:
        if rng is None:
            raise ValueError("rng required when drawing LOS branch or shadowing")
    if los is None:
        los = rng.random() < los_probability(distance_m)
    pl = path_loss_db(distance_m, los)
    if shadowing:
        std = SHADOWING_STD_LOS_DB if los else SHADOWING_STD_NLOS_DB
        pl += std * rng.standard_normal()
    return 10.0 ** (-pl / 10.0)


def draw_positions(
    cfg: SystemConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Place I UL and J DL users uniformly in the cell disc (BS at origin).

    Radii below :data:`MIN_DISTANCE_M` are clamped to it.
    Returns ``(ul_xy, dl_xy)`` with shapes ``(I, 2)`` and ``(J, 2)``.
    """
    n = cfg.num_ul + cfg.num_dl
    radii = cfg.cell_radius * np.sqrt(rng.random(n))
    radii = np.maximum(radii, MIN_DISTANCE_M)
    angles = 2.0 * np.pi * rng.random(n)
    xy = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    return xy[: cfg.num_ul], xy[cfg.num_ul :]


def draw_si_channel(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Rician self-interference channel: every entry i.i.d. around the mean.

    Entry mean sqrt(sigma_SI^2 K_r / (1 + K_r)), variance
    sigma_SI^2 / (1 + K_r).  ``K_r = inf`` degenerates to the deterministic
    all-entries-equal matrix of magnitude sqrt(sigma_SI^2).
    """
    m = cfg.num_antennas
    sigma2 = cfg.si_cancellation
    k = cfg.rician_k
    if math.isinf(k):
        mean = math.sqrt(sigma2)
        return np.full((m, m), mean, dtype=np.complex128)
    mean = math.sqrt(sigma2 * k / (1.0 + k))
    std = math.sqrt(sigma2 / (1.0 + k))
    return mean + std * complex_normal(rng, (m, m))


def draw_beamformers(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Random Gaussian beamformers scaled to sum power P_d_max (linear)."""
    w = complex_normal(rng, (cfg.num_antennas, cfg.num_dl))
    total = float(np.sum(np.abs(w) ** 2))
    return w * math.sqrt(cfg.p_dl_max_watt / total)


def draw_channels(
    cfg: SystemConfig,
    positions: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator,
    *,
    small_scale: bool = True,
    shadowing: bool = True,
) -> ChannelRealization:
    """Draw one full realization for the given user geometry.

    ``small_scale=False`` pins the fading factor to 1 so a channel entry's
    magnitude equals sqrt(link gain) exactly (deterministic-limit tests).
    """
    ul_xy, dl_xy = positions
    m, num_i, num_j = cfg.num_antennas, cfg.num_ul, cfg.num_dl
    if ul_xy.shape != (num_i, 2) or dl_xy.shape != (num_j, 2):
        raise ValueError("positions inconsistent with config")

    def fade(shape: tuple[int, ...]) -> np.ndarray:
        if small_scale:
            return complex_normal(rng, shape)
        return np.ones(shape, dtype=np.complex128)

    h_ul = np.empty((m, num_i), dtype=np.complex128)
    for i in range(num_i):
        gain = link_gain(float(np.hypot(*ul_xy[i])), rng, shadowing=shadowing)
        h_ul[:, i] = math.sqrt(gain) * fade((m,))

    h_dl = np.empty((m, num_j), dtype=np.complex128)
    for j in range(num_j):
        gain = link_gain(float(np.hypot(*dl_xy[j])), rng, shadowing=shadowing)
        h_dl[:, j] = math.sqrt(gain) * fade((m,))

    g_ue = np.empty((num_i, num_j), dtype=np.complex128)
    for i in range(num_i):
        for j in range(num_j):
            dist = max(float(np.hypot(*(ul_xy[i] - dl_xy[j]))), MIN_DISTANCE_M)
            gain = link_gain(dist, rng, shadowing=shadowing)
            g_ue[i, j] = math.sqrt(gain) * fade(())

    h_si = draw_si_channel(cfg, rng)
    q_ul = np.full(num_i, cfg.p_ul_max_watt)
    w_dl = draw_beamformers(cfg, rng)

    return ChannelRealization(
        h_ul=h_ul,
        h_dl=h_dl,
        h_si=h_si,
        g_ue=g_ue,
        q_ul=q_ul,
        w_dl=w_dl,
        noise_var_bs=cfg.noise_var_bs_watt,
        noise_var_ue=cfg.noise_var_ue_watt,
        kappa=cfg.tx_distortion,
        beta=cfg.rx_distortion,
    )


def draw_realization(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Geometry plus channels in one call (the harness entry point)."""
    return draw_channels(cfg, draw_positions(cfg, rng), rng)


def synthetic_realization(
    rng: np.random.Generator,
    m: int,
    num_ul: int,
    num_dl: int,
    *,
    si_power: float = 1e-2,
    noise_bs: float = 1e-3,
    noise_ue: float = 1e-3,
    kappa: float = 1e-12,
    beta: float = 1e-12,
    q_ul: float = 1.0,
    p_dl: float = 1.0,
    rician_k: float = 1.0,
) -> ChannelRealization:
    """O(1)-scale random instance without geometry; numerics/selftest aid."""
    w = complex_normal(rng, (m, num_dl))
    if num_dl:
        w *= math.sqrt(p_dl / float(np.sum(np.abs(w) ** 2)))
    mean = math.sqrt(si_power * rician_k / (1.0 + rician_k))
    std = math.sqrt(si_power / (1.0 + rician_k))
    return ChannelRealization(
        h_ul=complex_normal(rng, (m, num_ul)),
        h_dl=complex_normal(rng, (m, num_dl)),
        h_si=mean + std * complex_normal(rng, (m, m)),
        g_ue=complex_normal(rng, (num_ul, num_dl)),
        q_ul=np.full(num_ul, q_ul),
        w_dl=w,
        noise_var_bs=noise_bs,
        noise_var_ue=noise_ue,
        kappa=kappa,
        beta=beta,
    )
