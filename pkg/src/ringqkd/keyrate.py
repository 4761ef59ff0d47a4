"""Finite-key secret-key lengths for sending-or-not-sending twin-field QKD.

The protocol model: every repetition-rate slot is a Z window with
probability p_z, otherwise a decoy X window.  In a Z window each party
sends a phase-randomised pulse of intensity mu_z with probability p_send
(their key bit) or nothing.  In an X window each party independently sends
one of the decoy intensities {0, mu1, mu2} with probabilities
{p0, p1, 1 - p0 - p1} and a uniformly random phase.  The measurement node
reports clicks; pairs where both sides sent mu1 with phases inside a slice
of half-width delta (around 0 or pi) estimate the phase-flip error.

Detection is a threshold-detector click model: a pulse ensemble with mean
detected photon number nu clicks with probability

    p_click = 1 - (1 - P_dc) exp(-nu).

The secret-key length of a block is

    SKL = n1 (1 - h(e1_ph)) - lambda_EC - 2 log2[(2/eps_cor) * (2/(sqrt(2) eps_PA eps_hat))]

with lambda_EC = f_EC * n_raw * h(E_Z), an analytic two-decoy lower bound
on the untagged single-photon bits n1, and a click-count upper bound on
e1_ph.  Statistical deviations use two-sided multiplicative Chernoff-style
bounds at the configured failure probabilities (eps_n1 for the yield
estimation chain, eps_bar for the phase-error counts); the bound family is
isolated in ``chernoff_lower`` / ``chernoff_upper`` so it can be swapped.

Channel efficiencies are TOTAL twin-field link efficiencies (sender to
sender through the measurement node); the symmetric default assigns each
arm sqrt(efficiency).  The asymmetric mode takes the two arm efficiencies
explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SnsParams",
    "SecurityEpsilons",
    "ChannelModel",
    "ExpectedStatistics",
    "SklBreakdown",
    "binary_entropy",
    "chernoff_lower",
    "chernoff_upper",
    "expected_statistics",
    "pooled_statistics",
    "monte_carlo_statistics",
    "estimate_untagged",
    "skl",
    "optimize_sns",
    "accumulate_link",
    "DEFAULT_PARAMS",
    "DEFAULT_GRID",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class SnsParams:
    """SNS protocol parameters (intensities, window probabilities, slice width)."""

    mu_z: float = 0.45
    mu1: float = 0.02
    mu2: float = 0.25
    p_send: float = 0.04
    p_z: float = 0.8
    p0: float = 0.5
    p1: float = 0.3
    delta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.mu1 < self.mu2:
            raise ValueError("decoy intensities require 0 < mu1 < mu2")
        if self.mu_z < 0:
            raise ValueError("mu_z must be >= 0")
        for name in ("p_send", "p_z", "p0", "p1"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.p0 + self.p1 >= 1.0:
            raise ValueError("p0 + p1 must leave room for the mu2 decoy")
        if not 0.0 < self.delta < math.pi:
            raise ValueError("delta must lie in (0, pi)")

    @property
    def p2(self) -> float:
        return 1.0 - self.p0 - self.p1


@dataclass(frozen=True)
class SecurityEpsilons:
    """Failure probabilities of the finite-key analysis (all 1e-10 baseline)."""

    eps_cor: float = 1e-10
    eps_pa: float = 1e-10
    eps_hat: float = 1e-10
    eps_bar: float = 1e-10
    eps_n1: float = 1e-10

    def __post_init__(self):
        for name in ("eps_cor", "eps_pa", "eps_hat", "eps_bar", "eps_n1"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def eps_sec(self) -> float:
        return self.eps_pa + self.eps_hat + self.eps_bar + self.eps_n1

    @property
    def eps_tol(self) -> float:
        return self.eps_cor + self.eps_sec


@dataclass(frozen=True)
class ChannelModel:
    """Detector/channel parameters plus the effective link efficiency.

    ``efficiency`` is the total twin-field link efficiency; set ``eta_a`` /
    ``eta_b`` instead for the asymmetric-arms mode (then ``efficiency`` is
    ignored).
    """

    efficiency: float = 1.0
    eta_a: float | None = None
    eta_b: float | None = None
    detector_efficiency: float = 0.5
    dark_count_prob: float = 1e-9
    optical_error: float = 0.05
    rep_rate_hz: float = 1e9
    error_correction_factor: float = 1.11

    def __post_init__(self):
        if (self.eta_a is None) != (self.eta_b is None):
            raise ValueError("set both arm efficiencies or neither")
        if self.eta_a is None and not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.eta_a is not None:
            for v in (self.eta_a, self.eta_b):
                if not 0.0 <= v <= 1.0:
                    raise ValueError("arm efficiencies must lie in [0, 1]")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in (0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark_count_prob must lie in [0, 1)")
        if not 0.0 <= self.optical_error <= 0.5:
            raise ValueError("optical_error must lie in [0, 0.5]")
        if self.rep_rate_hz <= 0 or self.error_correction_factor < 1.0:
            raise ValueError("bad repetition rate or error-correction factor")

    def arm_transmittances(self) -> tuple[float, float]:
        """Detected transmittance of each arm (channel x detector)."""
        if self.eta_a is not None:
            return (
                self.eta_a * self.detector_efficiency,
                self.eta_b * self.detector_efficiency,
            )
        arm = math.sqrt(self.efficiency)
        return arm * self.detector_efficiency, arm * self.detector_efficiency


@dataclass
class ExpectedStatistics:
    """Deterministic expected counts of one pooled block.

    ``x_pairs`` / ``x_clicks`` are 3x3 arrays indexed by (side-a intensity,
    side-b intensity) with 0 = vacuum, 1 = mu1, 2 = mu2.
    """

    params: SnsParams
    n_pulses: float
    dark_count_prob: float
    optical_error: float
    error_correction_factor: float
    n_z: float = 0.0
    z_clicks: float = 0.0
    z_errors: float = 0.0
    x_pairs: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    x_clicks: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    slice_pairs: float = 0.0
    slice_error_clicks: float = 0.0
    slice_correct_clicks: float = 0.0
    # filled by the tagged Monte-Carlo oracle only
    tagged_untagged_clicks: float | None = None


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy h(x) in bits; h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy argument outside [0, 1]: {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def chernoff_lower(expected: float, eps: float) -> float:
    """Lower bound compatible with failure probability ``eps``."""
    if expected <= 0.0:
        return 0.0
    return max(0.0, expected - math.sqrt(2.0 * expected * math.log(1.0 / eps)))


def chernoff_upper(expected: float, eps: float) -> float:
    """Upper bound compatible with failure probability ``eps``."""
    if expected < 0.0:
        raise ValueError("expected count must be >= 0")
    return expected + math.sqrt(2.0 * expected * math.log(1.0 / eps)) + math.log(1.0 / eps)


def _click(nu, pdc):
    return 1.0 - (1.0 - pdc) * np.exp(-nu)


def pooled_statistics(channel: ChannelModel, params: SnsParams, efficiencies, pulses) -> ExpectedStatistics:
    """Expected counts pooled over bins of (total efficiency, pulse count).

    In asymmetric-arms mode ``efficiencies`` must be an array of shape
    (n_bins, 2) holding the two arm efficiencies per bin.
    """
    eff = np.atleast_1d(np.asarray(efficiencies, dtype=float))
    w = np.atleast_1d(np.asarray(pulses, dtype=float))
    if eff.ndim == 2:
        # asymmetric mode: columns are the two arm efficiencies
        ta = eff[:, 0] * channel.detector_efficiency
        tb = eff[:, 1] * channel.detector_efficiency
    else:
        arm = np.sqrt(eff)
        ta = arm * channel.detector_efficiency
        tb = ta
    if ta.shape != w.shape:
        raise ValueError("efficiencies and pulse counts must align")
    p = params
    pdc = channel.dark_count_prob
    eopt = channel.optical_error
    nz = w * p.p_z
    nx = w * (1.0 - p.p_z)

    stats = ExpectedStatistics(
        params=p,
        n_pulses=float(np.sum(w)),
        dark_count_prob=pdc,
        optical_error=eopt,
        error_correction_factor=channel.error_correction_factor,
    )

    # Z windows: send/not-send patterns
    ps = p.p_send
    c_a = _click(p.mu_z * ta, pdc)
    c_b = _click(p.mu_z * tb, pdc)
    c_ab = _click(p.mu_z * (ta + tb), pdc)
    singles = ps * (1.0 - ps) * (c_a + c_b)
    stats.n_z = float(np.sum(nz))
    stats.z_clicks = float(np.sum(nz * (singles + ps**2 * c_ab + (1.0 - ps) ** 2 * pdc)))
    stats.z_errors = float(
        np.sum(nz * (ps**2 * c_ab + (1.0 - ps) ** 2 * pdc + eopt * singles))
    )

    # X windows: all ordered decoy intensity pairs
    mus = np.array([0.0, p.mu1, p.mu2])
    probs = np.array([p.p0, p.p1, p.p2])
    for u in range(3):
        for v in range(3):
            pairs = nx * probs[u] * probs[v]
            clicks = pairs * _click(mus[u] * ta + mus[v] * tb, pdc)
            stats.x_pairs[u, v] = float(np.sum(pairs))
            stats.x_clicks[u, v] = float(np.sum(clicks))

    # phase-slice subsample of the (mu1, mu1) pairs
    f_slice = min(1.0, 2.0 * p.delta / math.pi)
    sl_pairs = nx * probs[1] * probs[1] * f_slice
    colsum = ta + tb
    vis = np.where(colsum > 0, 2.0 * np.sqrt(ta * tb) / np.where(colsum > 0, colsum, 1.0), 0.0)
    s_tot = p.mu1 * colsum
    dl = p.delta * _GL_NODES  # Gauss-Legendre nodes over [-delta, delta]
    cosd = np.cos(dl)[None, :]
    base = 0.5 * s_tot[:, None]
    mod = (vis * (1.0 - 2.0 * eopt))[:, None] * cosd
    err_click = _click(base * (1.0 - mod), pdc)
    cor_click = _click(base * (1.0 + mod), pdc)
    wmean = _GL_WEIGHTS[None, :] / 2.0
    stats.slice_pairs = float(np.sum(sl_pairs))
    stats.slice_error_clicks = float(np.sum(sl_pairs * np.sum(err_click * wmean, axis=1)))
    stats.slice_correct_clicks = float(np.sum(sl_pairs * np.sum(cor_click * wmean, axis=1)))
    return stats


def expected_statistics(channel: ChannelModel, params: SnsParams, n_pulses: float) -> ExpectedStatistics:
    """Expected counts of a single block at the channel's own efficiency."""
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    if channel.eta_a is not None:
        eff = np.array([[channel.eta_a, channel.eta_b]])
    else:
        eff = np.array([channel.efficiency])
    return pooled_statistics(channel, params, eff, np.array([float(n_pulses)]))


def monte_carlo_statistics(
    channel: ChannelModel,
    params: SnsParams,
    n_samples: int,
    seed: int = 0,
    tagged: bool = False,
    chunk: int = 1_000_000,
) -> ExpectedStatistics:
    """Sampled counts from a photon-level click simulation (test oracle).

    Draws photon numbers per pulse, thins them through the arm
    transmittances, and adds dark counts, instead of evaluating the closed
    forms.  With ``tagged=True`` the count of Z-window clicks caused by a
    single emitted photon with exactly one sender is recorded.
    """
    rng = np.random.default_rng(seed)
    ta, tb = channel.arm_transmittances()
    p = params
    pdc = channel.dark_count_prob
    eopt = channel.optical_error
    stats = ExpectedStatistics(
        params=p,
        n_pulses=float(n_samples),
        dark_count_prob=pdc,
        optical_error=eopt,
        error_correction_factor=channel.error_correction_factor,
    )
    mus = np.array([0.0, p.mu1, p.mu2])
    probs = np.array([p.p0, p.p1, p.p2])
    tagged_clicks = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        done += m
        is_z = rng.random(m) < p.p_z
        nz = int(np.sum(is_z))
        nx = m - nz
        stats.n_z += nz

        # --- Z windows
        send_a = rng.random(nz) < p.p_send
        send_b = rng.random(nz) < p.p_send
        ph_a = rng.poisson(p.mu_z * send_a)
        ph_b = rng.poisson(p.mu_z * send_b)
        arr_a = rng.binomial(ph_a, ta)
        arr_b = rng.binomial(ph_b, tb)
        dark = rng.random(nz) < pdc
        click = (arr_a + arr_b > 0) | dark
        stats.z_clicks += float(np.sum(click))
        one_send = send_a ^ send_b
        flip = rng.random(nz) < eopt
        err = click & ((send_a & send_b) | (~send_a & ~send_b) | (one_send & flip))
        stats.z_errors += float(np.sum(err))
        if tagged:
            tagged_clicks += float(np.sum(click & one_send & (ph_a + ph_b == 1)))

        # --- X windows
        ia = rng.choice(3, size=nx, p=probs)
        ib = rng.choice(3, size=nx, p=probs)
        ph_a = rng.poisson(mus[ia])
        ph_b = rng.poisson(mus[ib])
        arr_a = rng.binomial(ph_a, ta)
        arr_b = rng.binomial(ph_b, tb)
        dark = rng.random(nx) < pdc
        click = (arr_a + arr_b > 0) | dark
        np.add.at(stats.x_pairs, (ia, ib), 1.0)
        np.add.at(stats.x_clicks, (ia, ib), click.astype(float))

        # --- phase slice: re-draw the (mu1, mu1) pairs at the port level
        both1 = (ia == 1) & (ib == 1)
        n11 = int(np.sum(both1))
        dphi = rng.uniform(-math.pi, math.pi, size=n11)
        folded = np.minimum(np.abs(dphi), math.pi - np.abs(dphi))
        in_slice = folded <= p.delta
        nsl = int(np.sum(in_slice))
        stats.slice_pairs += nsl
        if nsl:
            d = dphi[in_slice]
            anti = np.abs(d) > math.pi / 2.0  # pi-aligned slice: ports swap
            cosd = np.cos(np.where(anti, math.pi - np.abs(d), np.abs(d)))
            s_tot = p.mu1 * (ta + tb)
            vis = 2.0 * math.sqrt(ta * tb) / (ta + tb) if ta + tb > 0 else 0.0
            ierr = 0.5 * s_tot * (1.0 - vis * (1.0 - 2.0 * eopt) * cosd)
            icor = 0.5 * s_tot * (1.0 + vis * (1.0 - 2.0 * eopt) * cosd)
            err_click = (rng.poisson(ierr) > 0) | (rng.random(nsl) < pdc)
            cor_click = (rng.poisson(icor) > 0) | (rng.random(nsl) < pdc)
            stats.slice_error_clicks += float(np.sum(err_click))
            stats.slice_correct_clicks += float(np.sum(cor_click))
    if tagged:
        stats.tagged_untagged_clicks = tagged_clicks
    return stats


def _decoy_y1_side(stats: ExpectedStatistics, side: str, eps_n1: float, asymptotic: bool) -> float:
    """Two-decoy lower bound on the single-photon yield of one arm."""
    p = stats.params
    if side == "a":
        pairs = (stats.x_pairs[1, 0], stats.x_pairs[2, 0])
        clicks = (stats.x_clicks[1, 0], stats.x_clicks[2, 0])
    else:
        pairs = (stats.x_pairs[0, 1], stats.x_pairs[0, 2])
        clicks = (stats.x_clicks[0, 1], stats.x_clicks[0, 2])
    pairs0, clicks0 = stats.x_pairs[0, 0], stats.x_clicks[0, 0]
    if min(pairs0, pairs[0], pairs[1]) <= 0:
        raise ValueError("decoy estimation needs vacuum and both decoy ensembles")
    if min(clicks0, clicks[0], clicks[1]) < 0:
        raise ValueError("non-physical statistics: negative click counts")
    if asymptotic:
        s1 = clicks[0] / pairs[0]
        s2 = clicks[1] / pairs[1]
        s0 = clicks0 / pairs0
        s0_low = s0
    else:
        s1 = chernoff_lower(clicks[0], eps_n1) / pairs[0]
        s2 = min(1.0, chernoff_upper(clicks[1], eps_n1) / pairs[1])
        s0 = min(1.0, chernoff_upper(clicks0, eps_n1) / pairs0)
        s0_low = chernoff_lower(clicks0, eps_n1) / pairs0
    mu1, mu2 = p.mu1, p.mu2
    num = mu2**2 * (s1 * math.exp(mu1) - s0) - mu1**2 * (s2 * math.exp(mu2) - s0_low)
    y1 = num / (mu1 * mu2 * (mu2 - mu1))
    return min(1.0, max(0.0, y1))


def estimate_untagged(
    stats: ExpectedStatistics,
    eps: SecurityEpsilons,
    asymptotic: bool = False,
) -> tuple[float, dict]:
    """Lower bound on the untagged single-photon Z bits of the block."""
    p = stats.params
    y1a = _decoy_y1_side(stats, "a", eps.eps_n1, asymptotic)
    y1b = _decoy_y1_side(stats, "b", eps.eps_n1, asymptotic)
    # single-send single-photon emission rate in Z windows per side
    base = stats.n_z * p.p_send * (1.0 - p.p_send) * p.mu_z * math.exp(-p.mu_z)
    n1 = base * (y1a + y1b)
    if not asymptotic:
        n1 = chernoff_lower(n1, eps.eps_n1)
    return max(0.0, n1), {"y1_a": y1a, "y1_b": y1b}


def _phase_error_upper(
    stats: ExpectedStatistics,
    eps: SecurityEpsilons,
    y1_mean: float,
    asymptotic: bool,
) -> float:
    """Upper bound on the phase-flip error of untagged bits from slice counts."""
    p = stats.params
    if stats.slice_pairs <= 0:
        return 0.5
    vac_err = stats.slice_pairs * math.exp(-2.0 * p.mu1) * stats.dark_count_prob
    if asymptotic:
        num = stats.slice_error_clicks - vac_err
    else:
        num = chernoff_upper(stats.slice_error_clicks, eps.eps_bar) - chernoff_lower(
            vac_err, eps.eps_bar
        )
    singles = stats.slice_pairs * 2.0 * p.mu1 * math.exp(-2.0 * p.mu1) * y1_mean
    if singles <= 0.0:
        return 0.5
    return min(0.5, max(0.0, num / singles))


def correction_term(eps: SecurityEpsilons, mode: str = "literal") -> float:
    """Epsilon-dependent subtraction of the key-length formula, in bits (>= 0).

    ``literal`` evaluates 2 log2[(2/eps_cor) (2/(sqrt2 eps_PA eps_hat))];
    ``split`` uses log2(2/eps_cor) + 2 log2(1/(sqrt2 eps_PA eps_hat)).
    The two differ by fewer than 70 bits for the baseline epsilons.
    """
    if mode == "literal":
        return 2.0 * math.log2(
            (2.0 / eps.eps_cor) * (2.0 / (math.sqrt(2.0) * eps.eps_pa * eps.eps_hat))
        )
    if mode == "split":
        return math.log2(2.0 / eps.eps_cor) + 2.0 * math.log2(
            1.0 / (math.sqrt(2.0) * eps.eps_pa * eps.eps_hat)
        )
    raise ValueError(f"unknown correction mode: {mode}")


@dataclass(frozen=True)
class SklBreakdown:
    """Finite-key output ledger of one block."""

    n_pulses: float
    n_raw: float
    qber_z: float
    n1_lower: float
    e1ph_upper: float
    lambda_ec: float
    skl_bits: float

    @staticmethod
    def zero() -> "SklBreakdown":
        return SklBreakdown(0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0)


def skl(
    stats: ExpectedStatistics,
    eps: SecurityEpsilons,
    asymptotic: bool = False,
    correction_mode: str = "literal",
) -> SklBreakdown:
    """Secret-key length of a block from its (expected or sampled) counts."""
    n_raw = stats.z_clicks
    if n_raw <= 0.0:
        return SklBreakdown(stats.n_pulses, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0)
    qber = min(1.0, stats.z_errors / n_raw)
    n1, info = estimate_untagged(stats, eps, asymptotic)
    e1 = _phase_error_upper(
        stats, eps, 0.5 * (info["y1_a"] + info["y1_b"]), asymptotic
    )
    lam_ec = stats.error_correction_factor * n_raw * binary_entropy(qber)
    bits = n1 * (1.0 - binary_entropy(e1)) - lam_ec - correction_term(eps, correction_mode)
    return SklBreakdown(
        n_pulses=stats.n_pulses,
        n_raw=n_raw,
        qber_z=qber,
        n1_lower=n1,
        e1ph_upper=e1,
        lambda_ec=lam_ec,
        skl_bits=max(0.0, bits),
    )


DEFAULT_PARAMS = SnsParams()

# Documented optimiser floor: the returned SKL is never below the best of
# these protocol settings.
DEFAULT_GRID = tuple(
    SnsParams(mu_z=mu_z, mu1=mu2 / 10.0, mu2=mu2, p_send=ps, p_z=pz, p0=0.5, p1=0.3, delta=d)
    for mu_z in (0.2, 0.45)
    for mu2 in (0.1, 0.3)
    for ps in (0.02, 0.06, 0.18)
    for pz in (0.6, 0.9)
    for d in (0.3, 1.0)
)

_BOUNDS = {
    "mu_z": (1e-4, 2.0),
    "mu2": (1e-3, 1.5),
    "ratio1": (0.02, 0.9),
    "p_send": (1e-4, 0.5),
    "p_z": (0.05, 0.995),
    "p0": (0.01, 0.97),
    "p1": (0.01, 0.97),
    "delta": (0.01, 1.5),
}
_COORDS = tuple(_BOUNDS)


def _params_to_vector(p: SnsParams) -> dict:
    return {
        "mu_z": p.mu_z,
        "mu2": p.mu2,
        "ratio1": p.mu1 / p.mu2,
        "p_send": p.p_send,
        "p_z": p.p_z,
        "p0": p.p0,
        "p1": p.p1,
        "delta": p.delta,
    }


def _vector_to_params(v: dict) -> SnsParams | None:
    if v["p0"] + v["p1"] >= 0.98:
        return None
    try:
        return SnsParams(
            mu_z=v["mu_z"],
            mu1=v["ratio1"] * v["mu2"],
            mu2=v["mu2"],
            p_send=v["p_send"],
            p_z=v["p_z"],
            p0=v["p0"],
            p1=v["p1"],
            delta=v["delta"],
        )
    except ValueError:
        return None


def _coordinate_search(objective, start: SnsParams, max_evals: int):
    """Deterministic multiplicative coordinate descent inside the box."""
    best_p = start
    best_v = objective(start)
    evals = 1
    step = 1.6
    while evals < max_evals and step > 1.005:
        improved = False
        vec = _params_to_vector(best_p)
        for name in _COORDS:
            for factor in (step, 1.0 / step):
                if evals >= max_evals:
                    break
                cand = dict(vec)
                lo, hi = _BOUNDS[name]
                cand[name] = min(hi, max(lo, cand[name] * factor))
                params = _vector_to_params(cand)
                if params is None:
                    continue
                val = objective(params)
                evals += 1
                if val > best_v:
                    best_v, best_p = val, params
                    vec = _params_to_vector(best_p)
                    improved = True
        if not improved:
            step = 1.0 + (step - 1.0) * 0.5
    return best_p, best_v


def _pooled_objective(channel, eps, efficiencies, pulses, correction_mode):
    def objective(params: SnsParams) -> float:
        stats = pooled_statistics(channel, params, efficiencies, pulses)
        return skl(stats, eps, correction_mode=correction_mode).skl_bits

    return objective


def optimize_sns(
    channel: ChannelModel,
    duration_s: float,
    eps: SecurityEpsilons,
    n_starts: int = 3,
    max_evals: int = 400,
    extra_seeds: tuple[SnsParams, ...] = (),
    correction_mode: str = "literal",
) -> tuple[SnsParams, SklBreakdown]:
    """Optimise the SNS parameters for one link and block duration.

    Guaranteed floor: the returned SKL is >= the SKL of every point of
    ``DEFAULT_GRID`` (the grid is always evaluated).  Refinement is a
    multi-start multiplicative coordinate search; everything is
    deterministic for fixed inputs.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    n_pulses = channel.rep_rate_hz * duration_s
    if channel.eta_a is not None:
        eff = np.array([[channel.eta_a, channel.eta_b]])
    else:
        eff = np.array([channel.efficiency])
    return _optimize_pooled(
        channel, eps, eff, np.array([n_pulses]), n_starts, max_evals, extra_seeds, correction_mode
    )


def _optimize_pooled(
    channel,
    eps,
    efficiencies,
    pulses,
    n_starts=3,
    max_evals=400,
    extra_seeds=(),
    correction_mode="literal",
):
    objective = _pooled_objective(channel, eps, efficiencies, pulses, correction_mode)
    scored = [(objective(p), i, p) for i, p in enumerate(DEFAULT_GRID)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    best_v, _, best_p = scored[0]

    seeds: list[SnsParams] = [best_p]
    for p in extra_seeds:
        seeds.append(p)
    seeds.append(DEFAULT_PARAMS)
    if len(scored) > 1:
        seeds.append(scored[1][2])
    seeds = seeds[: max(n_starts, 1 + len(extra_seeds))]

    for seed in seeds:
        p, v = _coordinate_search(objective, seed, max_evals)
        if v > best_v:
            best_v, best_p = v, p
    stats = pooled_statistics(channel, best_p, efficiencies, pulses)
    return best_p, skl(stats, eps, correction_mode=correction_mode)


def accumulate_link(
    profile_bins,
    channel: ChannelModel,
    eps: SecurityEpsilons,
    n_starts: int = 3,
    max_evals: int = 400,
    extra_seeds: tuple[SnsParams, ...] = (),
    correction_mode: str = "literal",
) -> tuple[SnsParams | None, SklBreakdown]:
    """Pool all sessions of one link into a single finite-key block.

    ``profile_bins`` is a sequence of (effective efficiency, pulse count)
    pairs; in asymmetric mode the first element is an (eta_a, eta_b) pair.
    An empty profile yields a zero block.
    """
    bins = list(profile_bins)
    if not bins:
        return None, SklBreakdown.zero()
    first = bins[0][0]
    if isinstance(first, tuple):
        eff = np.array([[b[0][0], b[0][1]] for b in bins])
    else:
        eff = np.array([b[0] for b in bins])
    pulses = np.array([float(b[1]) for b in bins])
    if np.any(pulses < 0):
        raise ValueError("pulse counts must be >= 0")
    return _optimize_pooled(
        channel, eps, eff, pulses, n_starts, max_evals, extra_seeds, correction_mode
    )
