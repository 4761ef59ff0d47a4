"""Ring-constellation geometry: propagation, line of sight, visibility sessions.

Two constellation layouts are supported.  Type-1 places one satellite in each
of N_s equally spaced polar planes, all sharing a common argument of latitude,
so the satellites form a ring that contracts near the poles and widens at the
equator.  Type-2 spreads N_s satellites uniformly around a single equatorial
orbit.  Orbits are circular two-body; ground stations rotate with the Earth at
the sidereal rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    ATM_SHELL_KM,
    EARTH_RADIUS_KM,
    EARTH_ROTATION_RAD_S,
    GM_EARTH_KM3_S2,
)


class ConstellationKind(enum.Enum):
    TYPE1_POLAR = "type1"
    TYPE2_EQUATORIAL = "type2"


@dataclass(frozen=True)
class ConstellationSpec:
    """Ring constellation definition.

    ``phase0_deg`` is the shared argument of latitude at the epoch for Type-1
    rings, or the phase of satellite 0 for Type-2 rings.  Satellite indices
    are cyclic (index N_s is index 0 again).
    """

    kind: ConstellationKind
    num_sats: int
    altitude_km: float
    epoch_s: float = 0.0
    atm_shell_km: float = ATM_SHELL_KM
    phase0_deg: float = 0.0

    def __post_init__(self):
        if self.num_sats < 3:
            raise ValueError(f"num_sats must be >= 3, got {self.num_sats}")
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be > 0, got {self.altitude_km}")
        if self.atm_shell_km < 0:
            raise ValueError("atm_shell_km must be >= 0")
        if self.altitude_km <= self.atm_shell_km:
            raise ValueError("orbit must lie above the atmospheric shell")

    @property
    def orbit_radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(GM_EARTH_KM3_S2 / self.orbit_radius_km**3)


@dataclass(frozen=True)
class SatellitePosition:
    sat_index: int
    position_km: np.ndarray  # ECI frame, shape (3,)
    time_s: float


@dataclass(frozen=True)
class GroundStation:
    id: int
    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg < 360.0:
            raise ValueError(f"longitude out of range: {self.longitude_deg}")


@dataclass(frozen=True)
class VisibilitySession:
    """Maximal interval with a fixed serving satellite inside the zenith mask."""

    gs_id: int
    t_start_s: float
    t_end_s: float
    serving_sat: int
    min_zenith_deg: float

    @property
    def duration_s(self) -> float:
        return self.t_end_s - self.t_start_s


def positions_eci_km(spec: ConstellationSpec, times_s) -> np.ndarray:
    """ECI positions of all satellites, shape (len(times), num_sats, 3)."""
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    if np.any(t < spec.epoch_s):
        raise ValueError("time precedes the constellation epoch")
    r = spec.orbit_radius_km
    n = spec.num_sats
    w = spec.mean_motion_rad_s
    base = np.radians(spec.phase0_deg) + w * (t - spec.epoch_s)  # (T,)
    idx = 2.0 * np.pi * np.arange(n) / n  # (N,)
    out = np.empty((t.size, n, 3))
    if spec.kind is ConstellationKind.TYPE1_POLAR:
        # Plane i has right ascension idx[i]; all satellites share u(t).
        u = base[:, None]
        cu, su = np.cos(u), np.sin(u)
        co, so = np.cos(idx)[None, :], np.sin(idx)[None, :]
        out[:, :, 0] = r * cu * co
        out[:, :, 1] = r * cu * so
        out[:, :, 2] = r * su + np.zeros_like(co)
    else:
        phase = base[:, None] + idx[None, :]
        out[:, :, 0] = r * np.cos(phase)
        out[:, :, 1] = r * np.sin(phase)
        out[:, :, 2] = 0.0
    return out


def propagate(spec: ConstellationSpec, t: float) -> list[SatellitePosition]:
    """Positions of all satellites at time ``t`` (seconds, >= epoch)."""
    arr = positions_eci_km(spec, [t])[0]
    return [SatellitePosition(i, arr[i].copy(), float(t)) for i in range(spec.num_sats)]


def gs_position_km(gs: GroundStation, times_s) -> np.ndarray:
    """ECI position of a ground station, shape (len(times), 3).

    The Greenwich meridian is aligned with the ECI x-axis at t = 0 and the
    station rotates at the sidereal rate.
    """
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    lat = math.radians(gs.latitude_deg)
    lon = np.radians(gs.longitude_deg) + EARTH_ROTATION_RAD_S * t
    out = np.empty((t.size, 3))
    out[:, 0] = EARTH_RADIUS_KM * math.cos(lat) * np.cos(lon)
    out[:, 1] = EARTH_RADIUS_KM * math.cos(lat) * np.sin(lon)
    out[:, 2] = EARTH_RADIUS_KM * math.sin(lat)
    return out


def intersat_clearance(a: SatellitePosition, b: SatellitePosition) -> float:
    """Minimum distance [km] from the Earth's centre to the segment a-b.

    If the perpendicular foot of the centre lies between the endpoints this
    is ||r_a x r_b|| / ||r_a - r_b||; otherwise the nearest endpoint radius.
    Line of sight between the satellites holds iff the returned clearance
    exceeds R_E + h_atm.
    """
    ra = np.asarray(a.position_km, dtype=float)
    rb = np.asarray(b.position_km, dtype=float)
    d = rb - ra
    dd = float(d @ d)
    if dd == 0.0:
        raise ValueError("coincident satellite positions")
    tstar = -float(ra @ d) / dd
    if 0.0 <= tstar <= 1.0:
        return float(np.linalg.norm(ra + tstar * d))
    return float(min(np.linalg.norm(ra), np.linalg.norm(rb)))


def clearance_segment_km(ra: np.ndarray, rb: np.ndarray) -> np.ndarray:
    """Vectorised segment clearance for stacked position arrays (..., 3)."""
    d = rb - ra
    dd = np.sum(d * d, axis=-1)
    if np.any(dd == 0.0):
        raise ValueError("coincident satellite positions")
    tstar = -np.sum(ra * d, axis=-1) / dd
    tclip = np.clip(tstar, 0.0, 1.0)
    foot = ra + tclip[..., None] * d
    return np.linalg.norm(foot, axis=-1)


def min_ring_size(h_km: float, h_atm_km: float) -> int:
    """Smallest N_s whose adjacent-satellite chords clear the R_E + h_atm shell."""
    if h_km <= h_atm_km:
        raise ValueError("altitude must exceed the atmospheric shell")
    if h_atm_km < 0:
        raise ValueError("h_atm_km must be >= 0")
    ratio = (EARTH_RADIUS_KM + h_atm_km) / (EARTH_RADIUS_KM + h_km)
    n = max(3, math.ceil(math.pi / math.acos(ratio)))
    while (EARTH_RADIUS_KM + h_km) * math.cos(math.pi / n) <= EARTH_RADIUS_KM + h_atm_km:
        n += 1
    while n > 3 and (EARTH_RADIUS_KM + h_km) * math.cos(math.pi / (n - 1)) > EARTH_RADIUS_KM + h_atm_km:
        n -= 1
    return n


def zenith_angle(sat: SatellitePosition, gs: GroundStation, t: float | None = None) -> float:
    """Zenith angle [deg] of a satellite seen from a ground station.

    ``t`` defaults to the satellite's own timestamp; it fixes the Earth
    rotation applied to the station.
    """
    when = sat.time_s if t is None else t
    rg = gs_position_km(gs, [when])[0]
    v = np.asarray(sat.position_km, dtype=float) - rg
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("satellite coincident with ground station")
    cosz = float(v @ rg) / (nv * float(np.linalg.norm(rg)))
    return math.degrees(math.acos(min(1.0, max(-1.0, cosz))))


def zenith_angles_deg(spec: ConstellationSpec, gs: GroundStation, times_s) -> np.ndarray:
    """Zenith angles for all satellites, shape (len(times), num_sats)."""
    sat = positions_eci_km(spec, times_s)
    rg = gs_position_km(gs, times_s)[:, None, :]
    v = sat - rg
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nv == 0.0):
        raise ValueError("satellite coincident with ground station")
    cosz = np.sum(v * rg, axis=-1) / (nv * EARTH_RADIUS_KM)
    return np.degrees(np.arccos(np.clip(cosz, -1.0, 1.0)))


def _serving_state(spec, gs, times, theta_max_deg):
    """(serving index or -1) per sample plus the zenith of the serving sat."""
    z = zenith_angles_deg(spec, gs, times)
    serving = np.argmin(z, axis=1)  # ties -> lowest index
    zmin = z[np.arange(z.shape[0]), serving]
    state = np.where(zmin <= theta_max_deg, serving, -1)
    return state, zmin


def _state_at(spec, gs, t, theta_max_deg):
    state, _ = _serving_state(spec, gs, np.array([t]), theta_max_deg)
    return int(state[0])


def _refine_boundary(spec, gs, t_lo, t_hi, state_lo, theta_max_deg, tol):
    """Bisect the instant where the serving state stops being ``state_lo``."""
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _state_at(spec, gs, mid, theta_max_deg) == state_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _refine_min_zenith(spec, gs, sat, t_best, dt, t_lo, t_hi):
    """Golden-section polish of the serving satellite's minimum zenith angle."""
    a = max(t_lo, t_best - dt)
    b = min(t_hi, t_best + dt)

    def f(t):
        z = zenith_angles_deg(spec, gs, np.array([t]))[0, sat]
        return z

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(30):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd)


def find_sessions(
    spec: ConstellationSpec,
    gs: GroundStation,
    t0: float,
    t1: float,
    dt: float = 1.0,
    theta_max_deg: float = 70.0,
) -> list[VisibilitySession]:
    """Extract visibility sessions over [t0, t1].

    A session is a maximal interval during which the same satellite is the
    minimum-zenith visible one.  Handover instants are shared between the
    outgoing and incoming session, so continuous coverage tiles the window
    without gaps.  Boundaries are bisected to within dt/100.
    """
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(math.floor((t1 - t0) / dt))
    times = t0 + dt * np.arange(n + 1)
    if times[-1] < t1:
        times = np.append(times, t1)
    state, zmin = _serving_state(spec, gs, times, theta_max_deg)

    tol = dt / 100.0
    sessions: list[VisibilitySession] = []
    i = 0
    boundary_left = times[0]
    while i < len(times):
        s = state[i]
        j = i
        while j + 1 < len(times) and state[j + 1] == s:
            j += 1
        # refine the right edge of this run
        if j + 1 < len(times):
            boundary_right = _refine_boundary(
                spec, gs, times[j], times[j + 1], s, theta_max_deg, tol
            )
        else:
            boundary_right = times[-1]
        if s >= 0:
            seg = slice(i, j + 1)
            k_best = i + int(np.argmin(zmin[seg]))
            min_z = _refine_min_zenith(
                spec, gs, s, times[k_best], dt, boundary_left, boundary_right
            )
            min_z = min(min_z, float(np.min(zmin[seg])))
            sessions.append(
                VisibilitySession(
                    gs_id=gs.id,
                    t_start_s=float(boundary_left),
                    t_end_s=float(boundary_right),
                    serving_sat=int(s),
                    min_zenith_deg=float(min_z),
                )
            )
        boundary_left = boundary_right
        i = j + 1
    return sessions


def visibility_fraction(sessions, t_total_s: float) -> float:
    """Fraction of [0, T] covered by sessions; 0 for an empty sequence.

    Sessions that share handover instants are measured as one contiguous
    span, so uninterrupted coverage of the window gives exactly 1.0.
    """
    if t_total_s <= 0:
        raise ValueError("t_total_s must be positive")
    ordered = sorted(sessions, key=lambda s: s.t_start_s)
    total = 0.0
    chain_start = None
    chain_end = None
    for s in ordered:
        if chain_end is not None and s.t_start_s == chain_end:
            chain_end = s.t_end_s
        else:
            if chain_start is not None:
                total += chain_end - chain_start
            chain_start, chain_end = s.t_start_s, s.t_end_s
    if chain_start is not None:
        total += chain_end - chain_start
    return min(1.0, total / t_total_s)
