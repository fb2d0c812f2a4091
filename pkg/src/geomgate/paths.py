"""Synthesis of four-segment geometric-gate pulse schedules and path analysis.

A geometric gate is specified by the rotation axis angles ``(chi0, xi0)``, the
geometric phase ``gamma_g < 0`` and the path parameter ``Lambda`` -- the polar
angle of the latitude arc of a closed loop built from two longitude arcs, a
latitude arc and a return longitude.  The synthesized drive satisfies, segment
by segment, the dressed-state path equations

    d(chi)/dt = Omega sin(phi - xi)
    d(xi)/dt  = -Delta - Omega cot(chi) cos(phi - xi)

with the phase/sign branches chosen so the envelope stays nonnegative, and the
latitude detuning fixed so the dynamical phase integrates to zero (parallel
transport).  The loop then implements exp(i gamma_g n.sigma) exactly, with all
of the phase coming from the enclosed solid angle.

Angles are radians, times seconds, amplitudes and detunings rad/s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalFailure, ValidationError

PI = math.pi
TWO_PI = 2.0 * math.pi

_AREA_EPS = 1e-12
_SHAPES = ("sin2", "const")


# ---------------------------------------------------------------------------
# Path specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSpec:
    """Geometric-path description for one gate.

    ``lam`` is the azimuth parameter ``2 gamma_g / (1 - cos Lambda)``; the
    latitude arc actually sweeps the span ``xi1 - xi0``, which equals ``lam``
    in configuration A and ``lam - k pi`` in configuration B, where
    ``k = 2/(1 - cos Lambda)`` makes the extra enclosed area contribute a
    global phase of exactly -pi.
    """

    chi0: float
    xi0: float
    gamma_g: float
    Lambda: float
    configuration: str
    lam: float
    k: float
    xi1: float

    @property
    def lam_span(self) -> float:
        """Azimuth span of the latitude arc (always negative here)."""
        return self.xi1 - self.xi0

    @property
    def realized_phase(self) -> float:
        """Loop phase: gamma_g in configuration A, gamma_g - pi in B."""
        return self.gamma_g if self.configuration == "A" else self.gamma_g - PI

    @property
    def axis(self) -> np.ndarray:
        """Unit rotation axis (sin chi0 cos xi0, sin chi0 sin xi0, cos chi0)."""
        return np.array(
            [
                math.sin(self.chi0) * math.cos(self.xi0),
                math.sin(self.chi0) * math.sin(self.xi0),
                math.cos(self.chi0),
            ]
        )


def make_path_spec(
    chi0: float,
    xi0: float,
    gamma_g: float,
    Lambda: float,
    configuration: str = "A",
) -> PathSpec:
    """Build a validated :class:`PathSpec` with the derived fields populated."""
    if configuration not in ("A", "B"):
        raise ValidationError(f"configuration must be 'A' or 'B', got {configuration!r}")
    if not 0.0 <= chi0 < PI:
        raise ValidationError(f"chi0 must lie in [0, pi), got {chi0}")
    if not 0.0 < Lambda <= PI:
        raise ValidationError(f"Lambda must lie in (0, pi/2) u (pi/2, pi], got {Lambda}")
    if abs(Lambda - PI / 2) < 1e-12:
        raise ValidationError(
            "Lambda = pi/2 is singular (tan Lambda): the latitude detuning is "
            "undefined; use a nearby value such as 0.495*pi"
        )
    if gamma_g >= 0:
        raise ValidationError(
            "gamma_g must be negative in this convention; obtain positive "
            "rotations by flipping the axis at the gate layer"
        )
    one_minus = 1.0 - math.cos(Lambda)
    lam = 2.0 * gamma_g / one_minus
    k = 2.0 / one_minus
    xi1 = xi0 + lam if configuration == "A" else xi0 + lam - k * PI
    return PathSpec(
        chi0=float(chi0),
        xi0=float(xi0),
        gamma_g=float(gamma_g),
        Lambda=float(Lambda),
        configuration=configuration,
        lam=lam,
        k=k,
        xi1=xi1,
    )


# ---------------------------------------------------------------------------
# Pulse segments and schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PulseSegment:
    """One arc of the loop: envelope, phase track and constant detuning.

    All time arguments are local, ``0 <= t <= duration``.  ``kind`` is
    ``"longitude"`` (constant drive phase, chi sweeps, xi fixed),
    ``"latitude"`` (chi fixed at Lambda, xi sweeps with
    ``d(xi)/dt = b_coef * Omega(t) - delta``) or ``"generic"``.
    """

    duration: float
    shape: str
    omega0: float  # envelope peak (equals area/duration for "const")
    area: float
    delta: float
    kind: str
    phi0: float  # phase at local t = 0
    phi_slope: float  # mean d(phi)/dt over the segment (exact for "const")
    chi_start: float
    chi_end: float
    xi_ref: float  # longitude azimuth, or xi at the latitude start
    b_coef: float = 0.0
    phi_offset: float = 0.0  # latitude: phi(t) = xi(t) + phi_offset

    def omega(self, t):
        """Envelope Omega(t) >= 0 (rad/s)."""
        t = np.asarray(t, dtype=float)
        if self.shape == "sin2":
            return self.omega0 * np.sin(PI * t / self.duration) ** 2
        return np.full_like(t, self.area / self.duration)

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "sin2":
            return self.omega0 * (PI / self.duration) * np.sin(TWO_PI * t / self.duration)
        return np.zeros_like(t)

    def envelope_integral(self, t):
        """Running pulse area int_0^t Omega."""
        t = np.asarray(t, dtype=float)
        if self.shape == "sin2":
            return self.omega0 * (
                0.5 * t - (self.duration / (4.0 * PI)) * np.sin(TWO_PI * t / self.duration)
            )
        return (self.area / self.duration) * t

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "latitude":
            return self.xi_ref + self.b_coef * self.envelope_integral(t) - self.delta * t
        return np.broadcast_to(np.asarray(self.xi_ref, dtype=float), t.shape).copy()

    def xi_dot(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "latitude":
            return self.b_coef * self.omega(t) - self.delta
        return np.zeros_like(t)

    def chi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "latitude":
            return np.broadcast_to(np.asarray(self.chi_start, dtype=float), t.shape).copy()
        sign = 1.0 if self.chi_end >= self.chi_start else -1.0
        return self.chi_start + sign * self.envelope_integral(t)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "latitude":
            return self.xi(t) + self.phi_offset
        return np.broadcast_to(np.asarray(self.phi0, dtype=float), t.shape).copy()

    def phi_dot(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "latitude":
            return self.xi_dot(t)
        return np.zeros_like(t)


@dataclass(frozen=True)
class ControlSamples:
    """Midpoint-sampled controls of a schedule, ready for propagators."""

    t_mid: np.ndarray
    dt: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    delta: np.ndarray
    omega_dot: np.ndarray
    phi_dot: np.ndarray
    segment_index: np.ndarray


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered pulse segments with the originating path spec (if any)."""

    segments: tuple
    path: Optional[PathSpec] = None
    label: str = ""

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def total_area(self) -> float:
        return float(sum(s.area for s in self.segments))

    @property
    def omega_peak(self) -> float:
        """Largest envelope amplitude; the scale of the detuning-offset error."""
        return float(max(s.omega0 for s in self.segments))

    @property
    def boundaries(self) -> np.ndarray:
        """Segment start/end times, length len(segments)+1."""
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def default_steps(self, base: int = 4000, max_phase_step: float = 0.05) -> list:
        """Per-segment step counts: ``base`` split by duration, refined so no
        step advances any control phase by more than ``max_phase_step`` rad."""
        total = self.total_duration
        counts = []
        for seg in self.segments:
            n = max(16, math.ceil(base * seg.duration / total))
            rate = abs(seg.delta) + abs(seg.b_coef) * seg.omega0 + seg.omega0
            n = max(n, math.ceil(rate * seg.duration / max_phase_step))
            counts.append(int(n))
        return counts

    def steps_for_dt(self, dt: float) -> list:
        if dt <= 0:
            raise ValidationError(f"dt must be positive, got {dt}")
        return [max(4, math.ceil(seg.duration / dt)) for seg in self.segments]

    def sample_controls(self, steps: Optional[Sequence[int]] = None) -> ControlSamples:
        """Sample all controls at per-step midpoints (used by the integrators)."""
        if steps is None:
            steps = self.default_steps()
        if len(steps) != len(self.segments):
            raise ValidationError("steps must give one count per segment")
        offs = self.boundaries
        t_mid, dts, om, ph, de, omd, phd, idx = [], [], [], [], [], [], [], []
        for i, (seg, n) in enumerate(zip(self.segments, steps)):
            h = seg.duration / n
            local = (np.arange(n) + 0.5) * h
            t_mid.append(offs[i] + local)
            dts.append(np.full(n, h))
            om.append(seg.omega(local))
            ph.append(seg.phi(local))
            de.append(np.full(n, seg.delta))
            omd.append(seg.omega_dot(local))
            phd.append(seg.phi_dot(local))
            idx.append(np.full(n, i, dtype=int))
        return ControlSamples(
            t_mid=np.concatenate(t_mid),
            dt=np.concatenate(dts),
            omega=np.concatenate(om),
            phi=np.concatenate(ph),
            delta=np.concatenate(de),
            omega_dot=np.concatenate(omd),
            phi_dot=np.concatenate(phd),
            segment_index=np.concatenate(idx),
        )


def _segment_duration(area: float, omega0: float, shape: str) -> float:
    # sin^2 peak O0 integrates to O0*T/2; constant envelope to O0*T
    return 2.0 * area / omega0 if shape == "sin2" else area / omega0


def _longitude_segment(area, phi, chi_start, chi_end, xi, omega0, shape) -> PulseSegment:
    duration = _segment_duration(area, omega0, shape)
    return PulseSegment(
        duration=duration,
        shape=shape,
        omega0=omega0 if shape == "sin2" else area / duration,
        area=area,
        delta=0.0,
        kind="longitude",
        phi0=phi,
        phi_slope=0.0,
        chi_start=chi_start,
        chi_end=chi_end,
        xi_ref=xi,
    )


def synthesize_schedule(spec: PathSpec, omega0: float, shape: str = "sin2") -> PulseSchedule:
    """Convert a path spec into its four-segment schedule.

    Segment areas are ``chi0``, ``Lambda``, ``|span sin(Lambda) cos(Lambda)|``
    and ``|Lambda - chi0|`` where ``span = xi1 - xi0``; zero-area segments are
    dropped (e.g. the first one for Z rotations, the latitude at Lambda = pi).
    The shared envelope peak ``omega0`` fixes every duration, so segment times
    are proportional to their areas.

    The latitude keeps the detuning constant at ``span sin^2(Lambda) / T3``;
    for the sin^2 shape the azimuth rate follows the envelope
    (``d(xi)/dt + delta`` proportional to ``Omega(t)``), which satisfies the
    path equations pointwise while keeping the pulse nonnegative and the swept
    span exact.
    """
    if omega0 <= 0:
        raise ValidationError(f"omega0 must be positive, got {omega0}")
    if shape not in _SHAPES:
        raise ValidationError(f"shape must be one of {_SHAPES}, got {shape!r}")

    L, chi0, xi0, xi1 = spec.Lambda, spec.chi0, spec.xi0, spec.xi1
    span = spec.lam_span
    segments = []

    if chi0 > _AREA_EPS:
        segments.append(
            _longitude_segment(chi0, xi0 - PI / 2, chi0, 0.0, xi0, omega0, shape)
        )
    segments.append(_longitude_segment(L, xi1 + PI / 2, 0.0, L, xi1, omega0, shape))

    area3 = abs(span * math.sin(L) * math.cos(L))
    if area3 > _AREA_EPS:
        duration3 = _segment_duration(area3, omega0, shape)
        delta3 = span * math.sin(L) ** 2 / duration3
        # branch choice keeps Omega >= 0 for span < 0 (gamma_g < 0)
        if L < PI / 2:
            b_coef, phi_offset = 1.0 / math.tan(L), PI
        else:
            b_coef, phi_offset = -1.0 / math.tan(L), 0.0
        segments.append(
            PulseSegment(
                duration=duration3,
                shape=shape,
                omega0=omega0 if shape == "sin2" else area3 / duration3,
                area=area3,
                delta=delta3,
                kind="latitude",
                phi0=xi1 + phi_offset,
                phi_slope=-span / duration3,
                chi_start=L,
                chi_end=L,
                xi_ref=xi1,
                b_coef=b_coef,
                phi_offset=phi_offset,
            )
        )

    area4 = abs(L - chi0)
    if area4 > _AREA_EPS:
        phi4 = xi0 - PI / 2 if L > chi0 else xi0 + PI / 2
        segments.append(_longitude_segment(area4, phi4, L, chi0, xi0, omega0, shape))

    if not segments:
        raise ValidationError("degenerate gate: every segment has zero pulse area")
    return PulseSchedule(segments=tuple(segments), path=spec)


def geometric_area(spec: PathSpec) -> float:
    """Closed-form total pulse area of the synthesized loop."""
    L, chi0 = spec.Lambda, spec.chi0
    return (
        chi0
        + L
        + abs(spec.lam_span * math.sin(L) * math.cos(L))
        + abs(L - chi0)
    )


def pulse_area(schedule: PulseSchedule, points_per_segment: int = 2049) -> float:
    """Total area by composite-Simpson quadrature of the envelopes."""
    total = 0.0
    for seg in schedule.segments:
        t = np.linspace(0.0, seg.duration, points_per_segment)
        total += _simpson(seg.omega(t), t[1] - t[0])
    return float(total)


def _simpson(y: np.ndarray, h: float) -> float:
    """Composite Simpson rule on a uniform grid with an odd point count."""
    n = len(y)
    if n < 3:
        return float(np.trapezoid(y, dx=h))
    if n % 2 == 0:  # trapezoid on the last interval
        core = _simpson(y[:-1], h)
        return core + 0.5 * h * (y[-2] + y[-1])
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2])))


# ---------------------------------------------------------------------------
# Bloch-path integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathJump:
    """Instantaneous azimuth reset between segments (pole transits)."""

    time: float
    chi: float
    dxi: float
    segment_index: int = 0  # index of the segment the jump precedes


@dataclass(frozen=True)
class BlochPath:
    """Sampled evolution trajectory (chi(t), xi(t)) with segment structure.

    Samples are grouped per segment (uniform local grids, odd counts) so the
    phase quadratures can use Simpson weights segment by segment; ``jumps``
    carry the azimuth discontinuities at pole transits, which contribute
    ``-(1/2)(1 - cos chi) dxi`` to the geometric phase and nothing to the
    dynamical one.
    """

    blocks: tuple  # per segment: dict of arrays t, chi, xi, xi_dot, delta
    jumps: tuple

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([b["t"] for b in self.blocks])

    @property
    def chi(self) -> np.ndarray:
        return np.concatenate([b["chi"] for b in self.blocks])

    @property
    def xi(self) -> np.ndarray:
        return np.concatenate([b["xi"] for b in self.blocks])

    @property
    def samples(self) -> np.ndarray:
        """(n, 3) array of (t, chi, xi) rows."""
        return np.column_stack([self.t, self.chi, self.xi])

    def k_plus(self) -> np.ndarray:
        """Accumulated total-phase track k+(t) aligned with :attr:`samples`.

        Cumulative trapezoid of -(1/2)[xi_dot (cos chi - 1) - delta]/cos chi
        plus the jump contributions, in time order.
        """
        out, acc = [], 0.0
        jumps = {j.segment_index: j for j in self.jumps}
        for i, b in enumerate(self.blocks):
            start = jumps.get(i)
            if start is not None:
                c = math.cos(start.chi)
                if abs(c) > 1e-12:
                    acc += -0.5 * start.dxi * (c - 1.0) / c
            integrand = _masked_ratio(
                -0.5 * (b["xi_dot"] * (np.cos(b["chi"]) - 1.0) - b["delta"]),
                np.cos(b["chi"]),
            )
            dt = np.diff(b["t"])
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * dt)])
            out.append(acc + cum)
            acc = out[-1][-1]
        return np.concatenate(out)

    def endpoints_bloch(self):
        vecs = []
        for chi, xi in ((self.blocks[0]["chi"][0], self.blocks[0]["xi"][0]),
                        (self.blocks[-1]["chi"][-1], self.blocks[-1]["xi"][-1])):
            vecs.append(
                np.array(
                    [math.sin(chi) * math.cos(xi), math.sin(chi) * math.sin(xi), math.cos(chi)]
                )
            )
        return vecs[0], vecs[1]

    def closure_defect(self) -> float:
        """Euclidean distance between the Bloch vectors of the two endpoints."""
        v0, v1 = self.endpoints_bloch()
        return float(np.linalg.norm(v1 - v0))


def _masked_ratio(num: np.ndarray, den: np.ndarray, zero_tol: float = 1e-13) -> np.ndarray:
    """num/den with exact-zero numerators mapped to 0 (longitudes make the
    phase integrands identically zero even where cos chi vanishes)."""
    out = np.zeros_like(num, dtype=float)
    live = np.abs(num) > zero_tol
    out[live] = num[live] / den[live]
    return out


def _rk4_segment(seg: PulseSegment, chi_init: float, xi_init: float, n_samples: int):
    """Fixed-step RK4 for the path equations over one segment.

    Returns samples of (t_local, chi, xi) on the uniform grid plus xi_dot
    evaluated from the right-hand side at the sample points.
    """

    def rhs(t, y):
        chi, xi = y
        s = math.sin(chi)
        if abs(s) < 1e-9:
            raise NumericalFailure(
                "path divergence: trajectory reached a pole inside a "
                "latitude/generic segment (cot chi overflow)"
            )
        omega = float(seg.omega(t))
        phi = float(seg.phi(t))
        chi_dot = omega * math.sin(phi - xi)
        xi_dot = -seg.delta - omega * (math.cos(chi) / s) * math.cos(phi - xi)
        return np.array([chi_dot, xi_dot]), xi_dot

    n_steps = n_samples - 1
    h = seg.duration / n_steps
    t = np.linspace(0.0, seg.duration, n_samples)
    chi = np.empty(n_samples)
    xi = np.empty(n_samples)
    xi_dot = np.empty(n_samples)
    y = np.array([chi_init, xi_init], dtype=float)
    chi[0], xi[0] = y
    _, xi_dot[0] = rhs(0.0, y)
    for i in range(n_steps):
        t0 = t[i]
        k1, _ = rhs(t0, y)
        k2, _ = rhs(t0 + 0.5 * h, y + 0.5 * h * k1)
        k3, _ = rhs(t0 + 0.5 * h, y + 0.5 * h * k2)
        k4, _ = rhs(t0 + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        chi[i + 1], xi[i + 1] = y
        _, xi_dot[i + 1] = rhs(t[i + 1], y)
    return t, chi, xi, xi_dot


def _segment_samples(seg: PulseSegment, chi_init, xi_init, n_samples):
    """Samples for one segment, analytic on longitudes, RK4 elsewhere."""
    if seg.kind == "longitude":
        # On a longitude cos(phi - xi) = 0 exactly, so xi is constant and the
        # cot(chi) term never acts; integrating it numerically through the
        # pole would be unstable, the analytic solution is exact.
        t = np.linspace(0.0, seg.duration, n_samples)
        chi = seg.chi(t)
        xi = np.full(n_samples, seg.xi_ref)
        xi_dot = np.zeros(n_samples)
        return t, chi, xi, xi_dot
    return _rk4_segment(seg, chi_init, xi_init, n_samples)


def _samples_for_segment(seg: PulseSegment, n: Optional[int]) -> int:
    if n is not None:
        count = n
    else:
        swept = abs(seg.delta) * seg.duration + abs(seg.b_coef) * seg.area + seg.area
        count = max(1001, int(200 * swept))
    count = min(count, 200001)
    return count + 1 if count % 2 == 0 else count  # odd for Simpson


def integrate_path(
    schedule: PulseSchedule,
    chi0: Optional[float] = None,
    xi0: Optional[float] = None,
    samples_per_segment: Optional[int] = None,
) -> BlochPath:
    """Forward-integrate the path equations for a schedule.

    Longitude segments use their exact solution (xi pinned at phi -/+ pi/2);
    latitude and generic segments are integrated with fixed-step RK4 driven
    only by the segment's controls.  Azimuth resets between segments are
    recorded as jumps with the polar angle at which they occur.
    """
    if chi0 is None or xi0 is None:
        if schedule.path is None:
            raise ValidationError("chi0/xi0 required for schedules without a path spec")
        chi0 = schedule.path.chi0 if chi0 is None else chi0
        xi0 = schedule.path.xi0 if xi0 is None else xi0

    offs = schedule.boundaries
    blocks, jumps = [], []
    chi_cur, xi_cur = float(chi0), float(xi0)
    for i, seg in enumerate(schedule.segments):
        chi_entry, xi_entry = seg.chi_start, seg.xi_ref
        if abs(chi_entry - chi_cur) > 1e-6:
            raise ValidationError(
                f"segment {i} starts at chi = {chi_entry:.6f} but the path is "
                f"at chi = {chi_cur:.6f}: polar angle must be continuous"
            )
        dxi = xi_entry - xi_cur
        if abs(dxi) > 1e-12:
            jumps.append(
                PathJump(time=float(offs[i]), chi=chi_cur, dxi=dxi, segment_index=i)
            )
        n = _samples_for_segment(seg, samples_per_segment)
        t, chi, xi, xi_dot = _segment_samples(seg, chi_entry, xi_entry, n)
        blocks.append(
            {
                "t": offs[i] + t,
                "chi": chi,
                "xi": xi,
                "xi_dot": xi_dot,
                "delta": np.full(n, seg.delta),
                "kind": seg.kind,
            }
        )
        chi_cur, xi_cur = float(chi[-1]), float(xi[-1])

    # closing azimuth reset (orange-slice loops end a longitude at the start
    # azimuth already; a residual pole reset carries no phase at chi = 0)
    return BlochPath(blocks=tuple(blocks), jumps=tuple(jumps))


# ---------------------------------------------------------------------------
# Phase functionals
# ---------------------------------------------------------------------------


def geometric_phase(path: BlochPath, closure_tol: float = 1e-5) -> float:
    """Geometric phase -(1/2) int xi_dot (1 - cos chi) dt of a closed path.

    Equals minus half the enclosed solid angle; azimuth jumps at polar angle
    chi contribute -(1/2)(1 - cos chi) dxi (zero at the north pole, the full
    lune term at the south pole).
    """
    defect = path.closure_defect()
    if defect > closure_tol:
        raise ValidationError(
            f"open path: endpoint Bloch vectors differ by {defect:.2e} "
            f"(tolerance {closure_tol:.1e})"
        )
    total = 0.0
    for b in path.blocks:
        integrand = -0.5 * b["xi_dot"] * (1.0 - np.cos(b["chi"]))
        total += _simpson(integrand, b["t"][1] - b["t"][0])
    for j in path.jumps:
        total += -0.5 * (1.0 - math.cos(j.chi)) * j.dxi
    return float(total)


def dynamical_phase(
    path: BlochPath,
    schedule: Optional[PulseSchedule] = None,
    pv_window: int = 8,
) -> float:
    """Dynamical phase (1/2) int [xi_dot sin^2 chi + delta] / cos chi dt.

    On designed segments the numerator vanishes identically (longitudes) or
    the arc stays off the equator (latitude), so the integrand is regular.
    Generic paths crossing chi = pi/2 are handled by a symmetric-pair
    principal value around each crossing; a crossing too close to a segment
    boundary to be paired raises :class:`NumericalFailure`.
    """
    del schedule  # delta is carried on the path samples
    total = 0.0
    for b in path.blocks:
        num = 0.5 * (b["xi_dot"] * np.sin(b["chi"]) ** 2 + b["delta"])
        den = np.cos(b["chi"])
        h = b["t"][1] - b["t"][0]
        crossings = np.nonzero(np.sign(den[:-1]) * np.sign(den[1:]) < 0)[0]
        live = np.abs(num) > 1e-13
        if crossings.size == 0 or not live.any():
            total += _simpson(_masked_ratio(num, den), h)
            continue
        total += _principal_value_block(num, den, h, crossings, pv_window)
    # jumps: no time elapses and sin^2(chi) vanishes at the poles
    return float(total)


def _principal_value_block(num, den, h, crossings, window) -> float:
    """Simpson quadrature with symmetric-pair principal value at crossings."""
    n = len(num)
    keep = np.ones(n, dtype=bool)
    total = 0.0
    for c in crossings:
        lo, hi = c - window + 1, c + window  # samples lo..hi straddle the pole
        if lo < 0 or hi >= n:
            raise NumericalFailure(
                "unpaired chi = pi/2 crossing at a path boundary: cannot take "
                "the symmetric principal value"
            )
        keep[lo : hi + 1] = False
        # pair samples symmetric about the midpoint between c and c+1; the
        # odd 1/cos part cancels pairwise, the even residue is summed with a
        # midpoint rule that never evaluates at the singular point
        for j in range(window):
            f_left = num[c - j] / den[c - j]
            f_right = num[c + 1 + j] / den[c + 1 + j]
            total += (f_left + f_right) * h
    # regular remainder via trapezoid on the kept mask (piecewise)
    vals = _masked_ratio(num, den)
    for start, stop in _true_runs(keep):
        if stop - start >= 2:
            total += float(np.trapezoid(vals[start:stop], dx=h))
    return total


def _true_runs(mask):
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def schedule_to_json(schedule: PulseSchedule) -> str:
    """Serialize a synthesized schedule to the documented JSON layout."""
    if schedule.path is None:
        raise ValidationError("only schedules carrying a path spec serialize to JSON")
    spec = schedule.path
    doc = {
        "segments": [
            {
                "duration_s": seg.duration,
                "shape": seg.shape,
                "omega0_rad_s": seg.omega0,
                "area_rad": seg.area,
                "phi0_rad": seg.phi0,
                "phi_slope_rad_s": seg.phi_slope,
                "delta_rad_s": seg.delta,
            }
            for seg in schedule.segments
        ],
        "configuration": spec.configuration,
        "path": {
            "chi0": spec.chi0,
            "xi0": spec.xi0,
            "Lambda": spec.Lambda,
            "lambda": spec.lam,
            "gamma_g": spec.gamma_g,
        },
    }
    return json.dumps(doc, indent=2)


def schedule_from_json(text: str) -> PulseSchedule:
    """Rebuild a schedule from :func:`schedule_to_json` output.

    The segments are re-synthesized from the path block and checked against
    the serialized fields, so a corrupted document fails loudly instead of
    producing a subtly different pulse.
    """
    doc = json.loads(text)
    p = doc["path"]
    spec = make_path_spec(
        p["chi0"], p["xi0"], p["gamma_g"], p["Lambda"], doc["configuration"]
    )
    segs = doc["segments"]
    if not segs:
        raise ValidationError("schedule JSON contains no segments")
    shape = segs[0]["shape"]
    omega0 = max(s["omega0_rad_s"] for s in segs)
    schedule = synthesize_schedule(spec, omega0, shape)
    if len(schedule.segments) != len(segs):
        raise ValidationError(
            f"schedule JSON inconsistent: {len(segs)} segments serialized, "
            f"{len(schedule.segments)} implied by the path block"
        )
    for built, raw in zip(schedule.segments, segs):
        for attr, key in (
            ("duration", "duration_s"),
            ("area", "area_rad"),
            ("delta", "delta_rad_s"),
            ("phi_slope", "phi_slope_rad_s"),
        ):
            a, b = getattr(built, attr), raw[key]
            if abs(a - b) > 1e-9 * max(1.0, abs(a), abs(b)):
                raise ValidationError(
                    f"schedule JSON inconsistent: segment field {key} is {b!r}, "
                    f"re-synthesis gives {a!r}"
                )
    return schedule
