"""Gate targets, dynamical (Rabi) baselines, coherent-error simulation and
robustness sweeps.

The error model is the conventional pair of local coherent errors: a drive
amplitude fraction ``epsilon`` scaling the envelope as ``(1 + epsilon)
Omega(t)``, and a detuning offset ``delta * Omega_peak`` added to the qubit
frequency term.  Gate quality is the global-phase-insensitive trace fidelity
``|Tr(U_ideal^+ U_real)| / dim``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import SIGMA_X, SIGMA_Y, SIGMA_Z, ordered_product, su2_rotation
from .errors import ValidationError
from .paths import (
    PathSpec,
    PulseSchedule,
    PulseSegment,
    geometric_area,
    make_path_spec,
    synthesize_schedule,
)

PI = math.pi

# rotation-axis angles (chi0, xi0) and geometric phase per named gate
GATE_ANGLES = {
    "S": (0.0, 0.0, -PI / 4),
    "T": (0.0, 0.0, -PI / 8),
    "H": (PI / 4, 0.0, -PI / 2),
}

FAMILIES = ("geometric_A", "geometric_B", "dynamical")


def gate_path_spec(gate: str, Lambda: float, configuration: str = "A") -> PathSpec:
    """Path spec of a named gate (S, T or H) at path parameter Lambda."""
    if gate not in GATE_ANGLES:
        raise ValidationError(f"gate must be one of {sorted(GATE_ANGLES)}, got {gate!r}")
    chi0, xi0, gamma_g = GATE_ANGLES[gate]
    return make_path_spec(chi0, xi0, gamma_g, Lambda, configuration)


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateTarget:
    """Closed-form target: rotation by -2*gamma about the unit axis."""

    axis: np.ndarray
    gamma: float
    unitary: np.ndarray


def target_unitary(spec: PathSpec) -> GateTarget:
    """exp(i gamma n.sigma) with gamma the loop phase of the configuration.

    Configuration B realizes the same gate as A times a global phase of -1
    (its loop phase is gamma_g - pi).
    """
    n = spec.axis
    gamma = spec.realized_phase
    n_sigma = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    u = math.cos(gamma) * np.eye(2, dtype=complex) + 1j * math.sin(gamma) * n_sigma
    return GateTarget(axis=n, gamma=gamma, unitary=u)


# ---------------------------------------------------------------------------
# Dynamical (Rabi) gates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicalGateSpec:
    """Resonant-drive composite: pulses (theta, phi_d), first pulse first.

    Negative theta is realized as a positive-area pulse with the drive phase
    advanced by pi, so the amplitude error scales |theta| as it would in
    hardware.
    """

    sequence: tuple

    @property
    def total_area(self) -> float:
        return float(sum(abs(th) for th, _ in self.sequence))


def dynamical_gate_spec(gate: str) -> DynamicalGateSpec:
    """Standard composites: Z rotations via Rx(-pi/2) Ry(-theta) Rx(pi/2),
    Hadamard via Rx(pi) Ry(pi/2).  Sequences are in temporal order."""
    table = {
        "S": ((PI / 2, 0.0), (-PI / 2, PI / 2), (-PI / 2, 0.0)),
        "T": ((PI / 2, 0.0), (-PI / 4, PI / 2), (-PI / 2, 0.0)),
        "H": ((PI / 2, PI / 2), (PI, 0.0)),
    }
    if gate not in table:
        raise ValidationError(f"gate must be one of {sorted(table)}, got {gate!r}")
    return DynamicalGateSpec(sequence=table[gate])


def rotation_xy(theta: float, phi_d: float) -> np.ndarray:
    """exp(-i (theta/2)(cos phi_d sx + sin phi_d sy))."""
    return su2_rotation(0.5 * theta * math.cos(phi_d), 0.5 * theta * math.sin(phi_d), 0.0)


def dynamical_gate(spec: DynamicalGateSpec) -> np.ndarray:
    """Closed-form product of the composite's rotations."""
    u = np.eye(2, dtype=complex)
    for theta, phi_d in spec.sequence:
        u = rotation_xy(theta, phi_d) @ u
    return u


def dynamical_schedule(
    spec: DynamicalGateSpec, omega0: float = 1.0, shape: str = "sin2"
) -> PulseSchedule:
    """Pulse schedule of the composite: one resonant segment per rotation."""
    if omega0 <= 0:
        raise ValidationError(f"omega0 must be positive, got {omega0}")
    segments = []
    for theta, phi_d in spec.sequence:
        area = abs(theta)
        if area < 1e-12:
            continue
        phi = phi_d if theta >= 0 else phi_d + PI
        duration = 2.0 * area / omega0 if shape == "sin2" else area / omega0
        segments.append(
            PulseSegment(
                duration=duration,
                shape=shape,
                omega0=omega0 if shape == "sin2" else area / duration,
                area=area,
                delta=0.0,
                kind="longitude",
                phi0=phi,
                phi_slope=0.0,
                chi_start=0.0,
                chi_end=0.0,
                xi_ref=0.0,
            )
        )
    if not segments:
        raise ValidationError("empty dynamical composite")
    return PulseSchedule(segments=tuple(segments), label="dynamical")


# ---------------------------------------------------------------------------
# Coherent-error simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorModel:
    """Coherent error fractions: epsilon scales the drive, delta offsets the
    detuning in units of the schedule's envelope peak."""

    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name, val in (("epsilon", self.epsilon), ("delta", self.delta)):
            if abs(val) > 0.5:
                raise ValidationError(
                    f"{name} = {val} outside the sane simulation range [-0.5, 0.5]"
                )


def realized_unitary(
    schedule: PulseSchedule,
    err: ErrorModel = ErrorModel(),
    steps: Optional[Sequence[int]] = None,
    dt: Optional[float] = None,
) -> np.ndarray:
    """Two-level propagator of the schedule under the coherent-error model.

    Midpoint-sampled piecewise exponentials in closed su(2) form; step counts
    default to the schedule policy (4000 split by duration, refined where the
    latitude detuning is fast).
    """
    u = _realized_batch(schedule, np.array([err.epsilon]), np.array([err.delta]), steps, dt)
    return u[0]


def _realized_batch(schedule, epsilons, deltas, steps=None, dt=None):
    """Propagators for paired error arrays; returns (len(epsilons), 2, 2)."""
    if steps is None:
        steps = schedule.steps_for_dt(dt) if dt is not None else schedule.default_steps()
    c = schedule.sample_controls(steps)
    scale = schedule.omega_peak
    drive = 0.5 * c.omega * c.dt  # (N,)
    ax = np.outer(1.0 + epsilons, drive * np.cos(c.phi))
    ay = np.outer(1.0 + epsilons, drive * np.sin(c.phi))
    az = -0.5 * (c.delta[None, :] + deltas[:, None] * scale) * c.dt[None, :]
    return ordered_product(su2_rotation(ax, ay, az))


def gate_fidelity(u_ideal, u_real) -> float:
    """Global-phase-insensitive trace fidelity |Tr(U_ideal^+ U_real)| / dim."""
    a = np.asarray(u_ideal, dtype=complex)
    b = np.asarray(u_real, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.trace(a.conj().T @ b)) / a.shape[0])


def _trace_fidelity_batch(target, mats):
    """|Tr(target^+ U)| / dim for a (..., d, d) stack."""
    return np.abs(np.einsum("ij,...ij->...", target.conj(), mats)) / target.shape[0]


# ---------------------------------------------------------------------------
# Robustness sweeps
# ---------------------------------------------------------------------------


def default_lambda_grid(step_over_pi: float = 0.01, lo: float = 0.10, hi: float = 1.00):
    """Path-parameter grid in rad, excluding the singular 0.5*pi point."""
    n = int(round((hi - lo) / step_over_pi))
    vals = np.round(lo + step_over_pi * np.arange(n + 1), 10)
    return PI * vals[np.abs(vals - 0.5) > 1e-9]


def default_error_grid(span: float = 0.1, step: float = 0.005):
    n = int(round(2 * span / step))
    return np.round(-span + step * np.arange(n + 1), 12)


@dataclass(frozen=True)
class RobustnessSweep:
    """Fidelity tensors over (Lambda, epsilon) and (Lambda, delta) grids.

    The drive-amplitude sweep holds delta = 0 and the detuning sweep holds
    epsilon = 0, matching how the two local errors are scanned separately.
    For the dynamical family the rows are Lambda-independent by construction.
    """

    gate: str
    family: str
    lambdas: np.ndarray  # rad
    epsilons: np.ndarray
    deltas: np.ndarray
    f_sigma_x: np.ndarray  # (L, E)
    f_sigma_z: np.ndarray  # (L, D)

    def rows(self):
        """Deduplicated CSV rows (gate, family, Lambda/pi, eps, delta, F),
        lexicographically ordered."""
        out = {}
        for i, lam in enumerate(self.lambdas):
            lam_pi = lam / PI
            for j, e in enumerate(self.epsilons):
                out[(self.gate, self.family, lam_pi, float(e), 0.0)] = self.f_sigma_x[i, j]
            for j, d in enumerate(self.deltas):
                out[(self.gate, self.family, lam_pi, 0.0, float(d))] = self.f_sigma_z[i, j]
        return [key + (val,) for key, val in sorted(out.items())]


def _family_schedule(gate, family, Lambda, omega0, shape):
    if family == "dynamical":
        return dynamical_schedule(dynamical_gate_spec(gate), omega0, shape), dynamical_gate(
            dynamical_gate_spec(gate)
        )
    config = "A" if family == "geometric_A" else "B"
    spec = gate_path_spec(gate, Lambda, config)
    return synthesize_schedule(spec, omega0, shape), target_unitary(spec).unitary


def robustness_sweep(
    gate: str,
    family: str,
    lambda_grid: Optional[np.ndarray] = None,
    epsilon_grid: Optional[np.ndarray] = None,
    delta_grid: Optional[np.ndarray] = None,
    shape: str = "sin2",
    base_steps: int = 1600,
) -> RobustnessSweep:
    """Decoherence-free two-level fidelity sweep for one gate family."""
    if family not in FAMILIES:
        raise ValidationError(f"family must be one of {FAMILIES}, got {family!r}")
    lambdas = np.atleast_1d(
        default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    )
    epsilons = np.atleast_1d(
        default_error_grid() if epsilon_grid is None else np.asarray(epsilon_grid, dtype=float)
    )
    deltas = np.atleast_1d(
        default_error_grid() if delta_grid is None else np.asarray(delta_grid, dtype=float)
    )
    if lambdas.size == 0 or epsilons.size == 0 or deltas.size == 0:
        raise ValidationError("sweep grids must be nonempty")

    zeros_e = np.zeros_like(epsilons)
    zeros_d = np.zeros_like(deltas)
    if family == "dynamical":
        sched, target = _family_schedule(gate, family, None, 1.0, shape)
        steps = sched.default_steps(base=base_steps)
        row_x = _trace_fidelity_batch(target, _realized_batch(sched, epsilons, zeros_e, steps))
        row_z = _trace_fidelity_batch(target, _realized_batch(sched, zeros_d, deltas, steps))
        f_x = np.tile(row_x, (lambdas.size, 1))
        f_z = np.tile(row_z, (lambdas.size, 1))
    else:
        f_x = np.empty((lambdas.size, epsilons.size))
        f_z = np.empty((lambdas.size, deltas.size))
        for i, lam in enumerate(lambdas):
            sched, target = _family_schedule(gate, family, lam, 1.0, shape)
            steps = sched.default_steps(base=base_steps)
            f_x[i] = _trace_fidelity_batch(target, _realized_batch(sched, epsilons, zeros_e, steps))
            f_z[i] = _trace_fidelity_batch(target, _realized_batch(sched, zeros_d, deltas, steps))
    return RobustnessSweep(
        gate=gate,
        family=family,
        lambdas=lambdas,
        epsilons=epsilons,
        deltas=deltas,
        f_sigma_x=f_x,
        f_sigma_z=f_z,
    )


def advantage_range(
    gate: str,
    family: str,
    error_type: str,
    lambda_grid: Optional[np.ndarray] = None,
    error_grid: Optional[np.ndarray] = None,
    shape: str = "sin2",
    base_steps: int = 1600,
    tol: float = 1e-9,
):
    """Maximal Lambda intervals (in units of pi) where the geometric gate
    dominates its dynamical counterpart for every error on the grid.

    Dominance is the worst case over the error grid:
    ``min_err (F_geometric - F_dynamical) >= 0``.  Endpoints are grid values;
    adjacent grid points bracket the true boundaries.
    """
    if error_type not in ("sigma_x", "sigma_z"):
        raise ValidationError(f"error_type must be sigma_x or sigma_z, got {error_type!r}")
    if family == "dynamical":
        raise ValidationError("advantage_range compares a geometric family to dynamical")
    lambdas = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, float)
    errs = default_error_grid() if error_grid is None else np.asarray(error_grid, float)
    if error_type == "sigma_x":
        geo = robustness_sweep(gate, family, lambdas, errs, np.array([0.0]), shape, base_steps)
        dyn = robustness_sweep(gate, "dynamical", lambdas[:1], errs, np.array([0.0]), shape, base_steps)
        margin = geo.f_sigma_x - dyn.f_sigma_x[0][None, :]
    else:
        geo = robustness_sweep(gate, family, lambdas, np.array([0.0]), errs, shape, base_steps)
        dyn = robustness_sweep(gate, "dynamical", lambdas[:1], np.array([0.0]), errs, shape, base_steps)
        margin = geo.f_sigma_z - dyn.f_sigma_z[0][None, :]
    dominant = margin.min(axis=1) >= -tol
    intervals = []
    start = None
    for i, ok in enumerate(dominant):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            intervals.append((lambdas[start] / PI, lambdas[i - 1] / PI))
            start = None
    if start is not None:
        intervals.append((lambdas[start] / PI, lambdas[-1] / PI))
    return intervals


# ---------------------------------------------------------------------------
# Pulse-area comparison (gate-time proxy)
# ---------------------------------------------------------------------------


def area_comparison(gate: str, lambda_grid: np.ndarray, configuration: str = "A"):
    """(geometric area, dynamical area) over the grid, closed form."""
    dyn = dynamical_gate_spec(gate).total_area
    geo = np.array(
        [geometric_area(gate_path_spec(gate, lam, configuration)) for lam in lambda_grid]
    )
    return geo, np.full_like(geo, dyn)


def area_advantage_interval(gate: str, step_over_pi: float = 0.01, configuration: str = "A"):
    """Maximal Lambda/pi intervals where the geometric pulse area is below the
    dynamical composite's area."""
    grid = default_lambda_grid(step_over_pi, lo=0.02, hi=1.00)
    geo, dyn = area_comparison(gate, grid, configuration)
    below = geo < dyn
    intervals, start = [], None
    for i, ok in enumerate(below):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            intervals.append((grid[start] / PI, grid[i - 1] / PI))
            start = None
    if start is not None:
        intervals.append((grid[start] / PI, grid[-1] / PI))
    return intervals
