"""Dense complex linear algebra and quantum time evolution for small Hilbert spaces.

Everything here works on plain ``numpy`` arrays of shape ``(d, d)`` with
``d <= 9``.  Frequencies and rates are angular (rad/s) throughout; the
user-facing MHz/kHz conversion (with the 2*pi convention) happens at the CLI
boundary, never here.

The two workhorses are

* :func:`evolve_unitary` -- time-ordered product of per-step propagators
  ``exp(-i H(t_mid) dt)`` (midpoint-sampled, second order in ``dt``), which
  preserves unitarity structurally, and
* :func:`evolve_lindblad` -- the same midpoint scheme applied to the Lindblad
  generator, with the step map applied as a machine-precision truncated Taylor
  series of ``exp(L dt)`` so trace and positivity are preserved up to the
  sampling error.  Trace drift is monitored, never renormalized away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import NumericalFailure, ValidationError

MAX_DIM = 9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Basis ordering convention: index 0 is |0> and sigma_z = |0><0| - |1><1|,
# so the drive term (O/2)[cos(phi) sx + sin(phi) sy] has matrix element
# <0|H|1> = (O/2) e^{-i phi}.


def _as_matrix(mat, name="matrix"):
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] > MAX_DIM:
        raise ValidationError(
            f"{name} dimension {arr.shape[0]} exceeds supported maximum {MAX_DIM}"
        )
    return arr


def hermiticity_defect(mat) -> float:
    """Max-norm of ``H - H``:sup:`+`, zero for an exactly hermitian matrix."""
    arr = np.asarray(mat)
    return float(np.max(np.abs(arr - arr.conj().T)))


def unitarity_defect(mat) -> float:
    """Max-norm of ``U``:sup:`+` ``U - I``."""
    arr = np.asarray(mat)
    return float(np.max(np.abs(arr.conj().T @ arr - np.eye(arr.shape[0]))))


def check_hermitian(mat, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    arr = _as_matrix(mat, name)
    defect = hermiticity_defect(arr)
    if defect > tol:
        raise ValidationError(
            f"{name} is not hermitian: max |H - H^+| = {defect:.3e} > {tol:.1e}"
        )
    return arr


def check_density_matrix(rho, name: str = "rho") -> np.ndarray:
    """Validate hermiticity (1e-10), unit trace (1e-8) and positivity (-1e-8)."""
    arr = _as_matrix(rho, name)
    defect = hermiticity_defect(arr)
    if defect > 1e-10:
        raise ValidationError(f"{name} not hermitian: defect {defect:.3e}")
    trace_err = abs(np.trace(arr) - 1.0)
    if trace_err > 1e-8:
        raise ValidationError(f"{name} trace deviates from 1 by {trace_err:.3e}")
    eigmin = float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T)).min())
    if eigmin < -1e-8:
        raise ValidationError(f"{name} has negative eigenvalue {eigmin:.3e}")
    return arr


@dataclass(frozen=True)
class CollapseChannel:
    """A Lindblad collapse channel: jump operator and its angular rate (rad/s)."""

    operator: np.ndarray
    rate: float

    def __post_init__(self):
        op = _as_matrix(self.operator, "collapse operator")
        object.__setattr__(self, "operator", op)
        if self.rate < 0:
            raise ValidationError(f"collapse rate must be >= 0, got {self.rate}")


def matrix_exp_hermitian(h, t: float) -> np.ndarray:
    """Return ``exp(-i H t)`` for hermitian ``H`` via eigendecomposition.

    Unconditionally stable for the small dimensions used here and exactly
    unitary up to roundoff.  ``t`` is a duration in seconds when ``H`` is in
    rad/s; any consistent pairing works since only the product enters.
    """
    arr = check_hermitian(h, tol=1e-12, name="H")
    w, v = np.linalg.eigh(arr)
    phase = np.exp(-1j * w * t)
    return (v * phase) @ v.conj().T


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product ``mats[..., N-1, :, :] @ ... @ mats[..., 0, :, :]``.

    The product axis is the third from the right; leading axes broadcast as
    independent batches.  Uses pairwise tree reduction: associativity makes
    the result identical to the sequential product up to roundoff, the fixed
    pairing makes it bit-reproducible run to run, and batched matmul keeps it
    fast.
    """
    mats = np.asarray(mats)
    if mats.ndim < 3:
        raise ValidationError("ordered_product expects an (..., N, d, d) stack")
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        half = n // 2
        paired = mats[..., 1 : 2 * half : 2, :, :] @ mats[..., 0 : 2 * half : 2, :, :]
        if n % 2:
            paired = np.concatenate([paired, mats[..., -1:, :, :]], axis=-3)
        mats = paired
    return mats[..., 0, :, :]


def su2_rotation(ax, ay, az) -> np.ndarray:
    """Closed-form ``exp(-i (ax sx + ay sy + az sz))``, broadcast over inputs.

    Inputs are the half-angle Bloch components (already multiplied by dt/2
    where applicable).  Returns shape ``(..., 2, 2)``.
    """
    ax, ay, az = np.broadcast_arrays(ax, ay, az)
    r = np.sqrt(ax * ax + ay * ay + az * az)
    out = np.zeros(r.shape + (2, 2), dtype=complex)
    small = r < 1e-30
    rs = np.where(small, 1.0, r)
    sinc = np.where(small, 1.0, np.sin(rs) / rs)
    c = np.cos(r)
    out[..., 0, 0] = c - 1j * az * sinc
    out[..., 1, 1] = c + 1j * az * sinc
    out[..., 0, 1] = (-1j * ax - ay) * sinc
    out[..., 1, 0] = (-1j * ax + ay) * sinc
    return out


def evolve_unitary(
    hamiltonian: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    dt: float,
) -> np.ndarray:
    """Propagator of ``i dU/dt = H(t) U`` from ``t0`` to ``t1``.

    Midpoint-sampled piecewise matrix exponential (second-order Magnus): the
    interval is split into ``ceil((t1 - t0)/dt)`` equal steps and each step
    contributes ``exp(-i H(t_mid) h)``.  Unitarity is inherited from the
    hermitian exponential; accuracy is second order in the step size.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if t1 <= t0:
        raise ValidationError(f"need t1 > t0, got [{t0}, {t1}]")
    if dt > (t1 - t0):
        raise ValidationError("dt exceeds the integration interval")
    n_steps = int(math.ceil((t1 - t0) / dt))
    h_step = (t1 - t0) / n_steps
    h0 = check_hermitian(hamiltonian(t0), tol=1e-9, name="H(t0)")
    u = np.eye(h0.shape[0], dtype=complex)
    for k in range(n_steps):
        t_mid = t0 + (k + 0.5) * h_step
        h_mid = check_hermitian(hamiltonian(t_mid), tol=1e-9, name=f"H({t_mid:g})")
        u = matrix_exp_hermitian(h_mid, h_step) @ u
    return u


# ---------------------------------------------------------------------------
# Lindblad evolution
# ---------------------------------------------------------------------------


def lindblad_rhs(h, channels: Sequence[CollapseChannel], rho) -> np.ndarray:
    """d(rho)/dt = -i[H, rho] + (1/2) sum_k kappa_k (2 A rho A+ - A+A rho - rho A+A)."""
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (h @ rho - rho @ h)
    for ch in channels:
        a = ch.operator
        ada = a.conj().T @ a
        out += ch.rate * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
    return out


class _LindbladStepper:
    """Applies ``exp(L dt)`` to a batch of matrices via the vectorized
    Liouvillian and a truncated Taylor series.

    With row-major vectorization, ``vec(A rho B) = kron(A, B^T) vec(rho)``:
    the time-independent jump part ``sum_k kappa_k kron(A_k, conj(A_k))`` is
    prebuilt, the damping is folded into ``H_eff = H - (i/2) sum kappa A^+A``
    and only the two Kronecker products of ``H_eff`` are formed per step.
    ``||L|| dt`` is far below one at the step sizes used here, so a handful
    of Taylor terms reach machine precision and the step map is the exact
    exponential of the sampled generator (completely positive by
    construction); oversized generators are subdivided automatically.
    """

    def __init__(self, channels: Sequence[CollapseChannel], dim: int):
        self.dim = dim
        self.eye = np.eye(dim, dtype=complex)
        self.damping = np.zeros((dim, dim), dtype=complex)
        self.jump_mat = None
        active = [ch for ch in channels if ch.rate > 0]
        if active:
            self.jump_mat = np.zeros((dim * dim, dim * dim), dtype=complex)
            for ch in active:
                a = ch.operator
                self.jump_mat += ch.rate * np.kron(a, a.conj())
                self.damping += 0.5 * ch.rate * (a.conj().T @ a)

    def liouvillian(self, h_mid) -> np.ndarray:
        """Dense (d^2, d^2) generator at one Hamiltonian sample."""
        h_eff = h_mid - 1j * self.damping
        l_mat = -1j * np.kron(h_eff, self.eye) + 1j * np.kron(self.eye, h_eff.conj())
        if self.jump_mat is not None:
            l_mat = l_mat + self.jump_mat
        return l_mat

    def step(self, h_mid, mats, dt, max_terms: int = 40):
        d2 = self.dim * self.dim
        vecs = mats.reshape(-1, d2).T  # (d^2, K)
        l_mat = self.liouvillian(h_mid)
        # subdivide when the generator is large on the step scale (e.g. a
        # huge constant anharmonicity), keeping the Taylor argument small
        gen_scale = float(np.max(np.sum(np.abs(l_mat), axis=1))) * dt
        splits = max(0, math.ceil(math.log2(max(gen_scale, 1e-30) / 0.5)))
        n_sub = 2 ** min(splits, 40)
        h_sub = dt / n_sub
        for _ in range(n_sub):
            term = vecs
            out = vecs.copy()
            scale = np.max(np.abs(vecs)) + 1e-300
            for k in range(1, max_terms + 1):
                term = (h_sub / k) * (l_mat @ term)
                out += term
                if np.max(np.abs(term)) < 1e-16 * scale:
                    break
            else:
                raise NumericalFailure(
                    "Lindblad step Taylor series did not converge; reduce dt"
                )
            vecs = out
        return vecs.T.reshape(mats.shape)


def lindblad_propagate_batch(
    sample_hamiltonian: Callable[[np.ndarray], np.ndarray],
    channels: Sequence[CollapseChannel],
    mats: np.ndarray,
    t0: float,
    t1: float,
    n_steps: int,
    chunk: int = 4096,
) -> np.ndarray:
    """Propagate a stack of matrices through the Lindblad map on ``[t0, t1]``.

    ``sample_hamiltonian`` must map an array of times to an ``(n, d, d)``
    stack of hermitian matrices; it is called on midpoint times in chunks so
    memory stays bounded for fine steps.  The stack ``mats`` need not contain
    density matrices -- the map is linear, and evolving the computational
    dyads of a process in one batch is the intended use.
    """
    mats = np.array(mats, dtype=complex)
    single = mats.ndim == 2
    if single:
        mats = mats[None]
    dim = mats.shape[-1]
    stepper = _LindbladStepper(channels, dim)
    dt = (t1 - t0) / n_steps
    done = 0
    while done < n_steps:
        count = min(chunk, n_steps - done)
        t_mid = t0 + (done + 0.5 + np.arange(count)) * dt
        h_stack = np.asarray(sample_hamiltonian(t_mid), dtype=complex)
        for j in range(count):
            mats = stepper.step(h_stack[j], mats, dt)
        done += count
    return mats[0] if single else mats


def evolve_lindblad(
    hamiltonian: Callable[[float], np.ndarray],
    channels: Sequence[CollapseChannel],
    rho0,
    t0: float,
    t1: float,
    dt: float,
    trace_tol: float = 1e-6,
) -> np.ndarray:
    """Integrate the Lindblad master equation for one density matrix.

    Midpoint-sampled Liouvillian with the Taylor step map of
    :class:`_LindbladStepper`.  The trace is monitored every step; drift
    beyond ``trace_tol`` raises :class:`NumericalFailure` rather than being
    renormalized away, since drift is a step-size error signal.
    """
    rho = check_density_matrix(rho0, "rho0")
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if t1 <= t0:
        raise ValidationError(f"need t1 > t0, got [{t0}, {t1}]")
    n_steps = int(math.ceil((t1 - t0) / dt))
    h_step = (t1 - t0) / n_steps
    stepper = _LindbladStepper(channels, rho.shape[0])
    for k in range(n_steps):
        t_mid = t0 + (k + 0.5) * h_step
        h_mid = check_hermitian(hamiltonian(t_mid), tol=1e-9, name=f"H({t_mid:g})")
        rho = stepper.step(h_mid, rho[None], h_step)[0]
        drift = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
        if drift > trace_tol:
            raise NumericalFailure(
                f"density-matrix trace drifted by {drift:.3e} at t = {t_mid:g}; "
                "reduce dt"
            )
    return rho


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------


def bessel_j1(beta: float) -> float:
    """First-kind Bessel function J1, the first-harmonic weight of a
    frequency-modulated drive.

    Delegates to scipy's Cephes implementation (absolute error well below
    1e-10 on the supported domain |beta| <= 20).
    """
    if abs(beta) > 20:
        raise ValidationError(f"|beta| must be <= 20, got {beta}")
    return float(special.j1(beta))
