"""Lagrangian angle operators for spatial and space-time Hermitian data.

The spatial angle of a Hermitian matrix H is

    theta(H) = sum_k arctan(lambda_k),

summed over the (real) eigenvalues, valued in (-n*pi/2, n*pi/2).  For a
real symmetric 2n x 2n matrix the same angle is half the trace of
arg(Id + i*p(A)) with p the J-invariant projection; both evaluation
paths must agree.

Space-time data is carried as an (m x m) Hermitian matrix with the time
coordinate first, m = n + 1.  The degenerate identity I0 = diag(0, 1,
..., 1) replaces the metric in the time direction, and the lifted
space-time angle is

    phi(A) = sum_i arg(mu_i),    mu_i eigenvalues of I0 + i*A,

with principal-value args.  This is well defined because every mu_i has
non-negative real part, and lies in [-m*pi/2, m*pi/2].  On the singular
set S (first row and column of A vanish) the determinant of I0 + i*A is
zero and the angle jumps by pi; the upper/lower semicontinuous
extensions there are +-pi/2 + theta(A+), where A+ drops the first row
and column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import check_hermitian, check_symmetric, hermitian_of, jproject

REGULAR = "regular"
SINGULAR_UPPER = "singular-upper"
SINGULAR_LOWER = "singular-lower"

# Relative half-width of the numerical band around the singular set S.
EPS_SINGULAR = 1e-10

# Below this (relative) eigenvalue modulus of I0 + i*A the principal arg is
# meaningless and the semicontinuous extension takes over.
_TINY_EIG = 1e-14


@dataclass(frozen=True)
class SingularityReport:
    in_S: bool
    a11: float
    a1_norm: float
    threshold: float


@dataclass(frozen=True)
class LiftedAngle:
    value: float
    tag: str

    @property
    def regular(self):
        return self.tag == REGULAR


class DegenerateAngleError(ValueError):
    """An eigenvalue of I0 + i*A sits at the origin; the regular arg is undefined."""


def theta(H):
    """Spatial angle sum(arctan(lambda_k)) of a Hermitian matrix."""
    H = check_hermitian(H)
    return float(np.sum(np.arctan(np.linalg.eigvalsh(H))))


def theta_symmetric(A):
    """Half-trace angle of a real symmetric 2n x 2n matrix via its J-invariant part."""
    A = check_symmetric(A)
    return theta(hermitian_of(jproject(A)))


def modulus_r(H):
    """sqrt(prod(1 + lambda_k^2)); equals |det(I + iH)| and is >= 1."""
    H = check_hermitian(H)
    lam = np.linalg.eigvalsh(H)
    return float(np.sqrt(np.prod(1.0 + lam * lam)))


def spatial_block(A):
    """Drop the time row and column of a space-time matrix."""
    A = np.asarray(A)
    return A[..., 1:, 1:]


def degenerate_identity(m, eta=0.0):
    """diag(eta, 1, ..., 1) of size m."""
    d = np.ones(m)
    d[0] = eta
    return np.diag(d)


def classify_singular(A, eps=EPS_SINGULAR):
    """Membership in the band |a11| <= eps*(1+||A||) and ||a1|| <= eps*(1+||A||)."""
    A = check_hermitian(A, name="A")
    thr = eps * (1.0 + float(np.linalg.norm(A)))
    a11 = abs(float(A[0, 0].real))
    a1_norm = float(np.linalg.norm(A[1:, 0]))
    return SingularityReport(
        in_S=(a11 <= thr and a1_norm <= thr), a11=a11, a1_norm=a1_norm, threshold=thr
    )


def _spacetime_eigs(A, eta=0.0):
    B = degenerate_identity(A.shape[0], eta) + 1j * A
    return np.linalg.eigvals(B)


def phi_regular(A, tol=1e-12):
    """Lifted space-time angle sum(arg(mu_i)) for A outside the singular set.

    Raises ValueError when an eigenvalue of I0 + i*A has real part below
    -tol (impossible for genuine Hermitian input) and DegenerateAngleError
    when one sits at the origin, which only happens on the numerical
    boundary of the singular set.
    """
    A = check_hermitian(A, name="A")
    mu = _spacetime_eigs(A)
    scale = 1.0 + float(np.linalg.norm(A))
    if float(np.min(np.abs(mu))) < _TINY_EIG * scale:
        raise DegenerateAngleError(
            "eigenvalue of I0 + i*A at the origin; use the semicontinuous extension"
        )
    if float(np.min(mu.real)) < -tol * scale:
        raise ValueError(
            f"eigenvalue with negative real part {np.min(mu.real):.3e}: "
            "input is not a valid space-time Hermitian matrix"
        )
    args = np.arctan2(mu.imag, np.maximum(mu.real, 0.0))
    return float(np.sum(args))


def _theta_spatial(block):
    if block.size == 0:
        return 0.0
    return theta(block)


def _lifted(A, eps, sign):
    A = check_hermitian(A, name="A")
    if not classify_singular(A, eps).in_S:
        try:
            return LiftedAngle(phi_regular(A), REGULAR)
        except DegenerateAngleError:
            pass
    tag = SINGULAR_UPPER if sign > 0 else SINGULAR_LOWER
    return LiftedAngle(sign * 0.5 * math.pi + _theta_spatial(spatial_block(A)), tag)


def phi_lifted_usc(A, eps=EPS_SINGULAR):
    """Upper semicontinuous lift: phi(A) off S, +pi/2 + theta(A+) on S."""
    return _lifted(A, eps, +1)


def phi_lifted_lsc(A, eps=EPS_SINGULAR):
    """Lower semicontinuous lift: phi(A) off S, -pi/2 + theta(A+) on S."""
    return _lifted(A, eps, -1)


def eta_squeeze(A, eta):
    """Spatial angle of I^eta A I^eta where I^eta scales the time coordinate by eta.

    For A outside the singular set this converges to phi_regular(A) as
    eta grows; at eta = 1 it is the plain spatial angle of A.
    """
    A = check_hermitian(A, name="A")
    Ieta = degenerate_identity(A.shape[0], eta)
    As = Ieta @ A @ Ieta
    return theta(0.5 * (As + As.conj().T))


def realpart_spectrum_check(A, eta=0.0):
    """min over i of Re(mu_i) for the eigenvalues of diag(eta,1,..,1) + i*A."""
    A = check_hermitian(A, name="A")
    return float(np.min(_spacetime_eigs(A, eta).real))


def slice_angle_gap(A, eps=EPS_SINGULAR):
    """phi_lifted_usc(A) - theta(A+); always within [-pi/2, pi/2]."""
    A = check_hermitian(A, name="A")
    return phi_lifted_usc(A, eps).value - _theta_spatial(spatial_block(A))


# Batched variants over stacks of matrices; these back the fuzz suites and
# acceptance runs, where 1e4..1e5 small eigenproblems per call are routine.


def theta_batch(H):
    """theta over a (..., n, n) stack of Hermitian matrices."""
    H = np.asarray(H, dtype=complex)
    return np.sum(np.arctan(np.linalg.eigvalsh(H)), axis=-1)


def modulus_r_batch(H):
    H = np.asarray(H, dtype=complex)
    lam = np.linalg.eigvalsh(H)
    return np.sqrt(np.prod(1.0 + lam * lam, axis=-1))


def _phi_lifted_batch(A, eps, sign, tol=1e-12):
    A = np.asarray(A, dtype=complex)
    m = A.shape[-1]
    scale = 1.0 + np.linalg.norm(A, axis=(-2, -1))
    thr = eps * scale
    a11 = np.abs(A[..., 0, 0].real)
    a1n = np.linalg.norm(A[..., 1:, 0], axis=-1)
    B = degenerate_identity(m) + 1j * A
    mu = np.linalg.eigvals(B)
    if np.any(mu.real < -tol * scale[..., None]):
        raise ValueError("eigenvalue with negative real part in batch")
    tiny = np.min(np.abs(mu), axis=-1) < _TINY_EIG * scale
    singular = ((a11 <= thr) & (a1n <= thr)) | tiny
    args = np.arctan2(mu.imag, np.maximum(mu.real, 0.0))
    regular_vals = np.sum(args, axis=-1)
    singular_vals = sign * 0.5 * math.pi + theta_batch(A[..., 1:, 1:])
    return np.where(singular, singular_vals, regular_vals), singular


def phi_lifted_usc_batch(A, eps=EPS_SINGULAR):
    """(values, singular_mask) of the usc lift over a stack of space-time matrices."""
    return _phi_lifted_batch(A, eps, +1)


def phi_lifted_lsc_batch(A, eps=EPS_SINGULAR):
    return _phi_lifted_batch(A, eps, -1)
