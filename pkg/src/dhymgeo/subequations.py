"""Dirichlet sets for the two angle operators.

Four families are supported, all purely second order and parametrized by
a branch constant c and a Hermitian twist matrix L:

    spatial         theta(+L + A)  >=  c
    spatial dual    theta(-L + A)  >= -c
    spacetime       phi~(+L0 + A)  >=  c      (L0 = diag(0) (+) L)
    spacetime dual  phi~(-L0 + A)  >= -c

where phi~ is the upper semicontinuous lifted space-time angle.  Duality
swaps a family with its dual row and is involutive.  Every set is closed
under adding positive semidefinite matrices, which is also what makes
the strictness margin computable by bisection along A - t*Id: if
A - t*Id is still a member then every Frobenius perturbation of size t
keeps membership, so t certifies the distance to the complement.

The fuzzers are deterministic given (trials, seed) and shard their
trials into fixed-size blocks with per-shard child seeds, so a thread
pool changes wall time but never results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .angles import (
    EPS_SINGULAR,
    phi_lifted_lsc_batch,
    phi_lifted_usc,
    phi_lifted_usc_batch,
    theta,
    theta_batch,
)
from .linalg import check_hermitian

SPATIAL = "spatial"
SPACETIME = "spacetime"

_SHARD = 2000
_SCALES = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class Branch:
    """Branch constant c (radians) for spatial complex dimension n."""

    c: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spatial dimension must be >= 1")

    @property
    def spatial_ok(self):
        return abs(self.c) < self.n * math.pi / 2

    @property
    def in_convexity_regime(self):
        return (self.n - 1) * math.pi / 2 < self.c < self.n * math.pi / 2

    def require_regime(self):
        if not self.in_convexity_regime:
            lo, hi = (self.n - 1) * math.pi / 2, self.n * math.pi / 2
            raise ValueError(
                f"branch c={self.c:.6g} outside the convexity regime "
                f"({lo:.6g}, {hi:.6g}) for n={self.n}"
            )


@dataclass(frozen=True)
class SubeqSpec:
    """One of the four angle Dirichlet sets."""

    space: str
    branch: Branch
    twist: np.ndarray | None = None
    dual: bool = False

    def __post_init__(self):
        if self.space not in (SPATIAL, SPACETIME):
            raise ValueError(f"unknown space {self.space!r}")
        if self.twist is not None:
            T = check_hermitian(self.twist, name="twist")
            if T.shape[0] != self.branch.n:
                raise ValueError("twist dimension must equal the spatial dimension n")
            object.__setattr__(self, "twist", T)

    @property
    def kind(self):
        return self.space + ("-dual" if self.dual else "")

    @property
    def matrix_dim(self):
        return self.branch.n + (1 if self.space == SPACETIME else 0)

    @property
    def threshold(self):
        return -self.branch.c if self.dual else self.branch.c


def _twisted(spec, A):
    A = check_hermitian(A, name="A")
    m = spec.matrix_dim
    if A.shape[0] != m:
        raise ValueError(f"expected a {m}x{m} matrix for {spec.kind}, got {A.shape[0]}")
    T = spec.twist
    if T is None:
        return A
    sign = -1.0 if spec.dual else 1.0
    X = A.astype(complex).copy()
    if spec.space == SPATIAL:
        X += sign * T
    else:
        X[1:, 1:] += sign * T
    return X


def member_angle(spec, A, eps=EPS_SINGULAR):
    """The angle value compared against spec.threshold by ``member``."""
    X = _twisted(spec, A)
    if spec.space == SPATIAL:
        return theta(X)
    return phi_lifted_usc(X, eps).value


def member(spec, A, eps=EPS_SINGULAR):
    return member_angle(spec, A, eps) >= spec.threshold


def dual_of(spec):
    """The Dirichlet dual; involutive."""
    return replace(spec, dual=not spec.dual)


def strict_margin(spec, A, bisect_tol=1e-10, eps=EPS_SINGULAR):
    """Certified lower bound on dist(A, complement), or None for non-members.

    Bisects along A - t*Id; the returned t has member(A - t*Id) verified,
    and positivity of the set under psd additions turns that into a
    Frobenius-ball certificate of the same radius.
    """
    A = check_hermitian(A, name="A")
    if not member(spec, A, eps):
        return None
    eye = np.eye(A.shape[0])
    lo, hi = 0.0, 1.0
    while member(spec, A - hi * eye, eps):
        lo = hi
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("strict_margin bracket failed to close")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if member(spec, A - mid * eye, eps):
            lo = mid
        else:
            hi = mid
    return lo


# Deterministic sampling and the fuzz harness.


@dataclass
class FuzzReport:
    suite: str
    trials: int
    violations: int
    worst: float
    seed: int
    details: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)


def sample_hermitian(rng, dim, count, scales=_SCALES):
    """(count, dim, dim) Hermitian draws with a scale-mixture spread."""
    s = np.asarray(scales)[rng.integers(0, len(scales), size=count)]
    G = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal(
        (count, dim, dim)
    )
    H = 0.5 * (G + np.conj(np.swapaxes(G, -2, -1)))
    return H * s[:, None, None]


def sample_psd(rng, dim, count, scales=(0.1, 1.0)):
    """Random positive semidefinite matrices from squared Gaussian factors."""
    s = np.asarray(scales)[rng.integers(0, len(scales), size=count)]
    F = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal(
        (count, dim, dim)
    )
    P = F @ np.conj(np.swapaxes(F, -2, -1)) / dim
    return P * s[:, None, None]


def _shard_seeds(seed, n_shards):
    return np.random.SeedSequence(seed).spawn(n_shards)


def _run_shards(worker, trials, seed, threads=None):
    n_shards = max(1, math.ceil(trials / _SHARD))
    seeds = _shard_seeds(seed, n_shards)
    sizes = [min(_SHARD, trials - i * _SHARD) for i in range(n_shards)]
    jobs = list(zip(seeds, sizes))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: worker(*job), jobs))
    else:
        results = [worker(*job) for job in jobs]
    return results


def _convexity_candidates(rng, c, m, count):
    """Scale-mixture Hermitian proposals aimed at the superlevel set of c.

    Three flavors: raw scale-mixture draws, draws recentered at
    tan(c/m) * Id (whose angle sits near c), and near-singular-set draws
    with a recentered spatial block and a damped first row and column.
    The convexity check only needs members, so widening the proposal
    never weakens the property; it just keeps acceptance healthy for
    branches close to the top of the range.
    """
    A = sample_hermitian(rng, m, count)
    flavor = rng.integers(0, 5, size=count)
    shift = math.tan(c / m)
    u = rng.uniform(0.6, 1.8, size=count)
    centered = flavor >= 2
    A[centered] += (shift * u[centered])[:, None, None] * np.eye(m)
    near_s = flavor == 4
    if np.any(near_s):
        damp = np.asarray((1e-3, 1e-1))[rng.integers(0, 2, size=int(np.sum(near_s)))]
        A[near_s, 0, :] *= damp[:, None]
        A[near_s, :, 0] *= damp[:, None]
        # recenter the corner so the damped row stays consistent
        A[near_s, 0, 0] = damp * rng.standard_normal(damp.shape)
    return A


def _sample_members_spacetime(rng, c, m, count, eps, max_rounds=200):
    """Rejection-sample ``count`` space-time matrices with usc angle >= c."""
    out = []
    got = 0
    drawn = 0
    for _ in range(max_rounds):
        chunk = max(4 * (count - got), 512)
        A = _convexity_candidates(rng, c, m, chunk)
        vals, _ = phi_lifted_usc_batch(A, eps)
        keep = A[vals >= c]
        drawn += chunk
        if keep.shape[0]:
            out.append(keep[: count - got])
            got += min(keep.shape[0], count - got)
        if got >= count:
            return np.concatenate(out, axis=0), drawn
        if drawn > 20000 and got / drawn < 1e-3:
            break
    raise RuntimeError(
        f"sampling starvation: acceptance rate below 0.1% for c={c:.6g}, dim={m}"
    )


def convexity_fuzz(
    branch,
    trials,
    seed,
    gap_tol=1e-8,
    eps=EPS_SINGULAR,
    allow_out_of_regime=False,
    threads=None,
):
    """Segment-sample the superlevel set {phi~ >= c} and count convexity violations.

    Draws member pairs (A0, A1), a uniform t in (0,1), and checks
    phi~((1-t)A0 + t A1) >= c - gap_tol.  Inside the regime
    (n-1)pi/2 < c < n pi/2 the expected violation count is zero; outside
    it (negative control) violations are expected to appear.
    """
    if not allow_out_of_regime:
        branch.require_regime()
    m = branch.n + 1
    c = branch.c

    def worker(seedseq, size):
        rng = np.random.default_rng(seedseq)
        members, drawn = _sample_members_spacetime(rng, c, m, 2 * size, eps)
        A0, A1 = members[:size], members[size : 2 * size]
        t = rng.uniform(0.0, 1.0, size=size)
        mid = (1.0 - t)[:, None, None] * A0 + t[:, None, None] * A1
        vals, _ = phi_lifted_usc_batch(mid, eps)
        gaps = vals - c
        bad = gaps < -gap_tol
        wit = [
            (A0[i], A1[i], float(t[i]), float(gaps[i]))
            for i in np.nonzero(bad)[0][:2]
        ]
        return int(np.sum(bad)), float(np.min(gaps)), 2 * size, drawn, wit

    results = _run_shards(worker, trials, seed, threads)
    violations = sum(r[0] for r in results)
    worst = min(r[1] for r in results)
    accepted = sum(r[2] for r in results)
    drawn = sum(r[3] for r in results)
    witnesses = [w for r in results for w in r[4]][:4]
    return FuzzReport(
        suite="convexity",
        trials=trials,
        violations=violations,
        worst=worst,
        seed=seed,
        details={
            "c": c,
            "n": branch.n,
            "gap_tol": gap_tol,
            "acceptance_rate": accepted / max(drawn, 1),
        },
        witnesses=witnesses,
    )


def positivity_fuzz(spec, trials, seed, tol=1e-10, eps=EPS_SINGULAR, threads=None):
    """Check monotonicity of the defining angle under psd additions.

    Each trial draws Hermitian A and psd P and requires both
    angle(A + P) >= angle(A) - tol and the membership implication.
    """
    m = spec.matrix_dim
    sign = -1.0 if spec.dual else 1.0

    def angle_values(X):
        if spec.twist is not None:
            X = X.copy()
            if spec.space == SPATIAL:
                X += sign * spec.twist
            else:
                X[:, 1:, 1:] += sign * spec.twist
        if spec.space == SPATIAL:
            return theta_batch(X)
        vals, _ = phi_lifted_usc_batch(X, eps)
        return vals

    def worker(seedseq, size):
        rng = np.random.default_rng(seedseq)
        A = sample_hermitian(rng, m, size)
        P = sample_psd(rng, m, size)
        va = angle_values(A)
        vap = angle_values(A + P)
        drop = vap - va
        bad = drop < -tol
        member_broken = (va >= spec.threshold) & (vap < spec.threshold - tol)
        wit = [(A[i], P[i], float(drop[i])) for i in np.nonzero(bad)[0][:2]]
        return int(np.sum(bad | member_broken)), float(np.min(drop)), wit

    results = _run_shards(worker, trials, seed, threads)
    return FuzzReport(
        suite="positivity",
        trials=trials,
        violations=sum(r[0] for r in results),
        worst=min(r[1] for r in results),
        seed=seed,
        details={"kind": spec.kind, "c": spec.branch.c, "n": spec.branch.n, "tol": tol},
        witnesses=[w for r in results for w in r[2]][:4],
    )


def duality_fuzz(n, trials, seed, tol=1e-9, forced_singular=100, eps=EPS_SINGULAR, threads=None):
    """Check phi~(-A) = -phi_lower~(A) on random space-time matrices.

    A fixed fraction of the draws has the first row and column zeroed so
    both sides exercise the semicontinuous extension formulas.
    """
    m = n + 1
    frac = forced_singular / max(trials, 1)

    def worker(seedseq, size):
        rng = np.random.default_rng(seedseq)
        A = sample_hermitian(rng, m, size)
        k = int(math.ceil(frac * size))
        if k:
            A[:k, 0, :] = 0.0
            A[:k, :, 0] = 0.0
        usc_neg, _ = phi_lifted_usc_batch(-A, eps)
        lsc, _ = phi_lifted_lsc_batch(A, eps)
        err = np.abs(usc_neg + lsc)
        bad = err > tol
        wit = [(A[i], float(err[i])) for i in np.nonzero(bad)[0][:2]]
        return int(np.sum(bad)), float(np.max(err)), k, wit

    results = _run_shards(worker, trials, seed, threads)
    return FuzzReport(
        suite="duality",
        trials=trials,
        violations=sum(r[0] for r in results),
        worst=max(r[1] for r in results),
        seed=seed,
        details={"n": n, "tol": tol, "forced_singular": sum(r[2] for r in results)},
        witnesses=[w for r in results for w in r[3]][:4],
    )
