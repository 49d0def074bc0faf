"""Finite-volume discretisation of the reduced weighted operator.

The quotient problem -(w u')' = lambda w u with zero-flux ends becomes a
tridiagonal generalised pencil on the uniform profile grid.  Face
weights are node averages, the stiffness row at an interior node is

    (A u)_i = -[w_{i+1/2}(u_{i+1} - u_i) - w_{i-1/2}(u_i - u_{i-1})] / dt^2

with the flux simply dropped beyond the two boundary faces, and the
lumped mass is the node weight, halved in the two end cells.  Applied in
difference form the stiffness annihilates constants exactly, floating
point included, which keeps the zero mode clean.
"""

from dataclasses import dataclass

import numpy as np


class NonpositiveWeight(ValueError):
    """Profile weight is not strictly positive on interior nodes."""


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    n: int
    dt: float
    diag: np.ndarray     # stiffness diagonal, n + 1 entries
    off: np.ndarray      # stiffness sub/superdiagonal, n entries
    mass: np.ndarray     # lumped mass diagonal (node weights, ends halved)
    faces: np.ndarray    # face weights used by the difference-form apply
    endpoints: tuple
    side: str
    fingerprint: str
    L: float


def assemble(profile) -> DiscreteOperator:
    """Build the pencil (A, B) from an orbit-volume profile."""
    w = np.asarray(profile.w, dtype=float)
    n = profile.n
    if w.shape != (n + 1,):
        raise ValueError("profile arrays are inconsistent with its grid size")
    if np.any(w[1:-1] <= 0.0):
        raise NonpositiveWeight("weight must be positive on interior nodes")
    dt = profile.dt
    faces = 0.5 * (w[:-1] + w[1:])
    diag = np.empty(n + 1)
    diag[0] = faces[0] / dt ** 2
    diag[1:-1] = (faces[:-1] + faces[1:]) / dt ** 2
    diag[-1] = faces[-1] / dt ** 2
    off = -faces / dt ** 2
    mass = w.copy()
    mass[0] *= 0.5
    mass[-1] *= 0.5
    for a in (diag, off, mass, faces):
        a.flags.writeable = False
    return DiscreteOperator(n=n, dt=dt, diag=diag, off=off, mass=mass,
                            faces=faces, endpoints=tuple(profile.endpoints),
                            side=profile.side, fingerprint=profile.fingerprint,
                            L=profile.L)


def apply_stiffness(op: DiscreteOperator, u) -> np.ndarray:
    """A @ u in flux-difference form; exact on constant vectors."""
    u = np.asarray(u, dtype=float)
    flux = op.faces * np.diff(u)
    out = np.empty_like(u)
    out[0] = -flux[0]
    out[-1] = flux[-1]
    out[1:-1] = flux[:-1] - flux[1:]
    return out / op.dt ** 2


def mass_quadrature(op: DiscreteOperator) -> np.ndarray:
    """Quadrature weights dt * B for integrals against the profile measure."""
    return op.dt * op.mass


def zero_mean_project(op: DiscreteOperator, u) -> np.ndarray:
    """Remove the B-weighted mean; idempotent up to rounding."""
    u = np.asarray(u, dtype=float)
    return u - (op.mass @ u) / np.sum(op.mass)
