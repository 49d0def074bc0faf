"""Catalog of star-diagrams: one total space carrying two commuting free
group actions and both quotient projections.

Conventions used everywhere downstream: proj_bullet is the quotient map
of the bullet action (its image is called M) and proj_star the quotient
map of the star action (image M').  Because the actions commute, star
descends to M and bullet descends to M'; those residual actions are what
the isotropy and transport verifiers exercise.

Catalog identifiers are stable strings:

* "trivial-s2"  P = S2 x S1 with a rotate-and-translate pair of circle
                actions; both quotients are the round 2-sphere.
* "hopf"        P = unit quaternions with the left and right circle
                multiplications; quotients are 2-spheres reached by the
                two conjugation maps p -> p i conj(p) and p -> conj(p) i p.
* "gm"          P = Sp(2) with the Gromoll-Meyer pair of S3 actions;
                proj_bullet is the first matrix column (a point of S7),
                proj_star picks a canonical representative of the star
                orbit.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .algebra import (
    TWO_PI,
    GroupElement,
    Quaternion,
    QUAT_ONE,
    circle_quat,
    identity,
    quat_mul,
    random_element,
    sp2_membership_defect,
)

FIXED_POINT_TOL = 1e-9


class UnknownId(LookupError):
    """Identifier not present in the catalog."""


class NotInvariant(ValueError):
    """Function failed the sampled invariance check."""


class IllDefined(ValueError):
    """Two preimages of the same quotient point gave different values."""


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    group: str
    cohomogeneity_one: bool


@dataclass(frozen=True)
class StarDiagram:
    """A total space with two commuting free actions, fully wired.

    All callables are pure.  Sections are right inverses of the matching
    projection and are used to lift quotient points; each one covers the
    whole base with a two-chart fallback where a single formula would be
    singular.
    """

    entry: CatalogEntry
    bullet_action: Callable
    star_action: Callable
    proj_bullet: Callable
    proj_star: Callable
    residual_star: Callable    # star action pushed down to M
    residual_bullet: Callable  # bullet action pushed down to M'
    section_bullet: Callable   # M -> P
    section_star: Callable     # M' -> P
    random_point: Callable
    point_distance: Callable
    dist_m: Callable
    dist_mprime: Callable
    membership: Callable

    @property
    def id(self):
        return self.entry.id

    @property
    def group(self):
        return self.entry.group

    @property
    def cohomogeneity_one(self):
        return self.entry.cohomogeneity_one


# ---------------------------------------------------------------------------
# shared small helpers


def _rot_z(theta, x):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]])


def _pure(v):
    return Quaternion(0.0, float(v[0]), float(v[1]), float(v[2]))


def _imag_vec(q):
    return np.array([q.x, q.y, q.z])


def _conj3(q, v):
    # v -> q V conj(q) on pure-imaginary quaternions, as 3-vectors
    return _imag_vec(quat_mul(quat_mul(q, _pure(v)), q.conj()))


def _vec_dist(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


# ---------------------------------------------------------------------------
# trivial product entry: P = S2 x S1


def _triv_bullet(g, p):
    x, phi = p
    return (x, (phi - g.data) % TWO_PI)


def _triv_star(g, p):
    x, phi = p
    return (_rot_z(g.data, x), (g.data + phi) % TWO_PI)


def _triv_proj_bullet(p):
    return p[0]


def _triv_proj_star(p):
    x, phi = p
    return _rot_z(-phi, x)


def _triv_point_dist(p, q):
    dx = _vec_dist(p[0], q[0])
    dphi = math.hypot(math.cos(p[1]) - math.cos(q[1]),
                      math.sin(p[1]) - math.sin(q[1]))
    return math.hypot(dx, dphi)


def _triv_random(rng):
    x = rng.standard_normal(3)
    x /= np.linalg.norm(x)
    return (x, float(rng.uniform(0.0, TWO_PI)))


def _triv_membership(p):
    return abs(float(np.linalg.norm(p[0])) - 1.0)


# ---------------------------------------------------------------------------
# hopf entry: P = unit quaternions


def _hopf_bullet(g, p):
    return quat_mul(p, circle_quat(-g.data))


def _hopf_star(g, p):
    return quat_mul(circle_quat(g.data), p)


def _hopf_proj_bullet(p):
    return _imag_vec(quat_mul(quat_mul(p, Quaternion(0, 1, 0, 0)), p.conj()))


def _hopf_proj_star(p):
    return _imag_vec(quat_mul(quat_mul(p.conj(), Quaternion(0, 1, 0, 0)), p))


def _hopf_residual(g, y):
    # both residual actions are conjugation by the circle element, a
    # rotation by twice the angle about the first axis
    return _conj3(circle_quat(g.data), y)


def _hopf_section_bullet(x):
    # p with p i conj(p) = X; the single-chart formula degenerates at
    # x = (-1, 0, 0), so switch charts on the lower cap
    X = _pure(x)
    if x[0] > -0.5:
        return (Quaternion(1.0) - quat_mul(X, Quaternion(0, 1, 0, 0))).normalized()
    s = (Quaternion(1.0) + quat_mul(X, Quaternion(0, 1, 0, 0))).normalized()
    return quat_mul(s, Quaternion(0, 0, 1, 0))


def _hopf_section_star(y):
    Y = _pure(y)
    if y[0] > -0.5:
        return (Quaternion(1.0) - quat_mul(Y, Quaternion(0, 1, 0, 0))).normalized().conj()
    s = (Quaternion(1.0) + quat_mul(Y, Quaternion(0, 1, 0, 0))).normalized().conj()
    return quat_mul(Quaternion(0, 0, 1, 0), s)


def _hopf_random(rng):
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Quaternion.from_array(v)


def _hopf_point_dist(p, q):
    return (p - q).norm()


def _hopf_membership(p):
    return abs(p.norm() - 1.0)


# ---------------------------------------------------------------------------
# Gromoll-Meyer entry: P = Sp(2), stored row-wise ((a, c), (b, d))


def _gm_bullet(g, A):
    qc = g.data.conj()
    (a, c), (b, d) = A
    return ((a, quat_mul(c, qc)), (b, quat_mul(d, qc)))


def _gm_star(g, A):
    q = g.data
    qc = q.conj()
    (a, c), (b, d) = A
    return ((quat_mul(quat_mul(q, a), qc), quat_mul(q, c)),
            (quat_mul(quat_mul(q, b), qc), quat_mul(q, d)))


def _gm_proj_bullet(A):
    (a, _), (b, _) = A
    return (a, b)


def _gm_canon(A):
    # star-invariant representative: rotate the larger second-column
    # entry onto the positive real axis; |c|^2 + |d|^2 = 1 keeps the
    # chosen divisor at least 1/sqrt(2)
    (a, c), (b, d) = A
    if c.norm() >= d.norm():
        q = c.conj() * (1.0 / c.norm())
    else:
        q = d.conj() * (1.0 / d.norm())
    return _gm_star(GroupElement("s3", q), A)


def _gm_residual_star(g, col):
    q = g.data
    qc = q.conj()
    a, b = col
    return (quat_mul(quat_mul(q, a), qc), quat_mul(quat_mul(q, b), qc))


def _gm_residual_bullet(g, Y):
    return _gm_canon(_gm_bullet(g, Y))


def _gm_section_bullet(col):
    # complete a first column (a, b) to a symplectic matrix; two charts
    # cover S7 since max(|a|, |b|) >= 1/sqrt(2)
    a, b = col
    if a.norm() >= b.norm():
        c = quat_mul(quat_mul(a, b.conj()), a.conj()) * (-1.0 / a.norm() ** 2)
        d = a.conj()
    else:
        c = b.conj()
        d = quat_mul(quat_mul(b, a.conj()), b.conj()) * (-1.0 / b.norm() ** 2)
    return ((a, c), (b, d))


def _gm_section_star(Y):
    return Y


def _sp2_dist(A, B):
    (a1, c1), (b1, d1) = A
    (a2, c2), (b2, d2) = B
    return math.sqrt((a1 - a2).norm() ** 2 + (c1 - c2).norm() ** 2
                     + (b1 - b2).norm() ** 2 + (d1 - d2).norm() ** 2)


def _gm_dist_m(p, q):
    return math.sqrt((p[0] - q[0]).norm() ** 2 + (p[1] - q[1]).norm() ** 2)


def _gm_random(rng):
    return random_element("sp2", rng).data


# ---------------------------------------------------------------------------
# catalog


CATALOG_IDS = ("trivial-s2", "hopf", "gm")

_ENTRIES = {
    "trivial-s2": CatalogEntry(
        id="trivial-s2",
        description="product S2 x S1 with rotate-and-translate circle actions",
        group="s1",
        cohomogeneity_one=True,
    ),
    "hopf": CatalogEntry(
        id="hopf",
        description="unit quaternions with left and right circle multiplication",
        group="s1",
        cohomogeneity_one=True,
    ),
    "gm": CatalogEntry(
        id="gm",
        description="Sp(2) with the Gromoll-Meyer pair of S3 actions",
        group="s3",
        cohomogeneity_one=False,
    ),
}


def catalog_entries():
    return tuple(_ENTRIES[i] for i in CATALOG_IDS)


def catalog(id: str) -> StarDiagram:
    """Build the fully wired diagram for a catalog identifier."""
    if id not in _ENTRIES:
        raise UnknownId(f"unknown diagram {id!r}; known: {', '.join(CATALOG_IDS)}")
    e = _ENTRIES[id]
    if id == "trivial-s2":
        return StarDiagram(
            entry=e,
            bullet_action=_triv_bullet,
            star_action=_triv_star,
            proj_bullet=_triv_proj_bullet,
            proj_star=_triv_proj_star,
            residual_star=lambda g, y: _rot_z(g.data, y),
            residual_bullet=lambda g, y: _rot_z(g.data, y),
            section_bullet=lambda x: (np.asarray(x, dtype=float), 0.0),
            section_star=lambda y: (np.asarray(y, dtype=float), 0.0),
            random_point=_triv_random,
            point_distance=_triv_point_dist,
            dist_m=_vec_dist,
            dist_mprime=_vec_dist,
            membership=_triv_membership,
        )
    if id == "hopf":
        return StarDiagram(
            entry=e,
            bullet_action=_hopf_bullet,
            star_action=_hopf_star,
            proj_bullet=_hopf_proj_bullet,
            proj_star=_hopf_proj_star,
            residual_star=_hopf_residual,
            residual_bullet=_hopf_residual,
            section_bullet=_hopf_section_bullet,
            section_star=_hopf_section_star,
            random_point=_hopf_random,
            point_distance=_hopf_point_dist,
            dist_m=_vec_dist,
            dist_mprime=_vec_dist,
            membership=_hopf_membership,
        )
    return StarDiagram(
        entry=e,
        bullet_action=_gm_bullet,
        star_action=_gm_star,
        proj_bullet=_gm_proj_bullet,
        proj_star=_gm_canon,
        residual_star=_gm_residual_star,
        residual_bullet=_gm_residual_bullet,
        section_bullet=_gm_section_bullet,
        section_star=_gm_section_star,
        random_point=_gm_random,
        point_distance=_sp2_dist,
        dist_m=_gm_dist_m,
        dist_mprime=_sp2_dist,
        membership=sp2_membership_defect,
    )


def swap(d: StarDiagram) -> StarDiagram:
    """The same diagram with the roles of the two actions exchanged."""
    return replace(
        d,
        bullet_action=d.star_action,
        star_action=d.bullet_action,
        proj_bullet=d.proj_star,
        proj_star=d.proj_bullet,
        residual_star=d.residual_bullet,
        residual_bullet=d.residual_star,
        section_bullet=d.section_star,
        section_star=d.section_bullet,
        dist_m=d.dist_mprime,
        dist_mprime=d.dist_m,
    )


# ---------------------------------------------------------------------------
# verifiers


def check_commute(d: StarDiagram, samples: int, rng=None) -> float:
    """Max distance between the two composition orders on random samples.

    Floating-point angle addition is not associative, so even the product
    entry returns a residual at rounding level rather than an exact zero.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(samples):
        g = random_element(d.group, rng)
        h = random_element(d.group, rng)
        p = d.random_point(rng)
        a = d.star_action(g, d.bullet_action(h, p))
        b = d.bullet_action(h, d.star_action(g, p))
        worst = max(worst, d.point_distance(a, b))
    return worst


def group_net(group: str, grid: int):
    """Deterministic net over the group, identity first.

    The circle net is the uniform angle grid.  The S3 net is a lattice in
    Hopf coordinates q = (cos(eta) e^{i xi1}, sin(eta) e^{i xi2} j) that
    contains the identity, the antipode -1, and the circle subgroup
    through the identity (the eta = 0 ring), which is what the isotropy
    dimension patterns key on.
    """
    if grid < 2:
        raise ValueError("net grid must be >= 2")
    if group == "s1":
        return [GroupElement("s1", TWO_PI * k / grid) for k in range(grid)]
    if group == "s3":
        nodes = []
        etas = np.linspace(0.0, math.pi / 2.0, grid // 4 + 2)
        angles = TWO_PI * np.arange(grid) / grid
        for ei, eta in enumerate(etas):
            ce, se = math.cos(eta), math.sin(eta)
            xi1s = angles if ei < len(etas) - 1 else angles[:1]
            xi2s = angles if 0 < ei else angles[:1]
            for x1 in xi1s:
                for x2 in xi2s:
                    nodes.append(GroupElement("s3", Quaternion(
                        ce * math.cos(x1), ce * math.sin(x1),
                        se * math.cos(x2), se * math.sin(x2))))
        return nodes
    raise ValueError(f"no net for group {group!r}")


def _probe(action, dist, p, net, tol):
    return [g for g in net if dist(action(g, p), p) <= tol]


def isotropy_probe(d: StarDiagram, which: str, p, grid: int = 16,
                   tol: float = FIXED_POINT_TOL):
    """Net elements whose action moves p by at most tol.

    For a free action this returns only the identity node.
    """
    if which == "bullet":
        action = d.bullet_action
    elif which == "star":
        action = d.star_action
    else:
        raise ValueError("which must be 'bullet' or 'star'")
    return _probe(action, d.point_distance, p, group_net(d.group, grid), tol)


def _pattern_dim(group, grid, hits, total):
    # match the hit count against the 0/1/3-dimensional subgroup patterns
    # the catalog groups can produce
    if hits >= 0.9 * total:
        return 3 if group == "s3" else 1
    if group == "s3" and hits >= max(4, grid // 2):
        return 1
    return 0


def isotropy_compare(d: StarDiagram, p, grid: int = 16,
                     tol: float = FIXED_POINT_TOL):
    """Estimated isotropy dimensions of the two residual actions at the
    projections of p.  The two numbers agree for every diagram point."""
    net = group_net(d.group, grid)
    m_hits = len(_probe(d.residual_star, d.dist_m, d.proj_bullet(p), net, tol))
    mp_hits = len(_probe(d.residual_bullet, d.dist_mprime, d.proj_star(p), net, tol))
    return (_pattern_dim(d.group, grid, m_hits, len(net)),
            _pattern_dim(d.group, grid, mp_hits, len(net)))


# ---------------------------------------------------------------------------
# invariant-function transport


def transport_invariant(d: StarDiagram, f, samples: int = 64, rng=None,
                        tol: float = FIXED_POINT_TOL):
    """Carry an invariant function on M over to M'.

    The result evaluates f at the bullet projection of a star-section
    lift, so sums and products transport to sums and products through
    the very same floating evaluations.  Raises NotInvariant when f
    moves under the residual star action on sampled points, IllDefined
    when different preimages of a sampled M'-point disagree.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    pts = [d.random_point(rng) for _ in range(samples)]
    vals = [float(f(d.proj_bullet(p))) for p in pts]
    scale = max(1.0, max(abs(v) for v in vals))
    for p, v in zip(pts, vals):
        g = random_element(d.group, rng)
        moved = float(f(d.residual_star(g, d.proj_bullet(p))))
        if abs(moved - v) > tol * scale:
            raise NotInvariant(
                f"function moved by {abs(moved - v):.3e} under the residual action")
    for _ in range(samples):
        p = d.random_point(rng)
        y = d.proj_star(p)
        q0 = d.section_star(y)
        g = random_element(d.group, rng)
        routes = (float(f(d.proj_bullet(q0))),
                  float(f(d.proj_bullet(d.star_action(g, q0)))),
                  float(f(d.proj_bullet(p))))
        if max(routes) - min(routes) > tol * scale:
            raise IllDefined(
                f"preimage routes disagree by {max(routes) - min(routes):.3e}")

    def transported(y):
        return f(d.proj_bullet(d.section_star(y)))

    return transported
