"""Self-contained eigensolver for the assembled tridiagonal pencils.

The generalised problem A u = lambda B u is symmetrised to a single
tridiagonal matrix C = B^(-1/2) A B^(-1/2).  A collapsing endpoint
carries vanishing weight, so its node is folded into the neighbour
before symmetrising and eigenvectors are expanded back afterwards
(constant extension, matching the zero-flux end).  Eigenvalues come
from bisection on Sturm sign counts, eigenvectors from shifted inverse
iteration with a partially pivoted tridiagonal solve.  No black-box
eigenroutine is used here; the dense cross-check lives in the tests.
"""

from dataclasses import dataclass

import numpy as np

from .sturm import DiscreteOperator, apply_stiffness, zero_mean_project

_BISECT_REL = 1e-12
_RESIDUAL_REL = 1e-9
_INVERSE_ITER_CAP = 10     # tests shrink this to force the failure path
_MAX_SWEEPS = 120


class ConvergenceFailure(RuntimeError):
    """Bisection or inverse iteration did not reach its tolerance."""


class ZeroVector(ValueError):
    """Rayleigh quotient of a vector with no zero-mean component."""


class FingerprintMismatch(ValueError):
    """Spectra being combined come from different metrics or sides."""


@dataclass(frozen=True, eq=False)
class BasicSpectrum:
    """Nonzero modes as (value, multiplicity, error) triples, ascending."""
    values: tuple
    n: int
    side: str
    fingerprint: str

    def lambdas(self) -> np.ndarray:
        """Values expanded with multiplicity, ascending."""
        out = []
        for lam, mult, _err in self.values:
            out.extend([lam] * mult)
        return np.asarray(out, dtype=float)


def condensed(op: DiscreteOperator):
    """Fold collapsing-end nodes into their neighbours.

    Returns (d, e, b): the condensed stiffness diagonal, off-diagonal and
    mass.  The folded row keeps only its interior face flux, and the end
    mass moves inward, so A_c @ 1 still vanishes and B-norms of expanded
    vectors match the full grid exactly.
    """
    lo = 1 if op.endpoints[0] == "collapsing" else 0
    hi = op.n - 1 if op.endpoints[1] == "collapsing" else op.n
    if hi - lo + 1 < 3:
        raise ValueError("grid too small to condense")
    d = op.diag[lo:hi + 1].copy()
    e = op.off[lo:hi].copy()
    b = op.mass[lo:hi + 1].copy()
    if lo == 1:
        d[0] = -op.off[1]
        b[0] += op.mass[0]
    if hi == op.n - 1:
        d[-1] = -op.off[op.n - 2]
        b[-1] += op.mass[op.n]
    if np.any(b <= 0.0):
        raise ValueError("condensed mass must be positive")
    return d, e, b


def _expand(op: DiscreteOperator, v: np.ndarray) -> np.ndarray:
    """Undo the condensation by constant extension at folded ends."""
    lo = 1 if op.endpoints[0] == "collapsing" else 0
    hi = op.n - 1 if op.endpoints[1] == "collapsing" else op.n
    u = np.empty(op.n + 1)
    u[lo:hi + 1] = v
    if lo == 1:
        u[0] = v[0]
    if hi == op.n - 1:
        u[-1] = v[-1]
    return u


def _sturm_counts(cd: np.ndarray, ce2: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Number of eigenvalues of C strictly below each shift in xs."""
    pivmin = max(np.max(ce2), 1.0) * 1e-305
    dx = cd[:, None] - xs[None, :]
    q = dx[0].copy()
    np.minimum(q, -pivmin, out=q, where=(q <= pivmin))
    count = (q < 0.0).astype(np.int64)
    for i in range(1, cd.size):
        q = dx[i] - ce2[i - 1] / q
        np.minimum(q, -pivmin, out=q, where=(q <= pivmin))
        count += q < 0.0
    return count


def _bisect(cd: np.ndarray, ce: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Eigenvalues of C at the given 1-based ranks, to relative 1e-12."""
    ce2 = ce * ce
    rad = np.zeros(cd.size)
    rad[:-1] += np.abs(ce)
    rad[1:] += np.abs(ce)
    lo = float(np.min(cd - rad))
    hi = float(np.max(cd + rad))
    los = np.full(ranks.size, lo)
    his = np.full(ranks.size, hi)
    for _ in range(_MAX_SWEEPS):
        mids = 0.5 * (los + his)
        below = _sturm_counts(cd, ce2, mids) >= ranks
        his = np.where(below, mids, his)
        los = np.where(below, los, mids)
        tol = _BISECT_REL * np.maximum(np.abs(los), np.abs(his)) + 1e-300
        if np.all(his - los <= tol):
            return 0.5 * (los + his)
    raise ConvergenceFailure("bisection failed to close its brackets")


def _solve_shifted(d0: np.ndarray, e: np.ndarray, shift: float,
                   rhs: np.ndarray) -> np.ndarray:
    """Solve (C - shift I) y = rhs by tridiagonal LU with partial pivoting."""
    m = d0.size
    d = d0 - shift
    u1 = np.zeros(m)
    u1[:m - 1] = e
    u2 = np.zeros(m)
    sub = np.zeros(m)
    sub[1:] = e
    v = np.array(rhs, dtype=float)
    tiny = 1e-300
    for i in range(m - 1):
        if abs(sub[i + 1]) > abs(d[i]):
            d[i], sub[i + 1] = sub[i + 1], d[i]
            u1[i], d[i + 1] = d[i + 1], u1[i]
            u2[i], u1[i + 1] = u1[i + 1], u2[i]
            v[i], v[i + 1] = v[i + 1], v[i]
        piv = d[i]
        if piv == 0.0:
            piv = tiny
            d[i] = piv
        f = sub[i + 1] / piv
        d[i + 1] -= f * u1[i]
        u1[i + 1] -= f * u2[i]
        v[i + 1] -= f * v[i]
    if d[-1] == 0.0:
        d[-1] = tiny
    y = np.empty(m)
    y[-1] = v[-1] / d[-1]
    y[-2] = (v[-2] - u1[-2] * y[-1]) / d[-2]
    for i in range(m - 3, -1, -1):
        y[i] = (v[i] - u1[i] * y[i + 1] - u2[i] * y[i + 2]) / d[i]
    return y


def _tridiag_matvec(d: np.ndarray, e: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def eigenpairs(op: DiscreteOperator, k: int):
    """First k nonzero modes: (values, vectors) with vectors on the full grid.

    Vectors are B-orthonormal (u^T B u = 1, degenerate clusters
    Gram-Schmidt'ed in the B inner product) and signed positive at their
    largest-magnitude node.  Raises ConvergenceFailure if any pencil
    residual ||A u - lambda B u|| exceeds 1e-9 ||B u||.
    """
    if k < 1:
        raise ValueError("need at least one mode")
    d, e, b = condensed(op)
    if k + 1 >= d.size:
        raise ValueError("requested more modes than the condensed grid holds")
    sb = np.sqrt(b)
    cd = d / b
    ce = e / (sb[:-1] * sb[1:])
    # rank 1 is the constant kernel mode; start at the first nonzero one
    ranks = np.arange(2, k + 2, dtype=np.int64)
    lams = _bisect(cd, ce, ranks)

    rng = np.random.default_rng(12345)
    scale = float(np.max(np.abs(cd)) + 2.0 * np.max(np.abs(ce)))
    vecs = np.empty((op.n + 1, k))
    for j, lam in enumerate(lams):
        shift = lam + max(abs(lam), scale * 1e-16) * 1e-11
        v = rng.standard_normal(cd.size)
        v /= np.linalg.norm(v)
        ok = False
        for _ in range(_INVERSE_ITER_CAP):
            v = _solve_shifted(cd, ce, shift, v)
            v /= np.linalg.norm(v)
            # residual of the condensed pencil, with a 2x safety margin
            # against the final full-grid certification below
            r = sb * (_tridiag_matvec(cd, ce, v) - lam * v)
            if np.linalg.norm(r) <= 0.5 * _RESIDUAL_REL * np.linalg.norm(sb * v):
                ok = True
                break
        if not ok:
            raise ConvergenceFailure(
                "inverse iteration stalled at mode %d (side %s)" % (j + 1, op.side))
        vecs[:, j] = _expand(op, v / sb)

    # B-orthonormalise near-degenerate clusters so multiplicities are clean
    groups = _cluster(lams)
    for idx in groups:
        for a in range(len(idx)):
            ja = idx[a]
            for c in range(a):
                jc = idx[c]
                coef = vecs[:, jc] @ (op.mass * vecs[:, ja])
                vecs[:, ja] = vecs[:, ja] - coef * vecs[:, jc]
            nrm = np.sqrt(vecs[:, ja] @ (op.mass * vecs[:, ja]))
            if nrm <= 0.0:
                raise ConvergenceFailure("degenerate cluster collapsed")
            vecs[:, ja] /= nrm

    for j in range(k):
        u = vecs[:, j]
        nrm = np.sqrt(u @ (op.mass * u))
        u /= nrm
        if u[np.argmax(np.abs(u))] < 0.0:
            u = -u
        vecs[:, j] = u
        bu = op.mass * u
        resid = np.linalg.norm(apply_stiffness(op, u) - lams[j] * bu)
        if resid > _RESIDUAL_REL * np.linalg.norm(bu):
            raise ConvergenceFailure(
                "pencil residual %.3e too large at mode %d" % (resid, j + 1))
    return lams, vecs


def _cluster(lams: np.ndarray):
    """Indices of near-equal eigenvalues, using the multiplicity tolerance."""
    groups = []
    cur = [0]
    for i in range(1, lams.size):
        if lams[i] - lams[cur[0]] <= max(1e-8, 1e-6 * abs(lams[i])):
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return groups


def group_modes(lams, errs=None):
    """Fold a sorted value list into (value, multiplicity, error) triples."""
    lams = np.asarray(lams, dtype=float)
    if errs is None:
        errs = np.zeros_like(lams)
    else:
        errs = np.asarray(errs, dtype=float)
    out = []
    for idx in _cluster(lams):
        vals = lams[idx]
        out.append((float(np.mean(vals)), len(idx), float(np.max(errs[idx]))))
    return tuple(out)


def solve(op: DiscreteOperator, k: int, include_zero: bool = False) -> BasicSpectrum:
    """First k nonzero eigenvalues of the pencil, grouped by multiplicity.

    The zero mode is known exactly (constants), so with include_zero it is
    prepended as (0, 1, 0) rather than solved for.
    """
    lams, _vecs = eigenpairs(op, k)
    values = group_modes(lams)
    if include_zero:
        values = ((0.0, 1, 0.0),) + values
    return BasicSpectrum(values=values, n=op.n, side=op.side,
                         fingerprint=op.fingerprint)


def rayleigh(op: DiscreteOperator, u) -> float:
    """Rayleigh quotient of the zero-mean part of u."""
    u = np.asarray(u, dtype=float)
    total = float(u @ (op.mass * u))
    v = zero_mean_project(op, u)
    bnorm2 = float(v @ (op.mass * v))
    if bnorm2 <= 1e-28 * max(total, 1e-300):
        raise ZeroVector("vector has no zero-mean component")
    return float(v @ apply_stiffness(op, v)) / bnorm2


def extrapolate(coarse: BasicSpectrum, fine: BasicSpectrum) -> BasicSpectrum:
    """Richardson-extrapolate paired spectra from grids n and 2n.

    The scheme is second order, so lambda = (4 l_2n - l_n) / 3 kills the
    leading error term; the per-mode error estimate is |l_2n - l_n| / 3.
    """
    if coarse.fingerprint != fine.fingerprint or coarse.side != fine.side:
        raise FingerprintMismatch("spectra come from different pencils")
    if fine.n != 2 * coarse.n:
        raise ValueError("extrapolation needs grids n and 2n")
    l1 = coarse.lambdas()
    l2 = fine.lambdas()
    if l1.size != l2.size:
        raise ValueError("spectra hold different mode counts")
    lam = (4.0 * l2 - l1) / 3.0
    err = np.abs(l2 - l1) / 3.0
    order = np.argsort(lam, kind="stable")
    values = group_modes(lam[order], err[order])
    return BasicSpectrum(values=values, n=fine.n, side=fine.side,
                         fingerprint=fine.fingerprint)
