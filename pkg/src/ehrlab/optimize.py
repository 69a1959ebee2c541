"""Deterministic search machinery behind certification and falsification.

All maximizations here run over *directions*: every objective is built to be
invariant under positive scaling of its argument, so the search space is the
unit sphere of the reference norm. The recipe is fixed and seeded: a
coordinate-axis scan, a batch of random starts driven by finite-difference
ascent with per-start adaptive steps, then a pattern-search polish around the
leaders. Identical settings give bit-for-bit identical trajectories.

Norm-like quantities enter through NormHandle, which exposes batched lower
and upper evaluations. Plain norms have lo = hi; a dual family contributes
the certified enclosure of the very weak norm at a fixed term count (fixed so
both bounds stay exactly positively homogeneous); an operator-composed norm
evaluates ||tau(theta(u))||_Z.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NoModulusError, ToleranceError
from .operators import LinearOperator, apply_batch
from .spaces import DualFamily, NormSpec, norm_batch
from .veryweak import _least_terms, very_weak_norm_batch

__all__ = [
    "OptimizerSettings",
    "SamplerSettings",
    "NormHandle",
    "maximize_direction",
    "ball_points",
    "bisect_modulus",
]


@dataclass(frozen=True)
class OptimizerSettings:
    """Budgets and seeds for the deterministic search.

    dim is the ambient truncation the search runs in; when None it is
    inferred from the operator (diagonal/dense/kernel carry one) and falls
    back to 16. delta_floor is the smallest modulus the bisection will
    consider before declaring that no modulus exists. enclosure_tol fixes the
    width of very-weak enclosures used inside the search.
    """

    seed: int = 0
    n_starts: int = 64
    iterations: int = 60
    polish_rounds: int = 30
    fd_step: float = 1e-6
    step_init: float = 0.25
    bisect_rel_width: float = 1e-3
    delta_floor: float = 1e-14
    enclosure_tol: float = 1e-10
    harden_rounds: int = 8
    dim: int | None = None


@dataclass(frozen=True)
class SamplerSettings:
    """Verification sample: random ball points plus the basis directions."""

    n_samples: int = 10000
    seed: int = 0
    include_basis: bool = True


# ---------------------------------------------------------------------------
# norm handles
# ---------------------------------------------------------------------------

class NormHandle:
    """Batched lower/upper evaluation of a norm-like quantity."""

    label: str = ""

    def lo(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hi(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def exact(self) -> bool:
        return True


class _SpecHandle(NormHandle):
    def __init__(self, ns: NormSpec):
        self.ns = ns
        self.label = ns.label

    def lo(self, U):
        return norm_batch(self.ns, U)

    hi = lo


class _FamilyHandle(NormHandle):
    """Very weak norm through a fixed-term enclosure.

    The term count is frozen up front (from the enclosure tolerance and a cap
    on the strong norms the search will see) so that both bounds are exactly
    positively homogeneous; the tail majorant stays valid for every argument
    regardless of the cap.
    """

    def __init__(self, fam: DualFamily, tol: float, norm_cap: float):
        self.fam = fam
        self.label = f"very-weak({fam.mode}, {fam.space.label})"
        cap = max(float(norm_cap), 1.0)
        self.terms = _least_terms(cap, tol)

    def lo(self, U):
        lo, _ = very_weak_norm_batch(self.fam, U, terms=self.terms)
        return lo

    def hi(self, U):
        _, hi = very_weak_norm_batch(self.fam, U, terms=self.terms)
        return hi

    @property
    def exact(self) -> bool:
        return self.fam.mode == "coordinate"


class _ComposedHandle(NormHandle):
    """||tau(theta(u))||_Z evaluated through the operator gallery."""

    def __init__(self, theta: LinearOperator, tau_op: LinearOperator, znorm: NormSpec):
        self.theta = theta
        self.tau_op = tau_op
        self.znorm = znorm
        self.label = f"{znorm.label} after {tau_op.label} after {theta.label}"

    def lo(self, U):
        return norm_batch(self.znorm, apply_batch(self.tau_op, apply_batch(self.theta, U)))

    hi = lo


def norm_handle(obj, *, enclosure_tol: float = 1e-10, norm_cap: float = 1.0) -> NormHandle:
    """Wrap a NormSpec or DualFamily (or pass a handle through) for batched use."""
    if isinstance(obj, NormHandle):
        return obj
    if isinstance(obj, DualFamily):
        return _FamilyHandle(obj, enclosure_tol, norm_cap)
    if isinstance(obj, NormSpec):
        if obj.kind == "very-weak":
            return _FamilyHandle(obj.family, obj.tolerance, norm_cap)
        return _SpecHandle(obj)
    raise ToleranceError(f"cannot build a norm handle from {type(obj).__name__}")


def composed_handle(theta, tau_op, znorm) -> NormHandle:
    return _ComposedHandle(theta, tau_op, znorm)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def ball_points(sampler: SamplerSettings, dim: int, norm1: NormHandle) -> np.ndarray:
    """Deterministic sample of the norm1 unit ball, plus normalized basis rows."""
    rng = np.random.default_rng(sampler.seed)
    X = rng.standard_normal((sampler.n_samples, dim))
    norms = norm1.hi(X)
    norms = np.where(norms > 0.0, norms, 1.0)
    radii = rng.random(sampler.n_samples) ** (1.0 / dim)
    pts = X / norms[:, None] * radii[:, None]
    if sampler.include_basis:
        E = np.eye(dim)
        en = norm1.hi(E)
        en = np.where(en > 0.0, en, 1.0)
        pts = np.vstack([pts, E / en[:, None]])
    return pts


# ---------------------------------------------------------------------------
# direction search
# ---------------------------------------------------------------------------

def _unit_rows(V: np.ndarray) -> np.ndarray:
    n = np.sqrt((V * V).sum(axis=1))
    bad = n < 1e-300
    if np.any(bad):
        V = V.copy()
        V[bad] = 0.0
        V[bad, 0] = 1.0
        n = np.where(bad, 1.0, n)
    return V / n[:, None]


def maximize_direction(objective, dim: int, opt: OptimizerSettings,
                       extra_starts: np.ndarray | None = None):
    """Maximize a scale-invariant batched objective over nonzero directions.

    objective maps an (n, dim) array of directions to (n,) values and must
    tolerate arbitrary nonzero rows. Returns (best value, best direction).
    """
    rng = np.random.default_rng(opt.seed)

    blocks = [np.eye(dim), -np.eye(dim),
              rng.standard_normal((opt.n_starts, dim))]
    if extra_starts is not None and len(extra_starts):
        blocks.append(np.atleast_2d(np.asarray(extra_starts, dtype=np.float64)))
    axes = np.vstack(blocks[:2])
    axis_vals = objective(axes)

    V = _unit_rows(np.vstack(blocks[2:]) if len(blocks) > 2 else blocks[2])
    vals = objective(V)

    # seed the ascent with the best axis as well
    k = int(np.argmax(axis_vals))
    V = np.vstack([V, axes[k][None, :]])
    vals = np.append(vals, axis_vals[k])

    n = V.shape[0]
    steps = np.full(n, opt.step_init)
    eye = np.eye(dim)

    for _ in range(opt.iterations):
        # batched forward-difference gradient on the sphere
        P = (V[:, None, :] + opt.fd_step * eye[None, :, :]).reshape(n * dim, dim)
        fp = objective(P).reshape(n, dim)
        G = (fp - vals[:, None]) / opt.fd_step
        gn = np.sqrt((G * G).sum(axis=1))
        gn = np.where(gn > 0.0, gn, 1.0)
        W = _unit_rows(V + steps[:, None] * G / gn[:, None])
        fw = objective(W)
        better = fw > vals
        V[better] = W[better]
        vals[better] = fw[better]
        steps[better] *= 1.25
        steps[~better] *= 0.5
        if np.all(steps < 1e-12):
            break

    # pattern-search polish around the current leaders
    order = np.argsort(vals)[::-1][: min(4, n)]
    leaders = V[order].copy()
    lead_vals = vals[order].copy()
    radius = 0.1
    for _ in range(opt.polish_rounds):
        cands = (leaders[:, None, :] + radius * np.vstack([eye, -eye])[None, :, :])
        cands = cands.reshape(-1, dim)
        cv = objective(_unit_rows(cands)).reshape(len(leaders), 2 * dim)
        best_j = cv.argmax(axis=1)
        best_v = cv[np.arange(len(leaders)), best_j]
        improved = best_v > lead_vals
        moved = _unit_rows(cands.reshape(len(leaders), 2 * dim, dim)[
            np.arange(len(leaders)), best_j])
        leaders[improved] = moved[improved]
        lead_vals[improved] = best_v[improved]
        radius *= 0.7

    pool_vals = np.concatenate([axis_vals, vals, lead_vals])
    pool = np.vstack([axes, V, leaders])
    j = int(np.argmax(pool_vals))
    return float(pool_vals[j]), pool[j].copy()


# ---------------------------------------------------------------------------
# modulus bisection
# ---------------------------------------------------------------------------

def _restricted_sup(apply_y, norm1: NormHandle, norm2: NormHandle, delta: float,
                    dim: int, opt: OptimizerSettings, warm=None):
    """sup ||Tu||_Y over {norm1(u) <= 1, norm2(u) <= delta} by direction search.

    The objective rescales each direction v onto the boundary of the feasible
    region: c = min(1/norm1(v), delta/norm2(v)); its value is c * ||Tv||_Y.
    The norm2 lower bound is used for feasibility, which can only enlarge the
    region and overestimate the supremum: the conservative side.
    """

    def f(V):
        n1 = norm1.hi(V)
        n2 = norm2.lo(V)
        y = apply_y(V)
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = np.where(n1 > 0.0, 1.0 / n1, np.inf)
            c2 = np.where(n2 > 0.0, delta / n2, np.inf)
        c = np.minimum(c1, c2)
        c = np.where(np.isfinite(c), c, 0.0)  # both norms vanish: the zero ray
        return y * c

    return maximize_direction(f, dim, opt, extra_starts=warm)


def bisect_modulus(apply_y, norm1: NormHandle, norm2: NormHandle, eps: float,
                   dim: int, opt: OptimizerSettings):
    """Largest delta (to relative width bisect_rel_width) with sup <= eps.

    Returns (delta, info). info carries the witness pool for verification,
    the upper search bound, and whether the bound itself already satisfied
    the predicate (the degenerate case: the constraint never binds).
    """
    if eps <= 0.0:
        raise ToleranceError(f"eps must be positive, got {eps}")

    # upper search bound: sup norm2 over the norm1 unit ball
    def ratio(V):
        n1 = norm1.hi(V)
        n2 = norm2.lo(V)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(n1 > 0.0, n2 / n1, 0.0)
        return np.where(np.isfinite(r), r, 0.0)

    bound, _ = maximize_direction(ratio, dim, opt)
    bound = max(bound, opt.delta_floor)

    witnesses = []

    def predicate(delta, warm):
        val, w = _restricted_sup(apply_y, norm1, norm2, delta, dim, opt, warm)
        witnesses.append(w)
        return val <= eps, val, w

    ok, val, w = predicate(bound, None)
    info = {"upper_bound": bound, "witnesses": witnesses, "degenerate": False,
            "sup_at_delta": val}
    if ok:
        info["degenerate"] = True
        return bound, info

    # geometric descent to bracket, then log-space bisection
    hi_d, lo_d = bound, None
    delta = bound
    warm = w[None, :]
    while delta > opt.delta_floor:
        delta = max(delta / 16.0, opt.delta_floor)
        ok, val, w = predicate(delta, warm)
        warm = w[None, :]
        if ok:
            lo_d = delta
            break
        hi_d = delta
    if lo_d is None:
        raise NoModulusError(eps, opt.delta_floor, val)

    while hi_d / lo_d > 1.0 + opt.bisect_rel_width:
        mid = float(np.sqrt(lo_d * hi_d))
        ok, val, w = predicate(mid, warm)
        warm = w[None, :]
        if ok:
            lo_d = mid
        else:
            hi_d = mid

    info["sup_at_delta"] = val
    return lo_d, info


def settings_for_dim(opt: OptimizerSettings, dim: int) -> OptimizerSettings:
    return opt if opt.dim == dim else replace(opt, dim=dim)
