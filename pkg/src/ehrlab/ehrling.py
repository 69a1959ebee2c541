"""Certification, falsification, and reversal of Ehrling-type inequalities.

The forward inequality reads ||Tu||_Y <= eps * norm1(u) + C * norm2(u). When
T restricted to the norm1 unit ball is continuous at 0 in norm2, the largest
delta with sup{||Tu||_Y : norm1(u) <= 1, norm2(u) <= delta} <= eps converts
into a certificate with C = eps / delta: any u splits into the delta-small
part (where the restricted sup bounds ||Tu||) and the rest (where norm2(u) / delta
exceeds norm1(u) after scaling). The reverse inequality swaps the roles:
norm2(u) <= eps * norm_X(u) + C * ||Tu||_Y, meaningful for injective T.

Soundness conventions, applied throughout:

* a PASS verdict evaluates residuals with the *lower* enclosure bound of
  norm2, so a nonpositive residual implies the inequality for the true value;
* a FAIL verdict / witness divides by the *upper* bound, so the forced
  constant is a genuine lower bound on any admissible C;
* the inner maximization admits points by the lower bound, which can only
  enlarge the feasible region and shrink the certified delta.

Certificates are hardened after bisection: a dedicated ascent attacks the
PASS residual, and delta shrinks until the attack comes back empty. Rows of
a certificate table may inherit the constant of a smaller-eps row (valid
there implies valid here), which enforces monotonicity without weakening any
claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonInjectiveError, ToleranceError, UnsupportedNormError
from .operators import LinearOperator, apply_batch, as_matrix
from .optimize import (
    NormHandle,
    OptimizerSettings,
    SamplerSettings,
    ball_points,
    bisect_modulus,
    composed_handle,
    maximize_direction,
    norm_handle,
)
from .spaces import DualFamily, Element, NormSpec, norm_batch

__all__ = [
    "OptimizerSettings",
    "SamplerSettings",
    "CertificateRow",
    "EhrlingCertificate",
    "Witness",
    "VerificationReport",
    "OptimalConstantResult",
    "modulus_delta",
    "certificate_from_modulus",
    "certify",
    "optimal_constant",
    "verify_certificate",
    "falsify",
    "reverse_certificate",
    "three_space_certificate",
]

DEFAULT_EPS_GRID = (1.0, 0.5, 0.25, 0.125, 0.0625)


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CertificateRow:
    eps: float
    delta: float
    C: float
    method: str
    residual: float

    def as_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "C": self.C,
                "method": self.method, "residual": self.residual}


@dataclass
class EhrlingCertificate:
    """Rows sorted by descending eps; each row verified on its sample."""

    rows: list
    operator_label: str
    norm1_label: str
    norm2_label: str

    def as_dict(self) -> dict:
        return {
            "operator": self.operator_label,
            "norm1": self.norm1_label,
            "norm2": self.norm2_label,
            "rows": [r.as_dict() for r in self.rows],
        }

    def row(self, eps: float) -> CertificateRow:
        for r in self.rows:
            if math.isclose(r.eps, eps, rel_tol=1e-12):
                return r
        raise KeyError(f"no certificate row at eps={eps}")


@dataclass(frozen=True)
class Witness:
    """A point that forces every admissible constant above lower_bound_on_C."""

    u: Element
    eps: float
    lower_bound_on_C: float
    residual: float = float("nan")
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "u": self.u.coeffs.tolist(),
            "eps": self.eps,
            "lower_bound_on_C": self.lower_bound_on_C,
            "residual": self.residual,
            "note": self.note,
        }


@dataclass
class VerificationReport:
    passed: bool
    max_residual: float
    n_points: int
    worst: Element
    witness: Witness | None = None

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_residual": self.max_residual,
            "n_points": self.n_points,
            "witness": self.witness.as_dict() if self.witness else None,
        }


@dataclass(frozen=True)
class OptimalConstantResult:
    value: float
    witness: Element
    approximate: bool

    def as_dict(self) -> dict:
        return {"value": self.value, "approximate": self.approximate,
                "witness": self.witness.coeffs.tolist()}


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _operator_dim(T: LinearOperator, opt: OptimizerSettings) -> int:
    if opt.dim is not None:
        return int(opt.dim)
    if T.repr_kind == "diagonal":
        return int(T.lam.size)
    if T.repr_kind == "dense":
        return int(T.matrix.shape[1])
    if T.repr_kind == "kernel":
        return int(T.samples.shape[0])
    return 16  # the default truncation for dimension-free reprs


def _norm_cap(norm_x: NormSpec | None, norm1: NormHandle, dim: int,
              opt: OptimizerSettings) -> float:
    """Upper estimate of the strong norm over the norm1 unit ball.

    Used only to fix the enclosure term count, so a loose factor is fine.
    """
    if norm_x is None:
        return 1.0

    def ratio(V):
        n1 = norm1.hi(V)
        nx = norm_batch(norm_x, V)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(n1 > 0.0, nx / n1, 0.0)
        return np.where(np.isfinite(r), r, 0.0)

    light = replace(opt, iterations=20, polish_rounds=10)
    val, _ = maximize_direction(ratio, dim, light)
    return 2.0 * max(val, 1.0)


def _handles(T: LinearOperator, norm1, norm2, dim: int, opt: OptimizerSettings):
    h1 = norm_handle(norm1)
    fam_space = None
    if isinstance(norm2, DualFamily):
        fam_space = norm2.space
    elif isinstance(norm2, NormSpec) and norm2.kind == "very-weak":
        fam_space = norm2.family.space
    cap = _norm_cap(fam_space, h1, dim, opt) if fam_space is not None else 1.0
    h2 = norm_handle(norm2, enclosure_tol=opt.enclosure_tol, norm_cap=cap)
    ynorm = norm_handle(T.codomain)

    def apply_y(V):
        return ynorm.hi(apply_batch(T, V))

    return h1, h2, apply_y


def _residual_arrays(apply_y, h1: NormHandle, h2: NormHandle, eps: float,
                     C: float, U: np.ndarray):
    y = apply_y(U)
    n1 = h1.hi(U)
    pass_res = y - eps * n1 - C * h2.lo(U)
    fail_res = y - eps * n1 - C * h2.hi(U)
    return pass_res, fail_res


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def modulus_delta(T: LinearOperator, norm1, norm2, eps: float,
                  opt: OptimizerSettings = OptimizerSettings()) -> float:
    """Largest certified delta with sup{||Tu||_Y : norm1<=1, norm2<=delta} <= eps.

    Bisection runs to relative width 1e-3 (configurable) and returns the
    feasible end of the bracket. Raises NoModulusError when the restricted
    supremum still exceeds eps at the configured delta floor. When the
    constraint never binds (the unconstrained supremum is already <= eps)
    the upper search bound itself is returned.
    """
    dim = _operator_dim(T, opt)
    h1, h2, apply_y = _handles(T, norm1, norm2, dim, opt)
    delta, _ = bisect_modulus(apply_y, h1, h2, eps, dim, opt)
    return float(delta)


def certificate_from_modulus(eps: float, delta: float) -> CertificateRow:
    """The constructive constant: C = eps / delta, exact in floating point."""
    if not (eps > 0.0 and delta > 0.0):
        raise ToleranceError("eps and delta must be positive")
    return CertificateRow(eps=float(eps), delta=float(delta),
                          C=float(eps) / float(delta), method="modulus",
                          residual=float("nan"))


def _attack_residual(apply_y, h1, h2, eps, C, dim, opt, extra=None):
    """Ascent on the PASS residual over the norm1 unit sphere."""

    def f(V):
        n1 = h1.hi(V)
        n1 = np.where(n1 > 0.0, n1, 1.0)
        W = V / n1[:, None]
        return apply_y(W) - eps - C * h2.lo(W)

    val, v = maximize_direction(f, dim, opt, extra_starts=extra)
    n1 = float(h1.hi(v[None, :])[0])
    return val, v / n1 if n1 > 0.0 else v


def _verify_points(apply_y, h1, h2, eps, C, pts, witnesses):
    if witnesses:
        W = np.vstack([np.atleast_2d(w) for w in witnesses])
        if W.shape[1] < pts.shape[1]:
            W = np.pad(W, ((0, 0), (0, pts.shape[1] - W.shape[1])))
        elif W.shape[1] > pts.shape[1]:
            pts = np.pad(pts, ((0, 0), (0, W.shape[1] - pts.shape[1])))
        pts = np.vstack([pts, W])
    pass_res, fail_res = _residual_arrays(apply_y, h1, h2, eps, C, pts)
    k = int(np.argmax(pass_res))
    return pts, float(pass_res[k]), float(fail_res.max()), pts[k]


def verify_certificate(T: LinearOperator, norm1, norm2, eps: float, C: float,
                       sampler: SamplerSettings = SamplerSettings(),
                       opt: OptimizerSettings = OptimizerSettings(),
                       witnesses=()) -> VerificationReport:
    """Evaluate the inequality on ball samples, basis vectors, and witnesses.

    The reported residual is the conservative one (norm2 lower bound): if it
    is <= 0 the inequality holds at every sampled point for the true norm2
    value. A Witness is attached only when the upper-bound residual is
    positive somewhere, which proves a genuine violation.
    """
    dim = _operator_dim(T, opt)
    h1, h2, apply_y = _handles(T, norm1, norm2, dim, opt)
    pts = ball_points(sampler, dim, h1)
    pts, max_pass, max_fail, worst = _verify_points(
        apply_y, h1, h2, eps, C, pts, list(witnesses))
    witness = None
    if max_fail > 0.0:
        pass_res, fail_res = _residual_arrays(apply_y, h1, h2, eps, C, pts)
        k = int(np.argmax(fail_res))
        u = pts[k]
        denom = float(h2.hi(u[None, :])[0])
        num = float(apply_y(u[None, :])[0] - eps * h1.hi(u[None, :])[0])
        witness = Witness(
            u=Element(u), eps=eps,
            lower_bound_on_C=num / denom if denom > 0.0 else float("inf"),
            residual=float(fail_res[k]),
            note="upper-bound residual positive: genuine violation",
        )
    return VerificationReport(
        passed=max_pass <= 0.0,
        max_residual=max_pass,
        n_points=int(pts.shape[0]),
        worst=Element(worst),
        witness=witness,
    )


def _certify_rows(apply_y, h1, h2, eps_grid, dim, opt, sampler):
    """Bisect, harden, and verify one row per eps; then enforce monotonicity."""
    if not len(tuple(eps_grid)):
        raise ToleranceError("eps grid must contain at least one value")
    pts = ball_points(sampler, dim, h1)
    rows = []
    pools = []
    eps_sorted = sorted({float(e) for e in eps_grid}, reverse=True)
    for eps in eps_sorted:
        delta, info = bisect_modulus(apply_y, h1, h2, eps, dim, opt)
        pool = info["witnesses"]
        C = eps / delta
        # hardening: shrink delta until the residual attack comes back empty
        for _ in range(opt.harden_rounds):
            warm = np.vstack([np.atleast_2d(w) for w in pool]) if pool else None
            attack_val, attacker = _attack_residual(
                apply_y, h1, h2, eps, C, dim, opt, extra=warm)
            pool.append(attacker)
            _, max_pass, _, _ = _verify_points(
                apply_y, h1, h2, eps, C, pts, pool)
            if max(attack_val, max_pass) <= 0.0:
                break
            delta *= 0.8
            C = eps / delta
        rows.append(CertificateRow(eps=eps, delta=delta, C=C,
                                   method="modulus", residual=float("nan")))
        pools.append(pool)

    # sound envelope: a row may inherit the constant of any smaller-eps row
    for i in range(len(rows) - 2, -1, -1):
        if rows[i + 1].C < rows[i].C:
            rows[i] = replace(rows[i], C=rows[i + 1].C,
                              delta=rows[i].eps / rows[i + 1].C)

    # final verification stamps the reported residuals
    out = []
    all_pool = [w for pool in pools for w in pool]
    for r in rows:
        _, max_pass, _, _ = _verify_points(
            apply_y, h1, h2, r.eps, r.C, pts, all_pool)
        out.append(replace(r, residual=max_pass))
    return out


def certify(T: LinearOperator, norm1, norm2, eps_grid=DEFAULT_EPS_GRID,
            opt: OptimizerSettings = OptimizerSettings(),
            sampler: SamplerSettings = SamplerSettings()) -> EhrlingCertificate:
    """Constructive certificate table over an eps grid (descending)."""
    dim = _operator_dim(T, opt)
    h1, h2, apply_y = _handles(T, norm1, norm2, dim, opt)
    rows = _certify_rows(apply_y, h1, h2, eps_grid, dim, opt, sampler)
    return EhrlingCertificate(
        rows=rows, operator_label=T.label,
        norm1_label=h1.label, norm2_label=h2.label,
    )


def optimal_constant(T: LinearOperator, norm1, norm2, eps: float,
                     opt: OptimizerSettings = OptimizerSettings()) -> OptimalConstantResult:
    """Estimate of the sharp constant sup (||Tu||_Y - eps*norm1(u)) / norm2(u).

    Multi-start ascent plus the coordinate-axis scan; clamped below at 0.
    Points where the norm2 lower bound vanishes while the numerator stays
    positive would make the ratio unbounded; they are excluded and flagged
    (only reachable in dense mode at loose enclosure tolerances).
    """
    dim = _operator_dim(T, opt)
    h1, h2, apply_y = _handles(T, norm1, norm2, dim, opt)

    def f(V):
        y = apply_y(V)
        n1 = h1.hi(V)
        n2 = h2.lo(V)
        num = y - eps * n1
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(n2 > 0.0, num / n2, np.where(num > 0.0, np.inf, -np.inf))
        return np.where(np.isnan(r), -np.inf, r)

    val, v = maximize_direction(f, dim, opt)
    approximate = not math.isfinite(val)
    if approximate:
        val = 0.0
    return OptimalConstantResult(value=max(0.0, float(val)),
                                 witness=Element(v), approximate=approximate)


def falsify(T: LinearOperator, norm1, fam: DualFamily, eps: float, c_max: float,
            opt: OptimizerSettings = OptimizerSettings()) -> Witness | None:
    """Search for u forcing C > c_max in ||Tu||_Y <= eps*norm1(u) + C*|u|_Phi.

    Scans the basis directions in ascending index first (their enclosures are
    exact in coordinate mode), then runs the ascent. Returns None when the
    budget is exhausted: inconclusive, not a proof of validity.
    """
    if c_max <= 0.0:
        raise ToleranceError(f"c_max must be positive, got {c_max}")
    dim = _operator_dim(T, opt)
    h1, h2, apply_y = _handles(T, norm1, fam, dim, opt)

    E = np.eye(dim)
    n1 = h1.hi(E)
    n1 = np.where(n1 > 0.0, n1, 1.0)
    B = E / n1[:, None]
    num = apply_y(B) - eps * h1.hi(B)
    den = h2.hi(B)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0.0, num / den, np.where(num > 0.0, np.inf, 0.0))
    for k in range(dim):
        if ratios[k] > c_max:
            u = B[k]
            return Witness(
                u=Element(u), eps=eps, lower_bound_on_C=float(ratios[k]),
                residual=float(num[k] - c_max * den[k]),
                note=f"basis direction e_{k + 1}",
            )

    def f(V):
        nv = h1.hi(V)
        nv = np.where(nv > 0.0, nv, 1.0)
        W = V / nv[:, None]
        y = apply_y(W) - eps
        d2 = h2.hi(W)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d2 > 0.0, y / d2, np.where(y > 0.0, np.inf, -np.inf))
        return np.where(np.isnan(r), -np.inf, r)

    val, v = maximize_direction(f, dim, opt)
    if math.isfinite(val) and val > c_max:
        n1v = float(h1.hi(v[None, :])[0])
        u = v / n1v if n1v > 0.0 else v
        num_u = float(apply_y(u[None, :])[0] - eps * h1.hi(u[None, :])[0])
        den_u = float(h2.hi(u[None, :])[0])
        return Witness(
            u=Element(u), eps=eps, lower_bound_on_C=num_u / den_u,
            residual=num_u - c_max * den_u, note="ascent",
        )
    return None


# ---------------------------------------------------------------------------
# reverse and three-space forms
# ---------------------------------------------------------------------------

_REFLEXIVE_KINDS = ("lp", "weighted-lp", "sobolev-h1")


def _check_reflexive_model(ns: NormSpec):
    if ns.kind not in _REFLEXIVE_KINDS:
        raise UnsupportedNormError(
            f"reverse certification needs a reflexive-model norm, got {ns.label}"
        )
    if ns.kind in ("lp", "weighted-lp") and not (1.0 < ns.p < math.inf):
        raise UnsupportedNormError(
            f"reverse certification needs 1 < p < inf, got p={ns.p:g}"
        )


def reverse_certificate(T: LinearOperator, fam: DualFamily, eps: float,
                        opt: OptimizerSettings = OptimizerSettings(),
                        sampler: SamplerSettings = SamplerSettings()) -> CertificateRow:
    """Certificate for |u|_Phi <= eps*norm_X(u) + C*||Tu||_Y on injective T.

    The domain norm must be a reflexive model (lp with 1 < p < inf, or the
    Hilbertian sobolev-h1); injectivity on the truncation is checked through
    the smallest singular value of the materialized matrix.
    """
    _check_reflexive_model(T.domain)
    dim = _operator_dim(T, opt)
    M = as_matrix(T, dim)
    smin = float(np.linalg.svd(M, compute_uv=False)[-1])
    if smin <= 1e-10:
        raise NonInjectiveError(
            f"smallest singular value {smin:.3g} on the dim-{dim} truncation"
        )

    hX = norm_handle(T.domain)
    cap = 1.0  # family space norm over the norm_X ball; refined below
    famh = norm_handle(fam, enclosure_tol=opt.enclosure_tol,
                       norm_cap=_norm_cap(fam.space, hX, dim, opt))
    ynorm = norm_handle(T.codomain)

    def apply_y_rev(V):
        # roles exchanged: the "operator value" is the very weak norm upper
        # bound and the constraint norm is ||Tu||_Y
        return famh.hi(V)

    class _YHandle(NormHandle):
        label = ynorm.label

        def lo(self, U):
            return ynorm.hi(apply_batch(T, U))

        hi = lo

    yh = _YHandle()
    delta, info = bisect_modulus(apply_y_rev, hX, yh, eps, dim, opt)
    C = eps / delta

    # verification with exchanged roles: residual = |u|_hi - eps*||u||_X - C*||Tu||
    pts = ball_points(sampler, dim, hX)
    for _ in range(opt.harden_rounds):
        def attack(V):
            nx = hX.hi(V)
            nx = np.where(nx > 0.0, nx, 1.0)
            W = V / nx[:, None]
            return famh.hi(W) - eps - C * yh.lo(W)

        aval, av = maximize_direction(attack, dim, opt)
        res = famh.hi(pts) - eps * hX.hi(pts) - C * yh.lo(pts)
        worst = float(res.max())
        if max(aval, worst) <= 0.0:
            break
        delta *= 0.8
        C = eps / delta
    res = famh.hi(pts) - eps * hX.hi(pts) - C * yh.lo(pts)
    return CertificateRow(eps=float(eps), delta=float(delta), C=float(C),
                          method="reverse", residual=float(res.max()))


def three_space_certificate(theta: LinearOperator, tau_op: LinearOperator,
                            eps_grid=DEFAULT_EPS_GRID,
                            opt: OptimizerSettings = OptimizerSettings(),
                            sampler: SamplerSettings = SamplerSettings()) -> EhrlingCertificate:
    """Certificate table for ||theta(u)||_Y <= eps*norm_X(u) + C*||tau(theta(u))||_Z.

    The induced second norm is norm2(u) = ||tau(theta(u))||_Z, and the
    machinery is exactly the two-norm one with that composite handle.
    """
    dim = _operator_dim(theta, opt)
    h1 = norm_handle(theta.domain)
    h2 = composed_handle(theta, tau_op, tau_op.codomain)
    ynorm = norm_handle(theta.codomain)

    def apply_y(V):
        return ynorm.hi(apply_batch(theta, V))

    rows = _certify_rows(apply_y, h1, h2, eps_grid, dim, opt, sampler)
    return EhrlingCertificate(
        rows=rows, operator_label=f"{theta.label} / {tau_op.label}",
        norm1_label=h1.label, norm2_label=h2.label,
    )
