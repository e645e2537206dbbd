"""Achievable-rate regions for degraded finite-state broadcast channels.

Everything is driven by the per-block support value

    F_n(lam) = max_q ( min_s0 R2_n(q, s0) + lam * min_s0 R1_n(q, s0) )

over joint laws q(u-block, x-block), where R1_n and R2_n are the
per-symbol private and common-receiver rate functionals, each charged a
log2(S)/n state-uncertainty penalty.  The boundary of the rate region is
recovered from supporting lines: R2(R1) = min_lam (F_n(lam) - lam R1),
clamped at zero.

Maximization runs a multistart projected-gradient ascent on the joint
simplex (fsbclab._backend); an exhaustive coarse-grid search is engaged
automatically as a cross-check when the simplex has at most four free
dimensions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .channel import ENUM_BUDGET, FsbcKernel, block_law
from .errors import (
    DomainError,
    EmptySupport,
    GridMismatch,
    InvalidSpec,
    NegativeEntry,
    NotStochastic,
)

_FLOOR = 1e-300
GRID_ORACLE_STEP = 0.05
GRID_ORACLE_MAX_FREE_DIMS = 4
OPTIMIZER_SLACK = 1e-3
SUPADD_SLACK = 2e-3
SHAPE_TOL = 1e-9


def u_cardinality_cap(kernel: FsbcKernel, n: int) -> int:
    """Largest useful auxiliary alphabet: min(|X|, |Y|, |Z|)^n."""
    return min(kernel.x_size, kernel.y_size, kernel.z_size) ** n


@dataclass(frozen=True)
class JointInputLaw:
    """Joint distribution q(u-block, x-block) on one probability simplex."""

    n: int
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 2:
            raise DomainError(f"joint input law must be 2-d, got {table.ndim}-d")
        if np.any(table < 0.0):
            pos = np.argwhere(table < 0.0)[0]
            raise NegativeEntry(f"joint law has negative entry at {tuple(pos)}")
        total = float(table.sum())
        if abs(total - 1.0) > 1e-12:
            raise NotStochastic(f"joint law sums to {total!r}, not 1 (tol 1e-12)")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def u_size(self) -> int:
        return self.table.shape[0]

    @property
    def x_blocks(self) -> int:
        return self.table.shape[1]

    def check_against(self, kernel: FsbcKernel) -> None:
        if self.x_blocks != kernel.x_size**self.n:
            raise DomainError(
                f"joint law has {self.x_blocks} input blocks, kernel needs "
                f"{kernel.x_size ** self.n}"
            )
        cap = u_cardinality_cap(kernel, self.n)
        if self.u_size > cap:
            raise InvalidSpec(f"auxiliary alphabet {self.u_size} exceeds cap {cap}")


@dataclass(frozen=True)
class RatePair:
    """Per-symbol rate functionals for one (q, s0); penalties included."""

    r1: float
    r2: float
    n: int
    s0: int


def _infos(py: np.ndarray, pz: np.ndarray, q: np.ndarray):
    """(I(X;Y|U), I(U;Z)) in bits per block for one initial state."""
    w = q.sum(axis=1)
    m = q @ pz
    pzm = m.sum(axis=0)
    i_uz = float(np.sum(m * (np.log2(m + _FLOOR) - np.log2(np.outer(w, pzm) + _FLOOR))))
    c = q @ py
    erow = np.sum(py * np.log2(py + _FLOOR), axis=1)
    i_xy_u = float(
        q.sum(axis=0) @ erow
        + w @ np.log2(w + _FLOOR)
        - np.sum(c * np.log2(c + _FLOOR))
    )
    return i_xy_u, i_uz


def _law_stacks(kernel: FsbcKernel, n: int, budget: int):
    """Block-law marginals for every initial state: (S, NX, NY), (S, NX, NZ)."""
    pys, pzs = [], []
    for s0 in range(kernel.s_size):
        law = block_law(kernel, n, s0, budget=budget)
        pys.append(law.p_y)
        pzs.append(law.p_z)
    return np.ascontiguousarray(np.stack(pys)), np.ascontiguousarray(np.stack(pzs))


def rate_pair(kernel: FsbcKernel, q: JointInputLaw, s0: int, budget: int = ENUM_BUDGET) -> RatePair:
    """Evaluate the two rate functionals at a joint law and initial state."""
    q.check_against(kernel)
    if not 0 <= s0 < kernel.s_size:
        raise DomainError(f"initial state {s0} outside [0, {kernel.s_size})")
    law = block_law(kernel, q.n, s0, budget=budget)
    i_xy_u, i_uz = _infos(law.p_y, law.p_z, q.table)
    pen = math.log2(kernel.s_size) / q.n
    return RatePair(r1=i_xy_u / q.n - pen, r2=i_uz / q.n - pen, n=q.n, s0=s0)


@dataclass
class OptimConfig:
    """Knobs for the support-value search; defaults match the CLI."""

    starts: int = 32
    max_iters: int = 600
    step_init: float = 0.25
    min_step: float = 1e-10
    seed: int = 0
    u_size: int | None = None
    grid_auto: bool = True
    product_start: bool = True
    threads: int = 1
    budget: int = ENUM_BUDGET

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SupportPoint:
    """One evaluation of F_n(lam), with the argmax law and diagnostics."""

    lam: float
    n: int
    value: float
    raw_value: float
    q: JointInputLaw
    i1_per_state: np.ndarray
    i2_per_state: np.ndarray
    min_state_r1: int
    min_state_r2: int
    converged: bool
    grid_value: float | None = None
    below_grid: bool = False


def _deterministic_starts(nu: int, nx: int) -> list[np.ndarray]:
    starts = [np.full((nu, nx), 1.0 / (nu * nx))]
    diag = np.zeros((nu, nx))
    diag[np.arange(nx) % nu, np.arange(nx)] = 1.0 / nx
    starts.append(diag)
    const = np.zeros((nu, nx))
    const[0, :] = 1.0 / nx
    starts.append(const)
    return starts


def _random_start(nu: int, nx: int, seed: int, lam: float, s0_key: int, j: int) -> np.ndarray:
    lam_key = int(round(lam * 1_000_000_000))
    # spawn keys must be nonnegative; s0_key is -1 for the maxmin variant
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(2, lam_key, s0_key + 1, j))
    rng = np.random.default_rng(ss)
    return rng.dirichlet(np.ones(nu * nx)).reshape(nu, nx)


def _kron_power(q: np.ndarray, n: int) -> np.ndarray:
    out = q
    for _ in range(n - 1):
        out = np.kron(out, q)
    return out


def _compositions(total: int, parts: int):
    """All integer vectors of length `parts` summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def grid_search_support(
    kernel: FsbcKernel,
    lam: float,
    n: int,
    s0: int | None = None,
    step: float = GRID_ORACLE_STEP,
    u_size: int | None = None,
    budget: int = ENUM_BUDGET,
):
    """Exhaustive coarse-grid maximization of the support objective.

    Only admissible when the joint simplex has at most
    GRID_ORACLE_MAX_FREE_DIMS free coordinates.  Returns (value, q_table).
    """
    nu = u_size or u_cardinality_cap(kernel, n)
    nx = kernel.x_size**n
    cells = nu * nx
    if cells - 1 > GRID_ORACLE_MAX_FREE_DIMS:
        raise DomainError(
            f"grid search needs <= {GRID_ORACLE_MAX_FREE_DIMS} free dims, got {cells - 1}"
        )
    py_stack, pz_stack = _law_stacks(kernel, n, budget)
    if s0 is not None:
        py_stack = py_stack[s0 : s0 + 1]
        pz_stack = pz_stack[s0 : s0 + 1]
    units = int(round(1.0 / step))
    best = -np.inf
    best_q = None
    core = _backend.core
    for comp in _compositions(units, cells):
        q = np.array(comp, dtype=np.float64).reshape(nu, nx) / units
        val = core.objective(py_stack, pz_stack, q, lam)
        if val > best:
            best = val
            best_q = q
    pen = math.log2(kernel.s_size) / n
    return best / n - (1.0 + lam) * pen, best_q


def optimize_support(
    kernel: FsbcKernel,
    lam: float,
    n: int,
    config: OptimConfig | None = None,
    s0: int | None = None,
) -> SupportPoint:
    """Maximize the support objective at one lambda by multistart ascent.

    With s0=None both rate terms take their minimum over initial states;
    with a fixed s0 the per-state variant F_n^{s0} is computed.  The
    reported value is recomputed from the argmax with the exact numpy
    formulas so it does not depend on the backend's accumulation order.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    if n < 1:
        raise DomainError(f"block length must be >= 1, got {n}")
    cfg = config or OptimConfig()
    nu = cfg.u_size or u_cardinality_cap(kernel, n)
    if nu > u_cardinality_cap(kernel, n):
        raise InvalidSpec(
            f"auxiliary alphabet {nu} exceeds cap {u_cardinality_cap(kernel, n)}"
        )
    nx = kernel.x_size**n
    py_all, pz_all = _law_stacks(kernel, n, cfg.budget)
    if s0 is None:
        py_stack, pz_stack = py_all, pz_all
        s0_key = -1
    else:
        if not 0 <= s0 < kernel.s_size:
            raise DomainError(f"initial state {s0} outside [0, {kernel.s_size})")
        py_stack = np.ascontiguousarray(py_all[s0 : s0 + 1])
        pz_stack = np.ascontiguousarray(pz_all[s0 : s0 + 1])
        s0_key = s0

    starts = _deterministic_starts(nu, nx)
    if cfg.product_start and n > 1:
        sub = optimize_support(kernel, lam, 1, config=_subconfig(cfg), s0=s0)
        starts.append(_kron_power(sub.q.table, n))
    for j in range(cfg.starts):
        starts.append(_random_start(nu, nx, cfg.seed, lam, s0_key, j))

    core = _backend.core
    best_val = -np.inf
    best_q = None
    best_converged = False
    for q0 in starts:
        val, q, _, converged = core.ascend(
            py_stack, pz_stack, q0, lam, cfg.max_iters, cfg.step_init, cfg.min_step
        )
        if val > best_val:
            best_val, best_q, best_converged = val, q, converged

    i1 = np.empty(py_stack.shape[0])
    i2 = np.empty(py_stack.shape[0])
    for k in range(py_stack.shape[0]):
        i1[k], i2[k] = _infos(py_stack[k], pz_stack[k], best_q)
    pen = math.log2(kernel.s_size) / n
    raw = float(i2.min() + lam * i1.min())
    value = raw / n - (1.0 + lam) * pen
    point = SupportPoint(
        lam=lam,
        n=n,
        value=value,
        raw_value=raw,
        q=JointInputLaw(n=n, table=best_q),
        i1_per_state=i1,
        i2_per_state=i2,
        min_state_r1=int(np.argmin(i1)) if s0 is None else s0,
        min_state_r2=int(np.argmin(i2)) if s0 is None else s0,
        converged=best_converged,
    )
    if cfg.grid_auto and nu * nx - 1 <= GRID_ORACLE_MAX_FREE_DIMS:
        gval, _ = grid_search_support(
            kernel, lam, n, s0=s0, u_size=nu, budget=cfg.budget
        )
        point.grid_value = gval
        point.below_grid = value < gval - OPTIMIZER_SLACK
    return point


def _subconfig(cfg: OptimConfig) -> OptimConfig:
    sub = OptimConfig(**cfg.to_dict())
    sub.product_start = False
    sub.grid_auto = False
    return sub


@dataclass
class SupportFunction:
    """F_n on a lambda grid, with per-initial-state variants and argmaxes."""

    n: int
    lambdas: np.ndarray
    values: np.ndarray
    per_state: np.ndarray
    argmax: list
    min_state_r1: np.ndarray
    min_state_r2: np.ndarray
    converged: np.ndarray
    grid_values: np.ndarray
    u_size: int
    s_size: int
    kernel_label: str
    config: dict = field(default_factory=dict)

    def shape_report(self, slack: float = OPTIMIZER_SLACK) -> dict:
        """Convexity and monotonicity of the grid values, within slack.

        F_n is a pointwise max of lambda-affine functions, hence convex;
        monotonicity can fail legitimately once the state penalty makes
        the rate terms negative, so it is reported, not enforced.
        """
        lam = self.lambdas
        val = self.values
        mono = float(np.max(np.maximum(val[:-1] - val[1:], 0.0))) if val.size > 1 else 0.0
        conv = 0.0
        if val.size > 2:
            slopes = np.diff(val) / np.diff(lam)
            conv = float(np.max(np.maximum(slopes[:-1] - slopes[1:], 0.0)))
        return {
            "nondecreasing_ok": mono <= slack,
            "convex_ok": conv <= slack,
            "max_monotonicity_violation": mono,
            "max_convexity_violation": conv,
        }


def lambda_grid(count: int = 21) -> np.ndarray:
    if count < 1:
        raise DomainError(f"lambda grid needs >= 1 point, got {count}")
    if count == 1:
        return np.array([0.5])
    return np.linspace(0.0, 1.0, count)


def sweep_support(
    kernel: FsbcKernel,
    n: int,
    lambdas=None,
    config: OptimConfig | None = None,
) -> SupportFunction:
    """Evaluate F_n and all per-state variants on a lambda grid.

    Work is farmed per grid point over config.threads; seeds derive from
    (seed, lambda, state, start index), so results are identical at any
    thread count.
    """
    cfg = config or OptimConfig()
    lams = lambda_grid() if lambdas is None else np.asarray(lambdas, dtype=np.float64)
    if lams.size == 0:
        raise EmptySupport("lambda grid is empty")
    if np.any(lams < 0.0) or np.any(lams > 1.0):
        raise DomainError("lambda grid must lie within [0, 1]")
    s = kernel.s_size

    def eval_point(lam: float):
        top = optimize_support(kernel, lam, n, config=cfg)
        fixed = [optimize_support(kernel, lam, n, config=cfg, s0=k) for k in range(s)]
        return top, fixed

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(eval_point, lams))
    else:
        results = [eval_point(lam) for lam in lams]

    values = np.array([r[0].value for r in results])
    per_state = np.array([[r[1][k].value for r in results] for k in range(s)])
    grid_values = np.array(
        [r[0].grid_value if r[0].grid_value is not None else np.nan for r in results]
    )
    return SupportFunction(
        n=n,
        lambdas=lams,
        values=values,
        per_state=per_state,
        argmax=[r[0].q for r in results],
        min_state_r1=np.array([r[0].min_state_r1 for r in results]),
        min_state_r2=np.array([r[0].min_state_r2 for r in results]),
        converged=np.array(
            [r[0].converged and all(f.converged for f in r[1]) for r in results]
        ),
        grid_values=grid_values,
        u_size=cfg.u_size or u_cardinality_cap(kernel, n),
        s_size=s,
        kernel_label=kernel.label,
        config=cfg.to_dict(),
    )


@dataclass
class RateRegion:
    """Supporting-line representation of an (R1, R2) region plus boundary.

    The stored boundary samples R2(R1) = max(0, min_k (F_k - lam_k R1)).
    The common-message view folds in as R0 + R2 <= R2(R1).
    """

    n: int
    lambdas: np.ndarray
    support_values: np.ndarray
    boundary_r1: np.ndarray
    boundary_r2: np.ndarray
    meta: dict = field(default_factory=dict)

    def boundary_at(self, r1) -> np.ndarray:
        r1 = np.atleast_1d(np.asarray(r1, dtype=np.float64))
        vals = np.min(
            self.support_values[None, :] - np.outer(r1, self.lambdas), axis=1
        )
        return np.maximum(vals, 0.0)

    def contains(self, r1: float, r2: float, r0: float = 0.0, tol: float = 1e-12) -> bool:
        if min(r0, r1, r2) < -tol:
            return False
        return r0 + r2 <= float(self.boundary_at(r1)[0]) + tol

    def validate(self, tol: float = SHAPE_TOL) -> None:
        """Boundary must be nonincreasing and concave within tol.

        Concavity is checked up to the first clamped (zero) point; after
        it the boundary must stay on the axis.
        """
        r1, r2 = self.boundary_r1, self.boundary_r2
        if r2.size > 1 and float(np.max(r2[1:] - r2[:-1])) > tol:
            raise NotStochastic(f"boundary increases by {float(np.max(r2[1:] - r2[:-1])):.3e}")
        zero = np.nonzero(r2 <= tol)[0]
        cut = int(zero[0]) + 1 if zero.size else r2.size
        if np.any(r2[cut:] > tol):
            raise NotStochastic("boundary leaves the axis after clamping")
        rr1, rr2 = r1[:cut], r2[:cut]
        if rr1.size > 2:
            slopes = np.diff(rr2) / np.diff(rr1)
            worst = float(np.max(slopes[1:] - slopes[:-1]))
            if worst > tol:
                raise NotStochastic(f"boundary convexity violation {worst:.3e}")


def region_from_lines(
    n: int,
    lambdas: np.ndarray,
    values: np.ndarray,
    r1_grid=None,
    meta: dict | None = None,
) -> RateRegion:
    """Assemble a region from supporting lines; default R1 grid spans
    [0, r1_max] where the unclamped boundary crosses zero."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if lambdas.size == 0:
        raise EmptySupport("no supporting lines")
    meta = dict(meta or {})
    if r1_grid is None:
        if float(values.min()) < 0.0:
            meta["empty"] = True
            r1_grid = np.zeros(1)
        else:
            pos = lambdas > 0.0
            if np.any(pos):
                r1_max = float(np.min(values[pos] / lambdas[pos]))
            else:
                # only horizontal lines: R1 capped by the trivial log |X|^n
                r1_max = float(meta.get("r1_cap", n * math.log2(8)))
            r1_grid = np.linspace(0.0, max(r1_max, 0.0), max(lambdas.size, 2))
    else:
        r1_grid = np.asarray(r1_grid, dtype=np.float64)
    region = RateRegion(
        n=n,
        lambdas=lambdas,
        support_values=values,
        boundary_r1=r1_grid,
        boundary_r2=np.zeros_like(r1_grid),
        meta=meta,
    )
    region.boundary_r2 = region.boundary_at(r1_grid)
    return region


def boundary_from_support(sf: SupportFunction, r1_grid=None) -> RateRegion:
    """Region of the min-over-states support values (the maxmin F_n)."""
    return region_from_lines(
        sf.n,
        sf.lambdas,
        sf.values,
        r1_grid=r1_grid,
        meta={"kind": "maxmin", "kernel": sf.kernel_label},
    )


def per_state_regions(sf: SupportFunction, r1_grid=None) -> list[RateRegion]:
    return [
        region_from_lines(
            sf.n,
            sf.lambdas,
            sf.per_state[k],
            r1_grid=r1_grid,
            meta={"kind": "fixed-state", "s0": k, "kernel": sf.kernel_label},
        )
        for k in range(sf.per_state.shape[0])
    ]


def intersect_regions(regions: list[RateRegion], minmax_region: RateRegion | None = None) -> RateRegion:
    """Pointwise-minimum region over per-initial-state regions.

    All operands must share one lambda grid.  When the maxmin region is
    supplied, the per-lambda gap min_s F^(s) - F_maxmin is recorded in
    meta["minmax_gap"] for side-by-side reporting.
    """
    if not regions:
        raise EmptySupport("nothing to intersect")
    lams = regions[0].lambdas
    n = regions[0].n
    for reg in regions[1:]:
        if reg.n != n or not np.array_equal(reg.lambdas, lams):
            raise GridMismatch("regions were computed on different grids")
    stack = np.stack([reg.support_values for reg in regions])
    values = stack.min(axis=0)
    meta = {
        "kind": "intersection",
        "argmin_state": np.argmin(stack, axis=0).tolist(),
    }
    if minmax_region is not None:
        if not np.array_equal(minmax_region.lambdas, lams):
            raise GridMismatch("maxmin region grid differs from intersection grid")
        meta["minmax_gap"] = (values - minmax_region.support_values).tolist()
    return region_from_lines(n, lams, values, meta=meta)


@dataclass
class SupAddReport:
    """Per-block sup-additivity and boundedness checks at one lambda."""

    lam: float
    n: int
    f_by_length: dict
    checks: list
    bound_ok: bool
    bound_margin: float
    slack: float = SUPADD_SLACK


def supadditivity_check(
    kernel: FsbcKernel,
    lam: float,
    n: int,
    partitions=None,
    config: OptimConfig | None = None,
) -> SupAddReport:
    """Check n F_n >= l F_l + m F_m (within slack) for the given splits.

    Also checks the uniform bound F <= log2|Z| + lam log2|X| for every
    computed length.  Slack absorbs optimizer undershoot only; genuine
    violations beyond it indicate a defect.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    if n < 2:
        raise DomainError(f"sup-additivity needs n >= 2, got {n}")
    if partitions is None:
        partitions = [(l, n - l) for l in range(1, n // 2 + 1)]
    for l, m in partitions:
        if l < 1 or m < 1 or l + m != n:
            raise DomainError(f"partition ({l}, {m}) does not split {n}")
    lengths = sorted({n} | {l for p in partitions for l in p})
    f_by_length = {
        length: optimize_support(kernel, lam, length, config=config).value
        for length in lengths
    }
    checks = []
    for l, m in partitions:
        lhs = n * f_by_length[n]
        rhs = l * f_by_length[l] + m * f_by_length[m]
        checks.append(
            {
                "l": l,
                "m": m,
                "lhs_n_Fn": lhs,
                "rhs_split": rhs,
                "ok": lhs >= rhs - SUPADD_SLACK,
            }
        )
    bound = math.log2(kernel.z_size) + lam * math.log2(kernel.x_size)
    worst = max(f_by_length.values())
    return SupAddReport(
        lam=lam,
        n=n,
        f_by_length=f_by_length,
        checks=checks,
        bound_ok=worst <= bound + 1e-9,
        bound_margin=bound - worst,
    )
