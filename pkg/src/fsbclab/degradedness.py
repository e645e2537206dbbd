"""Degradedness certification and state-memory diagnostics.

Two notions are checked.  Physical degradedness is a property of the
block law: the strong receiver's symbol may depend only on the input and
its own past, and the weak receiver's symbol must be reachable through
the strong one.  Stochastic degradedness only constrains the one-step
marginals: some memoryless map p~(z|y) must turn the Y leg into the Z
leg for every (state, input, next-state) event.

Conditional laws are formed under a uniform i.i.d. input, which is full
support; conditioning events below probability 1e-12 are skipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ENUM_BUDGET,
    BlockLaw,
    DegradingKernel,
    FsbcKernel,
    block_law,
    decode_block,
)
from .errors import BudgetExceeded, DimensionMismatch, DomainError, SolverStalled

EVENT_CUTOFF = 1e-12
DEFAULT_TOL = 1e-9
DEGRADING_STARTS = 16
GRID_FALLBACK_CELLS = 9


@dataclass
class PhysicalReport:
    """Outcome of the block-level physical degradedness check."""

    verdict: str  # "holds", "fails", or "budget-exceeded"
    worst_violation: float
    witness: dict | None
    n_checked: int
    tol: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "n_checked": self.n_checked,
            "tol": self.tol,
        }


@dataclass
class StochasticReport:
    """Outcome of the one-step degrading-map search."""

    verdict: str  # "feasible" or "infeasible"
    residual: float
    degrading_kernel: DegradingKernel | None
    best_map: np.ndarray
    tol: float
    grid_checked: bool

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "residual": self.residual,
            "degrading_kernel": None
            if self.degrading_kernel is None
            else self.degrading_kernel.probs.tolist(),
            "best_map": self.best_map.tolist(),
            "tol": self.tol,
            "grid_checked": self.grid_checked,
        }


@dataclass
class DegradednessReport:
    physical: PhysicalReport
    stochastic: StochasticReport

    def to_dict(self) -> dict:
        return {"physical": self.physical.to_dict(), "stochastic": self.stochastic.to_dict()}


@dataclass
class IndecomposabilityReport:
    """State-memory decay trace and verdict.

    d(n) is the largest spread, over input blocks and terminal states, of
    the state posterior across two initial states.  A positive verdict
    needs both d(N) below target and a strictly positive column in every
    length-N product; a negative verdict needs deterministic transitions
    whose reachable sets stay disjoint at n_max.  Anything else is
    inconclusive: slow decay alone proves nothing.
    """

    verdict: str  # "indecomposable", "not-indecomposable", "inconclusive"
    n_star: int | None
    trace: list
    eps_target: float
    n_max: int
    structural_ok: bool
    deterministic: bool
    input_independent: bool
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n_star": self.n_star,
            "trace": self.trace,
            "eps_target": self.eps_target,
            "n_max": self.n_max,
            "structural_ok": self.structural_ok,
            "deterministic": self.deterministic,
            "input_independent": self.input_independent,
            "witness": self.witness,
        }


def _masked_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(num.shape, den.shape))
    np.divide(num, den, out=out, where=den > 0.0)
    return out


def _level_violations(kernel: FsbcKernel, law: BlockLaw, i: int):
    """Worst conditional-independence violations at block level i.

    Returns (v_strong, w_strong, v_weak, w_weak): violations and flat
    argmax witnesses for the strong-receiver memory condition and the
    routed-through-y condition.
    """
    ny, nz = kernel.y_size, kernel.z_size
    nyp, nzp = ny ** (i - 1), nz ** (i - 1)
    nx = law.p_yz.shape[0]
    j = law.p_yz.reshape(nx, nyp, ny, nzp, nz)
    a = j.sum(axis=4)  # p(y^i, z^{i-1} | x^i)
    b = a.sum(axis=2)  # p(y^{i-1}, z^{i-1} | x^i)
    c = j.sum(axis=(3, 4))  # p(y^i | x^i)
    d = c.sum(axis=2)
    cut = EVENT_CUTOFF * nx
    mask_b = (b > cut)[:, :, None, :]
    lhs = _masked_div(a, b[:, :, None, :])
    rhs = _masked_div(c, d[:, :, None])[:, :, :, None]
    diff = np.where(mask_b, np.abs(lhs - rhs), 0.0)
    v_strong = float(diff.max())
    w_strong = int(diff.argmax())

    mask_a = (a > cut)[:, :, :, :, None]
    lhs2 = _masked_div(j, a[..., None])
    rhs2 = _masked_div(j.sum(axis=0), a.sum(axis=0)[..., None])[None]
    diff2 = np.where(mask_a, np.abs(lhs2 - rhs2), 0.0)
    v_weak = float(diff2.max())
    w_weak = int(diff2.argmax())
    return v_strong, w_strong, v_weak, w_weak, j.shape


def _decode_witness(kind: str, flat: int, shape, kernel: FsbcKernel, i: int, s0: int) -> dict:
    nx_, nyp_, ny_, nzp_, nz_ = shape
    if kind == "strong":
        xi, ypi, yi, zpi = np.unravel_index(flat, (nx_, nyp_, ny_, nzp_))
        zseq = decode_block(int(zpi), kernel.z_size, i - 1).tolist()
    else:
        xi, ypi, yi, zpi, zi = np.unravel_index(flat, shape)
        zseq = decode_block(int(zpi), kernel.z_size, i - 1).tolist() + [int(zi)]
    return {
        "condition": "strong-receiver-memory" if kind == "strong" else "routed-through-y",
        "i": i,
        "s0": s0,
        "x_block": decode_block(int(xi), kernel.x_size, i).tolist(),
        "y_block": decode_block(int(ypi), kernel.y_size, i - 1).tolist() + [int(yi)],
        "z_block": zseq,
    }


def check_physical_degraded(
    kernel: FsbcKernel,
    n_max: int = 3,
    tol: float = DEFAULT_TOL,
    budget: int = ENUM_BUDGET,
) -> PhysicalReport:
    """Verify the two block-level conditional independences up to n_max.

    Both conditionals are formed under a uniform input law; the second
    condition (z routed through y) holds for every full-support input iff
    it holds for one, so the uniform choice is not a loss of generality.
    """
    worst = 0.0
    witness = None
    checked = 0
    for i in range(1, n_max + 1):
        for s0 in range(kernel.s_size):
            try:
                law = block_law(kernel, i, s0, budget=budget)
            except BudgetExceeded:
                if i == 1:
                    raise
                verdict = "fails" if worst > tol else "budget-exceeded"
                return PhysicalReport(verdict, worst, witness, checked, tol)
            v_s, w_s, v_w, w_w, shape = _level_violations(kernel, law, i)
            if v_s > worst:
                worst = v_s
                witness = _decode_witness("strong", w_s, shape, kernel, i, s0)
            if v_w > worst:
                worst = v_w
                witness = _decode_witness("weak", w_w, shape, kernel, i, s0)
        checked = i
    verdict = "holds" if worst <= tol else "fails"
    if verdict == "holds":
        witness = None
    return PhysicalReport(verdict, worst, witness, checked, tol)


def factorization_deviation(
    kernel: FsbcKernel, n: int, s0: int, budget: int = ENUM_BUDGET
) -> float:
    """Deviation of the block law from p(y|x) p(z|y) (uniform-input p(z|y))."""
    law = block_law(kernel, n, s0, budget=budget)
    num = law.p_yz.sum(axis=0)  # proportional to p(y^n, z^n) under uniform x
    den = num.sum(axis=1)
    cond = _masked_div(num, den[:, None])
    return float(np.max(np.abs(law.p_yz - law.p_y[:, :, None] * cond[None, :, :])))


def _event_matrices(kernel: FsbcKernel):
    """Stack the one-step marginals as (events, Y) and (events, Z)."""
    a = kernel.y_step().transpose(0, 1, 3, 2).reshape(-1, kernel.y_size)
    b = kernel.z_step().transpose(0, 1, 3, 2).reshape(-1, kernel.z_size)
    return np.ascontiguousarray(a), np.ascontiguousarray(b)


def _project_rows(p: np.ndarray) -> np.ndarray:
    from ._purepy import project_simplex

    return np.stack([project_simplex(row) for row in p])


def _residual(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    return float(np.max(np.abs(a @ p - b)))


def _descend(a: np.ndarray, b: np.ndarray, p0: np.ndarray, tol: float, max_iters: int = 20000):
    """Projected gradient descent on ||A P - B||_F^2 over row-stochastic P."""
    lip = 2.0 * np.linalg.norm(a, 2) ** 2
    step = 1.0 / max(lip, 1e-12)
    p = p0.copy()
    last = np.inf
    for it in range(max_iters):
        r = a @ p - b
        p = _project_rows(p - step * (2.0 * a.T @ r))
        if it % 50 == 49:
            sq = float(np.sum((a @ p - b) ** 2))
            if last - sq < 1e-18 or np.max(np.abs(a @ p - b)) < tol * 1e-2:
                return p, True
            last = sq
    return p, False


def _row_grid(z: int, units: int) -> np.ndarray:
    """All stochastic rows over z entries at resolution 1/units."""
    combos = []
    for comp in itertools.combinations(range(units + z - 1), z - 1):
        prev = -1
        row = []
        for c in comp:
            row.append(c - prev - 1)
            prev = c
        row.append(units + z - 2 - prev)
        combos.append(row)
    return np.array(combos, dtype=np.float64) / units


def _grid_minimum(a: np.ndarray, b: np.ndarray, units: int):
    """Exhaustive search of row-stochastic maps at resolution 1/units."""
    y, z = a.shape[1], b.shape[1]
    rows = _row_grid(z, units)
    best = np.inf
    best_p = None
    chunk = 20000
    combo_iter = itertools.product(range(len(rows)), repeat=y)
    while True:
        batch = list(itertools.islice(combo_iter, chunk))
        if not batch:
            break
        ps = rows[np.array(batch)]  # (batch, Y, Z)
        res = np.max(np.abs(np.einsum("ey,byz->bez", a, ps) - b[None]), axis=(1, 2))
        k = int(np.argmin(res))
        if res[k] < best:
            best = float(res[k])
            best_p = ps[k]
    return best, best_p


def find_degrading_kernel(
    kernel: FsbcKernel,
    tol: float = DEFAULT_TOL,
    starts: int = DEGRADING_STARTS,
    seed: int = 0,
) -> StochasticReport:
    """Search for a memoryless p~(z|y) matching the one-step marginals.

    Minimizes the squared mismatch by multistart projected descent; the
    reported residual is the max-abs violation.  A least-squares start
    lands on the exact map whenever one exists and the Y leg has full
    column rank.  For small maps (|Y| |Z| <= 9) an exhaustive grid runs
    as a fallback before declaring infeasibility.
    """
    a, b = _event_matrices(kernel)
    y, z = kernel.y_size, kernel.z_size
    candidates = []
    ls = np.linalg.lstsq(a, b, rcond=None)[0]
    candidates.append(_project_rows(ls))
    candidates.append(np.full((y, z), 1.0 / z))
    eye = np.zeros((y, z))
    eye[np.arange(y), np.minimum(np.arange(y), z - 1)] = 1.0
    candidates.append(eye)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(11,)))
    for _ in range(starts):
        candidates.append(rng.dirichlet(np.ones(z), size=y))

    best_p = None
    best_res = np.inf
    any_converged = False
    for p0 in candidates:
        p, ok = _descend(a, b, p0, tol)
        any_converged = any_converged or ok
        res = _residual(a, b, p)
        if res < best_res:
            best_res, best_p = res, p

    grid_checked = False
    if best_res >= tol and y * z <= GRID_FALLBACK_CELLS:
        units = 1000 if y * (z - 1) <= 2 else 20
        gres, gp = _grid_minimum(a, b, units)
        grid_checked = True
        if gp is not None:
            gp, _ = _descend(a, b, gp, tol)
            res = _residual(a, b, gp)
            if res < best_res:
                best_res, best_p = res, gp
    if best_res >= tol and not grid_checked and not any_converged:
        raise SolverStalled(
            f"degrading-map search stalled at residual {best_res:.3e}",
            best=best_p,
        )
    feasible = best_res < tol
    return StochasticReport(
        verdict="feasible" if feasible else "infeasible",
        residual=best_res,
        degrading_kernel=DegradingKernel(best_p) if feasible else None,
        best_map=best_p,
        tol=tol,
        grid_checked=grid_checked,
    )


def verify_block_degrading(
    kernel: FsbcKernel,
    dk: DegradingKernel,
    n: int,
    s0: int,
    budget: int = ENUM_BUDGET,
) -> float:
    """Max deviation between p(z-block | x-block, s0) and the Y-block law
    pushed through the n-fold product of p~."""
    if dk.y_size != kernel.y_size or dk.z_size != kernel.z_size:
        raise DimensionMismatch(
            f"degrading kernel is {dk.y_size}x{dk.z_size}, channel needs "
            f"{kernel.y_size}x{kernel.z_size}"
        )
    law = block_law(kernel, n, s0, budget=budget)
    pushed = law.p_y @ dk.block_matrix(n)
    return float(np.max(np.abs(law.p_z - pushed)))


def check_indecomposable(
    kernel: FsbcKernel,
    eps_target: float = 0.05,
    n_max: int = 12,
    budget: int = ENUM_BUDGET,
) -> IndecomposabilityReport:
    """Trace the worst initial-state influence d(n) over all input blocks.

    Input-independent chains collapse the enumeration to a single matrix
    power; otherwise all |X|^n products are formed (budget permitting).
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    trans = kernel.transitions()
    s = kernel.s_size
    input_independent = all(
        np.allclose(trans[x], trans[0], atol=1e-14) for x in range(1, kernel.x_size)
    )
    branching = 1 if input_independent else kernel.x_size
    if branching**n_max * s * s > budget:
        raise BudgetExceeded(
            f"|X|^n_max * |S|^2 = {branching ** n_max * s * s} exceeds budget {budget}"
        )
    det = bool(np.all((trans < 1e-12) | (trans > 1.0 - 1e-12)))

    level = np.eye(s)[None, :, :]
    trace = []
    n_star = None
    structural_ok = False
    step_mats = trans[:1] if input_independent else trans
    for n in range(1, n_max + 1):
        level = np.einsum("kij,xjl->kxil", level, step_mats).reshape(-1, s, s)
        d = float(np.max(level.max(axis=1) - level.min(axis=1)))
        trace.append(d)
        if n_star is None and d < eps_target:
            n_star = n
            # every product must have some terminal state reachable from
            # all initial states with positive probability
            structural_ok = bool(all(np.any(np.all(m > 0.0, axis=0)) for m in level))

    witness = None
    disjoint = False
    if det and n_star is None:
        support = level > 1e-12
        for k in range(level.shape[0]):
            for s0a in range(s):
                for s0b in range(s0a + 1, s):
                    if not np.any(support[k, s0a] & support[k, s0b]):
                        disjoint = True
                        witness = {
                            "pair": [s0a, s0b],
                            "input_block": "any" if input_independent else int(k),
                        }
                        break
                if disjoint:
                    break
            if disjoint:
                break

    if n_star is not None and structural_ok:
        verdict = "indecomposable"
    elif det and disjoint:
        verdict = "not-indecomposable"
    else:
        verdict = "inconclusive"
    return IndecomposabilityReport(
        verdict=verdict,
        n_star=n_star,
        trace=trace,
        eps_target=eps_target,
        n_max=n_max,
        structural_ok=structural_ok,
        deterministic=det,
        input_independent=input_independent,
        witness=witness,
    )
