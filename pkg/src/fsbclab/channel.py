"""Finite-state broadcast channel kernels and exact block distributions.

A channel is a stochastic tensor p(y, z, s | x, s') over finite alphabets,
stored in the fixed index order (s_prev, x, y, z, s_next).  Conditioned on
an input block and an initial state, the n-fold law factors through the
state chain; :func:`block_law` materializes it as dense tables over
enumerated blocks.  Block indices are big-endian: the first symbol of a
block is the most significant digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    DomainError,
    InvalidSpec,
    NegativeEntry,
    NotStochastic,
)

ALPHABET_CAP = 8
ENUM_BUDGET = 1 << 24
VALIDATION_TOL = 1e-12
ARITHMETIC_TOL = 1e-9


def encode_block(symbols, base: int) -> int:
    """Big-endian index of a symbol sequence; first symbol most significant."""
    idx = 0
    for s in symbols:
        s = int(s)
        if not 0 <= s < base:
            raise DomainError(f"symbol {s} outside alphabet of size {base}")
        idx = idx * base + s
    return idx


def decode_block(index: int, base: int, n: int) -> np.ndarray:
    """Inverse of :func:`encode_block`; returns an int array of length n."""
    if not 0 <= index < base**n:
        raise DomainError(f"block index {index} outside range for base {base}, n {n}")
    out = np.empty(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        index, out[i] = divmod(index, base)
    return out


def decode_blocks(indices, base: int, n: int) -> np.ndarray:
    """Vectorized :func:`decode_block`; returns shape (len(indices), n)."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty(idx.shape + (n,), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        idx, out[..., i] = np.divmod(idx, base)
    return out


def _check_probability_tensor(arr: np.ndarray, axes, tol: float, what: str) -> None:
    """Entries nonnegative, rows over `axes` normalized within tol."""
    neg = arr < 0.0
    if np.any(neg):
        pos = np.argwhere(neg)[0]
        raise NegativeEntry(
            f"{what} has negative entry {arr[tuple(pos)]:.3e} at index {tuple(pos)}"
        )
    sums = arr.sum(axis=axes)
    worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
    if worst > tol:
        raise NotStochastic(f"{what} row sums deviate from 1 by {worst:.3e} (tol {tol:g})")


@dataclass(frozen=True)
class FsbcKernel:
    """One-step broadcast channel law p(y, z, s | x, s').

    probs has shape (S, X, Y, Z, S) with index order
    (s_prev, x, y, z, s_next).  Validation runs at construction; the
    tensor is frozen afterwards.
    """

    probs: np.ndarray
    label: str = "fsbc"

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 5:
            raise DimensionMismatch(f"kernel tensor must be 5-d, got {probs.ndim}-d")
        s0, x, y, z, s1 = probs.shape
        if s0 != s1:
            raise DimensionMismatch(f"state axes disagree: {s0} != {s1}")
        for name, size in (("S", s0), ("X", x), ("Y", y), ("Z", z)):
            if size < 1:
                raise InvalidSpec(f"alphabet {name} must be nonempty")
            if size > ALPHABET_CAP:
                raise InvalidSpec(f"alphabet {name} has size {size}, cap is {ALPHABET_CAP}")
        _check_probability_tensor(probs, (2, 3, 4), VALIDATION_TOL, "kernel")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def s_size(self) -> int:
        return self.probs.shape[0]

    @property
    def x_size(self) -> int:
        return self.probs.shape[1]

    @property
    def y_size(self) -> int:
        return self.probs.shape[2]

    @property
    def z_size(self) -> int:
        return self.probs.shape[3]

    def y_step(self) -> np.ndarray:
        """Marginal one-step law p(y, s | x, s'), shape (S, X, Y, S)."""
        return self.probs.sum(axis=3)

    def z_step(self) -> np.ndarray:
        """Marginal one-step law p(z, s | x, s'), shape (S, X, Z, S)."""
        return self.probs.sum(axis=2)

    def transitions(self) -> np.ndarray:
        """Per-input state transition matrices T_x(s' -> s), shape (X, S, S)."""
        return self.probs.sum(axis=(2, 3)).transpose(1, 0, 2)


def validate_kernel(probs, sizes=None, label: str = "fsbc") -> FsbcKernel:
    """Construct a kernel from a raw tensor, checking shape and stochasticity.

    sizes, when given, is (X, Y, Z, S) and is checked against the tensor
    shape; a mismatch names the offending axis.
    """
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 5:
        raise DimensionMismatch(f"kernel tensor must be 5-d, got {arr.ndim}-d")
    if sizes is not None:
        x, y, z, s = (int(v) for v in sizes)
        expected = (s, x, y, z, s)
        if arr.shape != expected:
            raise DimensionMismatch(
                f"tensor shape {arr.shape} does not match declared "
                f"(S, X, Y, Z, S) = {expected}"
            )
    return FsbcKernel(arr, label=label)


@dataclass(frozen=True)
class BsbcFamilySpec:
    """Binary-symmetric broadcast family driven by a common state chain.

    Per state k, the X-to-Y leg is a BSC with crossover eps1[k] and the
    Y-to-Z leg a BSC with crossover eps12[k]; the state evolves by
    state_chain independently of the input.
    """

    state_chain: np.ndarray
    eps1: np.ndarray
    eps12: np.ndarray
    label: str = "bsbc"

    def __post_init__(self):
        chain = np.asarray(self.state_chain, dtype=np.float64)
        e1 = np.atleast_1d(np.asarray(self.eps1, dtype=np.float64))
        e12 = np.atleast_1d(np.asarray(self.eps12, dtype=np.float64))
        if chain.ndim != 2 or chain.shape[0] != chain.shape[1]:
            raise InvalidSpec(f"state_chain must be square, got shape {chain.shape}")
        k = chain.shape[0]
        if k > ALPHABET_CAP:
            raise InvalidSpec(f"state count {k} exceeds cap {ALPHABET_CAP}")
        if e1.shape != (k,) or e12.shape != (k,):
            raise InvalidSpec(
                f"eps1/eps12 must have one entry per state ({k}), "
                f"got {e1.shape} and {e12.shape}"
            )
        if np.any(chain < 0.0):
            raise InvalidSpec("state_chain has a negative entry")
        worst = float(np.max(np.abs(chain.sum(axis=1) - 1.0)))
        if worst > VALIDATION_TOL:
            raise InvalidSpec(f"state_chain rows deviate from 1 by {worst:.3e}")
        if np.any(e1 <= 0.0) or np.any(e1 >= 0.5):
            raise InvalidSpec("eps1 entries must lie in the open interval (0, 0.5)")
        # 0 (noiseless relay) and 0.5 (useless relay) are both meaningful.
        if np.any(e12 < 0.0) or np.any(e12 > 0.5):
            raise InvalidSpec("eps12 entries must lie in [0, 0.5]")
        for name, val in (("state_chain", chain), ("eps1", e1), ("eps12", e12)):
            val = val.copy()
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @property
    def s_size(self) -> int:
        return self.state_chain.shape[0]


def bsc_matrix(eps: float) -> np.ndarray:
    """Binary symmetric channel matrix [[1-eps, eps], [eps, 1-eps]]."""
    return np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])


def crossover_compose(eps_a: float, eps_b: float) -> float:
    """Crossover of two cascaded BSCs: eps_a (1 - eps_b) + (1 - eps_a) eps_b."""
    if not 0.0 < eps_a < 0.5:
        raise DomainError(f"eps_a = {eps_a} outside (0, 0.5)")
    if not 0.0 <= eps_b <= 0.5:
        raise DomainError(f"eps_b = {eps_b} outside [0, 0.5]")
    return eps_a * (1.0 - eps_b) + (1.0 - eps_a) * eps_b


def crossover_residual(eps1: float, eps2: float) -> float:
    """Crossover of the BSC turning BSC(eps1) into BSC(eps2) in cascade.

    Solves crossover_compose(eps1, r) = eps2 for r, requiring
    0 < eps1 <= eps2 < 0.5 so that r lands in [0, 0.5).
    """
    if not 0.0 < eps1 < 0.5:
        raise DomainError(f"eps1 = {eps1} outside (0, 0.5)")
    if not eps1 <= eps2 < 0.5:
        raise DomainError(f"eps2 = {eps2} outside [eps1, 0.5)")
    return (eps2 - eps1) / (1.0 - 2.0 * eps1)


def build_bsbc_family(spec: BsbcFamilySpec) -> FsbcKernel:
    """Kernel p(y, z, s | x, s') = chain(s' -> s) BSC_eps1[s](y|x) BSC_eps12[s](z|y)."""
    k = spec.s_size
    b1 = np.stack([bsc_matrix(e) for e in spec.eps1])
    b12 = np.stack([bsc_matrix(e) for e in spec.eps12])
    probs = np.einsum("ps,sxy,syz->pxyzs", spec.state_chain, b1, b12)
    return FsbcKernel(probs, label=spec.label)


@dataclass(frozen=True)
class DegradingKernel:
    """Memoryless per-symbol map p~(z | y), shape (Y, Z), row-stochastic."""

    probs: np.ndarray
    label: str = "degrading"

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise DimensionMismatch(f"degrading kernel must be 2-d, got {probs.ndim}-d")
        _check_probability_tensor(probs, (1,), VALIDATION_TOL, "degrading kernel")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def y_size(self) -> int:
        return self.probs.shape[0]

    @property
    def z_size(self) -> int:
        return self.probs.shape[1]

    def block_matrix(self, n: int) -> np.ndarray:
        """n-fold product map over blocks, shape (Y^n, Z^n), big-endian."""
        out = self.probs
        for _ in range(n - 1):
            out = np.kron(out, self.probs)
        return out


def compose_degraded(y_leg, dk: DegradingKernel, label: str | None = None) -> FsbcKernel:
    """Route a Y-marginal law through a memoryless degrading map.

    y_leg is either a kernel (its Y marginal is used) or a raw tensor
    p(y, s | x, s') of shape (S, X, Y, S).  Returns the kernel
    p(y, z, s | x, s') = y_leg(y, s | x, s') p~(z | y).
    """
    if isinstance(y_leg, FsbcKernel):
        leg = y_leg.y_step()
        if label is None:
            label = f"{y_leg.label}+degraded"
    else:
        leg = np.asarray(y_leg, dtype=np.float64)
        if label is None:
            label = "composed"
    if leg.ndim != 4 or leg.shape[0] != leg.shape[3]:
        raise DimensionMismatch(f"y_leg must have shape (S, X, Y, S), got {leg.shape}")
    if leg.shape[2] != dk.y_size:
        raise DimensionMismatch(
            f"y_leg Y-size {leg.shape[2]} does not match degrading kernel {dk.y_size}"
        )
    _check_probability_tensor(leg, (2, 3), VALIDATION_TOL, "y_leg")
    probs = np.einsum("pxyq,yz->pxyzq", leg, dk.probs)
    return FsbcKernel(probs, label=label)


@dataclass(frozen=True)
class BlockLaw:
    """Dense n-block conditional laws for one initial state.

    p_yz[x, y, z] = p(y^n, z^n | x^n, s0); p_y and p_z are its output
    marginals.  Indices enumerate blocks big-endian.
    """

    n: int
    s0: int
    p_y: np.ndarray
    p_z: np.ndarray
    p_yz: np.ndarray

    def __post_init__(self):
        _check_probability_tensor(self.p_yz, (1, 2), ARITHMETIC_TOL, "block law")
        if (
            float(np.max(np.abs(self.p_yz.sum(axis=2) - self.p_y))) > ARITHMETIC_TOL
            or float(np.max(np.abs(self.p_yz.sum(axis=1) - self.p_z))) > ARITHMETIC_TOL
        ):
            raise NotStochastic("block law marginals inconsistent with joint")
        for name in ("p_y", "p_z", "p_yz"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def block_law(kernel: FsbcKernel, n: int, s0: int, budget: int = ENUM_BUDGET) -> BlockLaw:
    """Exact n-block law by forward recursion over the state.

    Carries p(y^i, z^i, s_i | x^i, s0) and appends one symbol at a time,
    so cost is linear in the final table size; the state is summed out at
    the end.  Raises BudgetExceeded when |X|^n |Y|^n |Z|^n would pass
    `budget` cells.
    """
    if n < 1:
        raise DomainError(f"block length must be >= 1, got {n}")
    if not 0 <= s0 < kernel.s_size:
        raise DomainError(f"initial state {s0} outside [0, {kernel.s_size})")
    nx, ny, nz = kernel.x_size**n, kernel.y_size**n, kernel.z_size**n
    cells = nx * ny * nz
    if cells > budget:
        raise BudgetExceeded(
            f"|X|^n * |Y|^n * |Z|^n = {cells} exceeds enumeration budget {budget}"
        )
    s = kernel.s_size
    alpha = np.zeros((1, 1, 1, s))
    alpha[0, 0, 0, s0] = 1.0
    for _ in range(n):
        alpha = np.einsum("abcp,pxyzs->axbyczs", alpha, kernel.probs)
        na, nb, nc = alpha.shape[0] * alpha.shape[1], alpha.shape[2] * alpha.shape[3], alpha.shape[4] * alpha.shape[5]
        alpha = alpha.reshape(na, nb, nc, s)
    p_yz = alpha.sum(axis=3)
    return BlockLaw(n=n, s0=s0, p_y=p_yz.sum(axis=2), p_z=p_yz.sum(axis=1), p_yz=p_yz)


def state_transition_products(kernel: FsbcKernel, xblock) -> np.ndarray:
    """Product T_{x_1} ... T_{x_n} of per-input transition matrices.

    Entry [s0, s] is p(s_n = s | x^n, s_0 = s0).
    """
    trans = kernel.transitions()
    out = np.eye(kernel.s_size)
    for x in np.asarray(xblock, dtype=np.int64):
        if not 0 <= x < kernel.x_size:
            raise DomainError(f"input symbol {x} outside alphabet of size {kernel.x_size}")
        out = out @ trans[x]
    return out


def sample_block(kernel: FsbcKernel, xblock, s0: int, seed: int):
    """Sample (y^n, z^n, s_1..s_n) for a fixed input block and initial state.

    Deterministic given seed; walks the state chain one symbol at a time.
    """
    if not 0 <= s0 < kernel.s_size:
        raise DomainError(f"initial state {s0} outside [0, {kernel.s_size})")
    xs = np.asarray(xblock, dtype=np.int64)
    rng = np.random.default_rng(seed)
    ny, nz, ns = kernel.y_size, kernel.z_size, kernel.s_size
    ys = np.empty(len(xs), dtype=np.int64)
    zs = np.empty(len(xs), dtype=np.int64)
    states = np.empty(len(xs), dtype=np.int64)
    state = s0
    for i, x in enumerate(xs):
        if not 0 <= x < kernel.x_size:
            raise DomainError(f"input symbol {x} outside alphabet of size {kernel.x_size}")
        flat = kernel.probs[state, x].ravel()
        cum = np.cumsum(flat)
        draw = rng.random() * cum[-1]
        idx = int(np.searchsorted(cum, draw, side="right"))
        idx = min(idx, flat.size - 1)
        ys[i], rem = divmod(idx, nz * ns)
        zs[i], state = divmod(rem, ns)
        states[i] = state
    return ys, zs, states
