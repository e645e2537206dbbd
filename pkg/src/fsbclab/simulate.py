"""Monte Carlo superposition coding over a finite-state broadcast channel.

Cloud centers carry the far receiver's message over auxiliary blocks;
satellites carry the near receiver's message over input blocks drawn
conditionally on the cloud.  Any common message is folded into the cloud
index.  Decoding is exact maximum likelihood: the near receiver ranks
all (m1, m2) pairs by the Y-block likelihood, the far receiver ranks m2
by the satellite-averaged Z-block likelihood, both computed by the state
forward recursion from the transmit-side initial state.  Ties break to
the smallest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ENUM_BUDGET, FsbcKernel, decode_blocks
from .errors import BudgetExceeded, DomainError, RateTooHigh
from .region import JointInputLaw

MESSAGE_CAP = 1 << 10
_CEIL_GUARD = 1e-9


@dataclass(frozen=True)
class SuperpositionCodebook:
    """Randomly drawn two-layer codebook over K super-symbols.

    cloud[m2, k] indexes an auxiliary block; satellites[m2, m1, k]
    indexes an input block drawn from q(x-block | u-block).  Pair index
    convention: pair = m1 * m2_size + m2.
    """

    q: JointInputLaw
    k_blocks: int
    rate1: float
    rate2: float
    m1_size: int
    m2_size: int
    cloud: np.ndarray
    satellites: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def total_symbols(self) -> int:
        return self.k_blocks * self.q.n

    def pair_codewords(self, x_size: int) -> np.ndarray:
        """Input symbol sequences per (m1, m2) pair, shape (M1*M2, K*n)."""
        m1s, m2s = self.m1_size, self.m2_size
        pairs = np.empty((m1s * m2s, self.k_blocks), dtype=np.int64)
        for m1 in range(m1s):
            for m2 in range(m2s):
                pairs[m1 * m2s + m2] = self.satellites[m2, m1]
        return decode_blocks(pairs, x_size, self.n).reshape(m1s * m2s, -1)


def message_set_size(rate: float, symbols: int) -> int:
    """ceil(2^(symbols * rate)) with a guard against float wobble."""
    if rate < 0.0:
        raise DomainError(f"rate must be nonnegative, got {rate}")
    return max(1, math.ceil(2.0 ** (symbols * rate) - _CEIL_GUARD))


def build_codebook(
    q: JointInputLaw,
    k_blocks: int,
    rate1: float,
    rate2: float,
    seed: int,
    cap: int = MESSAGE_CAP,
) -> SuperpositionCodebook:
    """Draw a superposition codebook at the requested per-symbol rates.

    Message counts are ceil(2^(K n rate)); both layers are i.i.d. across
    super-symbols and messages, satellites conditionally on their cloud.
    """
    if k_blocks < 1:
        raise DomainError(f"k_blocks must be >= 1, got {k_blocks}")
    symbols = k_blocks * q.n
    m1_size = message_set_size(rate1, symbols)
    m2_size = message_set_size(rate2, symbols)
    for name, size in (("m1", m1_size), ("m2", m2_size)):
        if size > cap:
            raise RateTooHigh(f"{name} message set of {size} exceeds cap {cap}")
    q_u = q.table.sum(axis=1)
    cond = np.where(q_u[:, None] > 0.0, q.table / np.maximum(q_u, 1e-300)[:, None], 1.0 / q.x_blocks)
    ccum = np.cumsum(q_u)
    condcum = np.cumsum(cond, axis=1)
    cloud = np.empty((m2_size, k_blocks), dtype=np.int64)
    satellites = np.empty((m2_size, m1_size, k_blocks), dtype=np.int64)
    # one stream per super-symbol index: codebooks with equal message
    # sizes share their common prefix across K, so exact ML error can
    # only improve as codewords grow
    for col in range(k_blocks):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3, col)))
        draws = rng.random(m2_size) * ccum[-1]
        cloud[:, col] = np.minimum(np.searchsorted(ccum, draws, side="right"), q.u_size - 1)
        rows = condcum[cloud[:, col]]  # (M2, NX)
        draws = rng.random((m2_size, m1_size)) * rows[:, None, -1]
        satellites[:, :, col] = np.minimum(
            (rows[:, None, :] <= draws[..., None]).sum(axis=-1), q.x_blocks - 1
        )
    return SuperpositionCodebook(
        q=q,
        k_blocks=k_blocks,
        rate1=rate1,
        rate2=rate2,
        m1_size=m1_size,
        m2_size=m2_size,
        cloud=cloud,
        satellites=satellites,
        seed=seed,
    )


def _batched_likelihood(step: np.ndarray, codewords: np.ndarray, outputs: np.ndarray, s0: int) -> np.ndarray:
    """p(output sequence | codeword, s0) for all pairs, shape (T, M).

    step is a one-step marginal (S, X, O, S); the forward recursion sums
    the state at the end.
    """
    t, length = outputs.shape
    m = codewords.shape[0]
    s = step.shape[0]
    kt = np.ascontiguousarray(step.transpose(1, 2, 0, 3))
    alpha = np.zeros((t, m, s))
    alpha[:, :, s0] = 1.0
    for i in range(length):
        g = kt[codewords[:, i]][:, outputs[:, i]]  # (M, T, S, S)
        alpha = np.einsum("tms,mtsr->tmr", alpha, g)
    return alpha.sum(axis=2)


def _sample_outputs(kernel: FsbcKernel, xsyms: np.ndarray, s0: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Run the channel once per row of xsyms; returns (ys, zs)."""
    t, length = xsyms.shape
    ny, nz, ns = kernel.y_size, kernel.z_size, kernel.s_size
    flat = kernel.probs.reshape(ns, kernel.x_size, ny * nz * ns)
    states = np.full(t, s0, dtype=np.int64)
    ys = np.empty((t, length), dtype=np.int64)
    zs = np.empty((t, length), dtype=np.int64)
    for i in range(length):
        rows = flat[states, xsyms[:, i]]
        cums = np.cumsum(rows, axis=1)
        draws = rng.random(t) * cums[:, -1]
        idx = np.minimum((cums <= draws[:, None]).sum(axis=1), rows.shape[1] - 1)
        ys[:, i], rem = np.divmod(idx, nz * ns)
        zs[:, i], states = np.divmod(rem, ns)
    return ys, zs


@dataclass
class DecodeResult:
    rx1_m1: int
    rx1_m2: int
    rx2_m2: int
    y_block: np.ndarray
    z_block: np.ndarray


def _decode(codebook: SuperpositionCodebook, kernel: FsbcKernel, ys, zs, s0: int):
    pairs = codebook.pair_codewords(kernel.x_size)
    m2s = codebook.m2_size
    ly = _batched_likelihood(kernel.y_step(), pairs, ys, s0)
    best_pair = np.argmax(ly, axis=1)
    rx1_m1 = best_pair // m2s
    rx1_m2 = best_pair % m2s
    lz = _batched_likelihood(kernel.z_step(), pairs, zs, s0)
    lz_cloud = lz.reshape(-1, codebook.m1_size, m2s).mean(axis=1)
    rx2_m2 = np.argmax(lz_cloud, axis=1)
    return rx1_m1, rx1_m2, rx2_m2


def transmit_and_decode(
    codebook: SuperpositionCodebook,
    kernel: FsbcKernel,
    s0: int,
    m1: int,
    m2: int,
    seed: int,
) -> DecodeResult:
    """One channel use of the full coding chain; deterministic per seed."""
    if not 0 <= m1 < codebook.m1_size or not 0 <= m2 < codebook.m2_size:
        raise DomainError(f"message pair ({m1}, {m2}) outside codebook")
    if not 0 <= s0 < kernel.s_size:
        raise DomainError(f"initial state {s0} outside [0, {kernel.s_size})")
    pairs = codebook.pair_codewords(kernel.x_size)
    xsyms = pairs[m1 * codebook.m2_size + m2][None, :]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))
    ys, zs = _sample_outputs(kernel, xsyms, s0, rng)
    rx1_m1, rx1_m2, rx2_m2 = _decode(codebook, kernel, ys, zs, s0)
    return DecodeResult(
        rx1_m1=int(rx1_m1[0]),
        rx1_m2=int(rx1_m2[0]),
        rx2_m2=int(rx2_m2[0]),
        y_block=ys[0],
        z_block=zs[0],
    )


@dataclass
class ErrorStats:
    """Monte Carlo error estimates per initial state, worst case on top."""

    trials: int
    seed: int
    per_state: list
    overall: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "per_state": self.per_state,
            "overall": self.overall,
        }


def estimate_error(
    codebook: SuperpositionCodebook,
    kernel: FsbcKernel,
    trials: int,
    seed: int,
    budget: int = ENUM_BUDGET,
) -> ErrorStats:
    """Empirical error probabilities with uniform messages, per s0.

    The error event is either receiver failing on its own message; the
    reported overall value is the worst initial state.  Half-widths are
    normal-approximation 95% binomial intervals.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    npairs = codebook.m1_size * codebook.m2_size
    if trials * npairs * kernel.s_size > budget:
        raise BudgetExceeded(
            f"trials * pairs * states = {trials * npairs * kernel.s_size} "
            f"exceeds budget {budget}"
        )
    pairs = codebook.pair_codewords(kernel.x_size)
    per_state = []
    worst = 0.0
    for s0 in range(kernel.s_size):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(5, s0)))
        m1s = rng.integers(0, codebook.m1_size, size=trials)
        m2s = rng.integers(0, codebook.m2_size, size=trials)
        xsyms = pairs[m1s * codebook.m2_size + m2s]
        ys, zs = _sample_outputs(kernel, xsyms, s0, rng)
        rx1_m1, _, rx2_m2 = _decode(codebook, kernel, ys, zs, s0)
        err1 = rx1_m1 != m1s
        err2 = rx2_m2 != m2s
        err = err1 | err2
        p = float(np.mean(err))
        per_state.append(
            {
                "s0": s0,
                "p_err": p,
                "p_err_rx1": float(np.mean(err1)),
                "p_err_rx2": float(np.mean(err2)),
                "half_width": 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / trials),
            }
        )
        worst = max(worst, p)
    return ErrorStats(trials=trials, seed=seed, per_state=per_state, overall=worst)


def _exact_tables(codebook: SuperpositionCodebook, kernel: FsbcKernel, s0: int, budget: int):
    """Exact output laws per message pair by full output enumeration.

    Returns (py, pz): (NY^L, P) and (NZ^L, P) conditional laws.
    """
    length = codebook.total_symbols
    ny, nz = kernel.y_size**length, kernel.z_size**length
    npairs = codebook.m1_size * codebook.m2_size
    if ny * nz * npairs * kernel.s_size > budget:
        raise BudgetExceeded(
            f"output enumeration needs {ny * nz * npairs * kernel.s_size} cells, "
            f"budget is {budget}"
        )
    pairs = codebook.pair_codewords(kernel.x_size)
    yblocks = decode_blocks(np.arange(ny), kernel.y_size, length)
    zblocks = decode_blocks(np.arange(nz), kernel.z_size, length)
    joint_sym = (yblocks[:, None, :] * kernel.z_size + zblocks[None, :, :]).reshape(
        ny * nz, length
    )
    step = kernel.probs.reshape(
        kernel.s_size, kernel.x_size, kernel.y_size * kernel.z_size, kernel.s_size
    )
    pjoint = _batched_likelihood(step, pairs, joint_sym, s0)  # (NY*NZ, P)
    pjoint = pjoint.reshape(ny, nz, npairs)
    return pjoint


def exact_error(
    codebook: SuperpositionCodebook,
    kernel: FsbcKernel,
    s0: int,
    budget: int = ENUM_BUDGET,
):
    """Exact (overall, rx1, rx2) ML error probabilities at one s0."""
    pjoint = _exact_tables(codebook, kernel, s0, budget)
    ny, nz, npairs = pjoint.shape
    m1s, m2s = codebook.m1_size, codebook.m2_size
    py = pjoint.sum(axis=1)  # (NY, P)
    pz = pjoint.sum(axis=0)  # (NZ, P)
    dec_pair = np.argmax(py, axis=1)
    dec1 = dec_pair // m2s
    pz_cloud = pz.reshape(nz, m1s, m2s).mean(axis=1)
    dec2 = np.argmax(pz_cloud, axis=1)
    p_idx = np.arange(npairs)
    true1 = p_idx // m2s
    true2 = p_idx % m2s
    ok1 = dec1[:, None] == true1[None, :]  # (NY, P)
    ok2 = dec2[:, None] == true2[None, :]  # (NZ, P)
    pe1 = 1.0 - float(np.sum(py * ok1) / npairs)
    both_ok = np.einsum("yzp,yp,zp->", pjoint, ok1.astype(float), ok2.astype(float))
    pe_overall = 1.0 - float(both_ok / npairs)
    # joint law over (z, m2) with uniform m2; correct mass sits at dec2(z)
    pz_per_m2 = pz_cloud / m2s
    pe2 = 1.0 - float(pz_per_m2[np.arange(nz), dec2].sum())
    return pe_overall, pe1, pe2


@dataclass
class FanoReport:
    """Exact residual-uncertainty bounds from decoding error rates."""

    s0: int
    symbols: int
    rate1: float
    rate2: float
    pe1: float
    pe2: float
    h_m1_given_y: float
    h_m2_given_z: float
    bound1: float
    bound2: float
    ok1: bool
    ok2: bool

    def to_dict(self) -> dict:
        return {
            "s0": self.s0,
            "symbols": self.symbols,
            "rate1": self.rate1,
            "rate2": self.rate2,
            "pe1": self.pe1,
            "pe2": self.pe2,
            "h_m1_given_y": self.h_m1_given_y,
            "h_m2_given_z": self.h_m2_given_z,
            "bound1": self.bound1,
            "bound2": self.bound2,
            "ok1": self.ok1,
            "ok2": self.ok2,
        }


def _cond_entropy(joint: np.ndarray) -> float:
    """H(col | row) in bits for a joint table indexed (row, col)."""
    floor = 1e-300
    marg = joint.sum(axis=1)
    return float(
        -np.sum(joint * (np.log2(joint + floor) - np.log2(marg + floor)[:, None]))
    )


def fano_diagnostic(
    codebook: SuperpositionCodebook,
    kernel: FsbcKernel,
    s0: int,
    budget: int = ENUM_BUDGET,
) -> FanoReport:
    """Exact H(M2 | Z-block, s0) and H(M1 | Y-block, s0) versus the
    error-rate bounds pe * (K n) * rate + 1, evaluated by enumeration."""
    pjoint = _exact_tables(codebook, kernel, s0, budget)
    ny, nz, npairs = pjoint.shape
    m1s, m2s = codebook.m1_size, codebook.m2_size
    py = pjoint.sum(axis=1)
    pz = pjoint.sum(axis=0)
    joint_y_m1 = py.reshape(ny, m1s, m2s).sum(axis=2) / npairs
    joint_z_m2 = pz.reshape(nz, m1s, m2s).sum(axis=1) / npairs
    h1 = _cond_entropy(joint_y_m1)
    h2 = _cond_entropy(joint_z_m2)
    _, pe1, pe2 = exact_error(codebook, kernel, s0, budget=budget)
    symbols = codebook.total_symbols
    bound1 = pe1 * symbols * codebook.rate1 + 1.0
    bound2 = pe2 * symbols * codebook.rate2 + 1.0
    return FanoReport(
        s0=s0,
        symbols=symbols,
        rate1=codebook.rate1,
        rate2=codebook.rate2,
        pe1=pe1,
        pe2=pe2,
        h_m1_given_y=h1,
        h_m2_given_z=h2,
        bound1=bound1,
        bound2=bound2,
        ok1=h1 <= bound1 + 1e-12,
        ok2=h2 <= bound2 + 1e-12,
    )
