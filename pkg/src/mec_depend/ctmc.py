"""VM failure/repair/service CTMC.

States are tuples z = (x_i, x_o, x_f) of idle/occupied/failed VM counts with
x_i + x_o + x_f = m_v. Six transition events build the generator:

  1. task arrival to an idle VM        (x_i-1, x_o+1, x_f)    rate lambda_v, x_i > 0
  2. service completion                (x_i+1, x_o-1, x_f)    rate x_o*mu_v, x_o > 0
  3. idle VM fails                     (x_i-1, x_o,   x_f+1)  rate x_i*delta, x_i > 0
  4. occupied VM fails, task handed    (x_i-1, x_o,   x_f+1)  rate x_o*delta, x_o > 0, x_i > 0
     to an idle VM (which it occupies)
  5. occupied VM fails, task aborted   (x_i,   x_o-1, x_f+1)  rate x_o*delta, x_o > 0, x_i = 0
  6. failed VM repaired                (x_i+1, x_o,   x_f-1)  rate x_f*gamma, x_f > 0

With handover_keeps_task=False, event 4 instead drops the task like event 5
(destination (x_i, x_o-1, x_f+1)); a sensitivity variant, not the default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


class NumericError(RuntimeError):
    """A linear solve or cross-check failed beyond tolerance."""


class ReducibleChainError(NumericError):
    """The generator has multiple closed classes; no unique steady state."""

    def __init__(self, message, closed_classes):
        super().__init__(message)
        self.closed_classes = closed_classes


class VmState(NamedTuple):
    x_i: int
    x_o: int
    x_f: int


@dataclass
class CtmcModel:
    m_v: int
    lambda_v: float
    mu_v: float
    delta: float
    gamma: float
    states: tuple[VmState, ...]
    index: dict[VmState, int]
    generator: np.ndarray
    handover_keeps_task: bool = True

    @property
    def n_states(self) -> int:
        return len(self.states)


@dataclass
class SteadyState:
    probabilities: np.ndarray
    residual: float  # max |tau Q|


def enumerate_states(m_v: int) -> tuple[VmState, ...]:
    """All compositions of m_v into (x_i, x_o, x_f), ordered by
    (x_i desc, x_o desc); index 0 is the all-idle state."""
    if m_v < 1:
        raise ValueError(f"m_v must be >= 1 (got {m_v})")
    out = []
    for x_i in range(m_v, -1, -1):
        for x_o in range(m_v - x_i, -1, -1):
            out.append(VmState(x_i, x_o, m_v - x_i - x_o))
    return tuple(out)


def build_generator(
    m_v: int,
    lambda_v: float,
    mu_v: float,
    delta: float,
    gamma: float,
    handover_keeps_task: bool = True,
) -> CtmcModel:
    for name, v in (("lambda_v", lambda_v), ("mu_v", mu_v),
                    ("delta", delta), ("gamma", gamma)):
        if v < 0.0:
            raise ValueError(f"{name} must be >= 0 (got {v})")
    states = enumerate_states(m_v)
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    q = np.zeros((n, n))
    for i, (x_i, x_o, x_f) in enumerate(states):
        if x_i > 0:
            q[i, index[VmState(x_i - 1, x_o + 1, x_f)]] += lambda_v
        if x_o > 0:
            q[i, index[VmState(x_i + 1, x_o - 1, x_f)]] += x_o * mu_v
        if x_i > 0:
            q[i, index[VmState(x_i - 1, x_o, x_f + 1)]] += x_i * delta
        if x_o > 0 and x_i > 0:
            if handover_keeps_task:
                dest = VmState(x_i - 1, x_o, x_f + 1)
            else:
                dest = VmState(x_i, x_o - 1, x_f + 1)
            q[i, index[dest]] += x_o * delta
        if x_o > 0 and x_i == 0:
            q[i, index[VmState(x_i, x_o - 1, x_f + 1)]] += x_o * delta
        if x_f > 0:
            q[i, index[VmState(x_i + 1, x_o, x_f - 1)]] += x_f * gamma
    np.fill_diagonal(q, q.diagonal() - q.sum(axis=1))
    return CtmcModel(
        m_v=m_v, lambda_v=lambda_v, mu_v=mu_v, delta=delta, gamma=gamma,
        states=states, index=index, generator=q,
        handover_keeps_task=handover_keeps_task,
    )


def closed_classes(model: CtmcModel) -> list[list[VmState]]:
    """Strongly connected components with no outgoing transition."""
    adj = csr_matrix(model.generator > 0.0)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    closed = []
    q = model.generator
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        outside = np.flatnonzero(labels != comp)
        if outside.size == 0 or not (q[np.ix_(members, outside)] > 0.0).any():
            closed.append([model.states[i] for i in members])
    return closed


def closed_form_steady_state(model: CtmcModel) -> np.ndarray:
    """All-ones-matrix closed form: tau = 1 (Q + J)^-1 with J the ones matrix."""
    n = model.n_states
    inv = np.linalg.inv(model.generator + np.ones((n, n)))
    return np.ones(n) @ inv


def steady_state(model: CtmcModel, cross_check: bool | None = None) -> SteadyState:
    """Solve tau Q = 0, sum(tau) = 1 by dense LU with partial pivoting.

    One balance equation is replaced by the normalization constraint. The
    all-ones-matrix closed form is evaluated as a cross-check (automatically
    for chains up to 500 states) and must agree to 1e-8.

    Raises ReducibleChainError (with the closed classes as witness) when the
    chain has no unique stationary law. The structural check runs up front:
    a reducible generator can still yield a consistent singular system whose
    LU solution is one of infinitely many stationary laws.
    """
    closed = closed_classes(model)
    if len(closed) > 1:
        witness = "; ".join(
            "{" + ", ".join(map(str, cls[:4])) + (", ..." if len(cls) > 4 else "") + "}"
            for cls in closed
        )
        raise ReducibleChainError(
            f"generator is reducible: {len(closed)} closed classes: {witness}",
            closed,
        )
    n = model.n_states
    a = model.generator.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        tau = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        tau = None
    if tau is not None:
        residual = float(np.max(np.abs(tau @ model.generator)))
    if tau is None or not np.all(np.isfinite(tau)) or residual > 1e-9 \
            or tau.min() < -1e-12 or abs(tau.sum() - 1.0) > 1e-10:
        raise NumericError(
            f"steady-state solve failed (residual="
            f"{residual if tau is not None else math.nan:.3e})"
        )
    tau = np.where(tau < 0.0, 0.0, tau)
    tau /= tau.sum()
    if cross_check is None:
        cross_check = n <= 500
    if cross_check:
        jmat = model.generator + np.ones((n, n))
        if np.linalg.cond(jmat) < 1e12:
            alt = np.ones(n) @ np.linalg.inv(jmat)
            gap = float(np.max(np.abs(alt - tau)))
            if gap > 1e-8:
                raise NumericError(
                    f"closed-form cross-check disagrees with LU solve by {gap:.3e}"
                )
    return SteadyState(probabilities=tau, residual=residual)


def restrict_to_reachable(model: CtmcModel, start: VmState) -> CtmcModel:
    """Sub-model on the states reachable from ``start``.

    The reachable set is closed under outgoing transitions, so generator rows
    restricted to it still sum to zero. Used for chains whose full state
    space is reducible (e.g. delta = gamma = 0).
    """
    if start not in model.index:
        raise ValueError(f"{start} is not a state of this model")
    n = model.n_states
    seen = np.zeros(n, dtype=bool)
    stack = [model.index[start]]
    seen[stack[0]] = True
    q = model.generator
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(q[i] > 0.0):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    keep = np.flatnonzero(seen)
    states = tuple(model.states[i] for i in keep)
    sub = q[np.ix_(keep, keep)].copy()
    return CtmcModel(
        m_v=model.m_v, lambda_v=model.lambda_v, mu_v=model.mu_v,
        delta=model.delta, gamma=model.gamma,
        states=states, index={s: i for i, s in enumerate(states)},
        generator=sub, handover_keeps_task=model.handover_keeps_task,
    )


@njit(cache=True)
def _gillespie_chunk(state, t, horizon, burn_in, occ, offs, dests, rates,
                     totals, exps, sels):
    n_draws = exps.shape[0]
    i = 0
    while i < n_draws:
        total = totals[state]
        if total <= 0.0:
            lo = t if t > burn_in else burn_in
            if horizon > lo:
                occ[state] += horizon - lo
            return state, horizon, i
        t_next = t + exps[i] / total
        seg_lo = t if t > burn_in else burn_in
        seg_hi = t_next if t_next < horizon else horizon
        if seg_hi > seg_lo:
            occ[state] += seg_hi - seg_lo
        if t_next >= horizon:
            return state, horizon, i + 1
        t = t_next
        u = sels[i] * total
        nxt = dests[offs[state + 1] - 1]
        acc = 0.0
        for k in range(offs[state], offs[state + 1]):
            acc += rates[k]
            if u < acc:
                nxt = dests[k]
                break
        state = nxt
        i += 1
    return state, t, i


def gillespie_occupancy(
    model: CtmcModel,
    horizon: float,
    burn_in: float,
    seed: int,
    initial_state: VmState | None = None,
) -> np.ndarray:
    """Time-weighted state occupancy from an exact stochastic simulation.

    Exponential waiting times, next event chosen proportionally to its rate;
    occupancy is accumulated after ``burn_in`` and normalized over
    (burn_in, horizon]. Deterministic given the seed.
    """
    if not horizon > burn_in >= 0.0:
        raise ValueError(
            f"need horizon > burn_in >= 0 (got {horizon}, {burn_in})"
        )
    n = model.n_states
    q = model.generator
    offs = np.zeros(n + 1, dtype=np.int64)
    dest_list = []
    rate_list = []
    for i in range(n):
        row = np.flatnonzero(q[i] > 0.0)
        row = row[row != i]
        dest_list.append(row.astype(np.int64))
        rate_list.append(q[i, row])
        offs[i + 1] = offs[i] + row.size
    dests = np.concatenate(dest_list) if dest_list else np.zeros(0, np.int64)
    rates = np.concatenate(rate_list) if rate_list else np.zeros(0)
    totals = np.array([r.sum() for r in rate_list])

    if initial_state is None:
        state = 0  # all-idle
    else:
        state = model.index[initial_state]
    occ = np.zeros(n)
    t = 0.0
    rng = np.random.default_rng(seed)
    chunk = 1 << 16
    while t < horizon:
        exps = rng.standard_exponential(chunk)
        sels = rng.random(chunk)
        state, t, _ = _gillespie_chunk(
            state, t, horizon, burn_in, occ, offs, dests, rates, totals,
            exps, sels,
        )
        chunk = min(chunk * 4, 1 << 22)
    return occ / (horizon - burn_in)
