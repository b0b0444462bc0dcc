"""Exceptional cycles and the twist-selection plan.

All cycle arithmetic is exact (Python ints).  A *cycle* is a tuple of
coefficients indexed like ``graph.ids``.  A cycle ``z`` is *anti-ample*
when every coefficient is positive and ``(M z)_i < 0`` for every vertex,
``M`` the intersection matrix.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .graph import (DualGraph, GraphError, intersection_matrix, is_connected,
                    is_negative_definite)
from .linalg import next_prime


class CyclesError(ValueError):
    """Raised for invalid cycle arguments or exhausted search budgets."""


def _pairing(m: list[list[int]], z: list[int] | tuple[int, ...]) -> list[int]:
    """The vector of intersection numbers (M z)_i."""
    return [sum(mi[j] * z[j] for j in range(len(z))) for mi in m]


def is_anti_ample(g: DualGraph, z: tuple[int, ...]) -> bool:
    if len(z) != g.n or any(c < 1 for c in z):
        return False
    return all(v < 0 for v in _pairing(intersection_matrix(g), z))


def _check_cycle_arg(g: DualGraph, z: tuple[int, ...], name: str = "cycle"):
    if len(z) != g.n:
        raise CyclesError(f"{name} has length {len(z)}, graph has {g.n} vertices")
    if any(not isinstance(c, int) for c in z):
        raise CyclesError(f"{name} must have integer coefficients")


# ---------------------------------------------------------------------------
# fundamental / anti-ample cycles


def fundamental_cycle(g: DualGraph, max_steps: int = 1_000_000) -> tuple[int, ...]:
    """Smallest positive cycle with all intersection numbers <= 0.

    Computed by the standard Laufer iteration: start from all-ones; while
    some vertex pairs positively with the cycle, bump the lowest-index such
    vertex.  Terminates for negative-definite graphs.
    """
    if not is_connected(g):
        raise CyclesError("fundamental cycle needs a connected graph")
    if not is_negative_definite(g):
        raise CyclesError("fundamental cycle needs a negative-definite graph")
    m = intersection_matrix(g)
    z = [1] * g.n
    for _ in range(max_steps):
        pair = _pairing(m, z)
        for i, v in enumerate(pair):
            if v > 0:
                z[i] += 1
                break
        else:
            assert all(v <= 0 for v in pair)
            return tuple(z)
    raise CyclesError("fundamental cycle iteration did not terminate "
                      "(is the graph negative definite?)")


def anti_ample_cycle(g: DualGraph, max_steps: int = 1_000_000) -> tuple[int, ...]:
    """Smallest cycle above the fundamental cycle pairing strictly
    negatively with every vertex.  Same iteration with a strict target."""
    m = intersection_matrix(g)
    z = list(fundamental_cycle(g, max_steps))
    for _ in range(max_steps):
        pair = _pairing(m, z)
        for i, v in enumerate(pair):
            if v >= 0:
                z[i] += 1
                break
        else:
            result = tuple(z)
            assert is_anti_ample(g, result)
            return result
    raise CyclesError("anti-ample iteration did not terminate "
                      "(is the graph negative definite?)")


# ---------------------------------------------------------------------------
# coprimality adjustment


def _coupling_bound(m: list[list[int]]) -> int:
    """t = max_i of E_i . (sum of all other vertices) — the largest
    off-diagonal row sum of the intersection matrix."""
    n = len(m)
    if n == 1:
        return 0
    return max(sum(m[i][j] for j in range(n) if j != i) for i in range(n))


def make_coprime(g: DualGraph, z: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Adjust an anti-ample cycle so no coefficient is divisible by p.

    The classical repair recipe: scale the cycle by (t+1), t the largest
    off-diagonal row sum of the intersection matrix, then bump every
    coefficient divisible by p up by one — the scale margin absorbs the
    bumps, so the result is still anti-ample.  When the *scaled* cycle
    needs no bump at all (which forces the input to be coprime already)
    the scaling is skipped and the smaller input passes through; p = 1
    always passes through.

    Parameters
    ----------
    g : DualGraph
    z : tuple of int
        An anti-ample cycle.
    p : int
        A prime, or 1 (no condition).
    """
    _check_cycle_arg(g, z)
    if not is_anti_ample(g, z):
        raise CyclesError("make_coprime requires an anti-ample input cycle")
    if p == 1:
        return tuple(z)
    t = _coupling_bound(intersection_matrix(g))
    scaled = [(t + 1) * c for c in z]
    if all(c % p != 0 for c in scaled):
        return tuple(z)
    result = tuple(c + 1 if c % p == 0 else c for c in scaled)
    assert is_anti_ample(g, result)
    assert all(c % p != 0 for c in result)
    return result


def make_coprime_to_all(g: DualGraph, z: tuple[int, ...],
                        primes: list[int]) -> tuple[int, ...]:
    """Adjust an anti-ample cycle to be coprime to every prime in `primes`.

    One generalized scale-and-bump pass: scale by (m*t + 1) and bump each
    coefficient up to the next integer coprime to all the primes, where m
    is the largest bump used; the scale is grown until it dominates m*t,
    which keeps the result anti-ample by the same margin argument as the
    single-prime case.  (Applying the single-prime adjustment per prime in
    sequence does not converge: each pass can destroy the previous one.)

    Unlike :func:`make_coprime`, an input that is already coprime to every
    prime passes through unconditionally — the analysis pipeline prefers
    the smallest usable cycle.
    """
    _check_cycle_arg(g, z)
    if not is_anti_ample(g, z):
        raise CyclesError("make_coprime_to_all requires an anti-ample cycle")
    ps = sorted({p for p in primes if p != 1})
    if not ps:
        return tuple(z)
    q = math.prod(ps)
    if all(math.gcd(c, q) == 1 for c in z):
        return tuple(z)

    def bump_to_coprime(x: int) -> int:
        b = 0
        while math.gcd(x + b, q) != 1:
            b += 1
        return b

    t = _coupling_bound(intersection_matrix(g))
    m = 1
    while True:
        s = m * t + 1
        bumps = [bump_to_coprime(s * c) for c in z]
        m_used = max(bumps)
        if s >= m_used * t + 1:
            result = tuple(s * c + b for c, b in zip(z, bumps))
            assert is_anti_ample(g, result)
            assert all(math.gcd(c, q) == 1 for c in result)
            return result
        m = m_used


# ---------------------------------------------------------------------------
# twist-selection plan


def vanishing_floor(g: DualGraph) -> int:
    """Smallest twist bound from the per-vertex vanishing conditions:
    max over vertices of {0, 2(2g-2), 2g-2-E^2}."""
    best = 0
    for vid in g.ids:
        d = g.data[vid]
        best = max(best, 2 * (2 * d.genus - 2), 2 * d.genus - 2 - d.selfint)
    return best


def greedy_tau(g: DualGraph, zbar: tuple[int, ...]) -> tuple[int, list[int]]:
    """Greedy build sequence for `zbar` and its peak intersection number.

    Starts at vertex 0 and repeatedly adds the vertex (below its target
    coefficient) maximizing E_v . (Z + E_v), lowest index on ties.  Each
    step records E_v . Z against the cycle built *before* the step; tau is
    the maximum recorded value (0 when no step was recorded).

    Returns
    -------
    (tau, beta) : (int, list of int)
        The peak and the full vertex sequence, beta[0] = 0.
    """
    _check_cycle_arg(g, zbar)
    if any(c < 1 for c in zbar):
        raise CyclesError("greedy_tau needs a cycle with full support")
    m = intersection_matrix(g)
    n = g.n
    z = [0] * n
    z[0] = 1
    beta = [0]
    recorded: list[int] = []
    while True:
        pair = _pairing(m, z)
        best = -1
        best_score = None
        for v in range(n):
            if z[v] >= zbar[v]:
                continue
            score = pair[v] + m[v][v]
            if best_score is None or score > best_score:
                best, best_score = v, score
        if best < 0:
            break
        recorded.append(pair[best])
        z[best] += 1
        beta.append(best)
    assert tuple(z) == tuple(zbar)
    return (max(recorded) if recorded else 0), beta


def exhaustive_tau_min(g: DualGraph, zbar: tuple[int, ...],
                       state_budget: int = 2_000_000) -> int:
    """Exact minimum over *all* build sequences of the peak recorded value.

    Implemented as a bottleneck shortest path over coefficient vectors
    below `zbar` (cost of a path = max recorded value; start states are the
    single vertices at no cost).  Equivalent to enumerating every addition
    order, but polynomial in the number of sub-cycles.

    Raises
    ------
    CyclesError
        When the number of sub-cycles exceeds `state_budget`.
    """
    _check_cycle_arg(g, zbar)
    if any(c < 1 for c in zbar):
        raise CyclesError("exhaustive_tau_min needs a cycle with full support")
    states = math.prod(c + 1 for c in zbar)
    if states > state_budget:
        raise CyclesError(f"search space has {states} sub-cycles "
                          f"(budget {state_budget})")
    m = intersection_matrix(g)
    n = g.n
    target = tuple(zbar)
    ninf = float("-inf")
    best: dict[tuple[int, ...], float] = {}
    heap: list[tuple[float, int, tuple[int, ...]]] = []
    tick = 0
    for v in range(n):
        start = tuple(1 if i == v else 0 for i in range(n))
        best[start] = ninf
        heapq.heappush(heap, (ninf, tick, start))
        tick += 1
    while heap:
        cost, _, z = heapq.heappop(heap)
        if cost > best.get(z, ninf):
            continue
        if z == target:
            return 0 if cost == ninf else int(cost)
        pair = _pairing(m, z)
        for v in range(n):
            if z[v] >= target[v]:
                continue
            nz = z[:v] + (z[v] + 1,) + z[v + 1:]
            ncost = max(cost, pair[v])
            if ncost < best.get(nz, math.inf):
                best[nz] = ncost
                heapq.heappush(heap, (ncost, tick, nz))
                tick += 1
    raise CyclesError("no build sequence reaches the target cycle")


@dataclass
class MultiplicityPlan:
    """The twist plan: bounds, build sequence, chosen multiplicity and j."""

    lambda_bound: int
    tau: int
    beta_sequence: list[int] = field(repr=False)
    nu: int = 0
    mode: str = "paper"
    j: int | None = None


def significant_multiplicity(g: DualGraph, zbar: tuple[int, ...], p: int,
                             mode: str = "paper") -> MultiplicityPlan:
    """Choose the uniform multiplicity nu for the anti-ample cycle `zbar`.

    In ``paper`` mode nu = max(lambda + tau + 1, 2) with no coprimality
    condition.  In ``strict`` mode nu is the smallest value >= lambda +
    tau + 1 coprime to p, additionally >= 2 when some coefficient of
    `zbar` is 1.  p = 1 imposes no condition.
    """
    if mode not in ("paper", "strict"):
        raise CyclesError(f"unknown mode {mode!r}")
    lam = vanishing_floor(g)
    tau, beta = greedy_tau(g, zbar)
    lower = lam + tau + 1
    if mode == "paper":
        nu = max(lower, 2)
    else:
        if any(c == 1 for c in zbar):
            lower = max(lower, 2)
        nu = lower
        while p != 1 and math.gcd(nu, p) != 1:
            nu += 1
    return MultiplicityPlan(lambda_bound=lam, tau=tau, beta_sequence=beta,
                            nu=nu, mode=mode)


def significant_multiplicity_to_all(g: DualGraph, zbar: tuple[int, ...],
                                    primes: list[int],
                                    mode: str = "paper") -> MultiplicityPlan:
    """Like :func:`significant_multiplicity` but, in strict mode, coprime
    to every prime in the candidate set simultaneously (taking the max of
    per-prime answers would be wrong)."""
    if mode == "paper":
        return significant_multiplicity(g, zbar, 1, mode)
    plan = significant_multiplicity(g, zbar, 1, "strict")
    q = math.prod({p for p in primes if p != 1} or {1})
    nu = plan.nu
    while math.gcd(nu, q) != 1:
        nu += 1
    plan.nu = nu
    return plan


def choose_j(nu: int, n_max: int, primes: list[int]) -> int:
    """Smallest prime strictly greater than both nu * n_max and every
    candidate prime."""
    floor = max(nu * n_max, max(primes, default=1))
    return next_prime(floor)


def step_vanishing_check(g: DualGraph, c: tuple[int, ...],
                         l0: int | str) -> tuple[bool, bool]:
    """The two per-step vanishing conditions at vertex `l0` against the
    partial cycle `c`:

    cond1:  2(2g - 2) + E.C < 0
    cond2:  2g - 2 - E^2 + E.C < 0

    `l0` may be a vertex id or an index.
    """
    _check_cycle_arg(g, c, "partial cycle")
    if any(v < 1 for v in c):
        raise CyclesError("step_vanishing_check needs a full-support cycle")
    i = g.index(l0) if isinstance(l0, str) else l0
    if not (0 <= i < g.n):
        raise GraphError(f"vertex index {i} out of range")
    m = intersection_matrix(g)
    ec = sum(m[i][j] * c[j] for j in range(g.n))
    d = g.data[g.ids[i]]
    cond1 = 2 * (2 * d.genus - 2) + ec < 0
    cond2 = (2 * d.genus - 2 - d.selfint) + ec < 0
    return cond1, cond2
