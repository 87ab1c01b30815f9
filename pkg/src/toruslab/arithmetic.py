"""Rational approximation, Farey atoms, dyadic divisor counts, and major arcs.

Conventions used throughout: (a, q) denotes gcd, so (a, q) = 1 means reduced
and (0, q) = q forces a = 0 to pair only with q = 1.  "q ~ Q" means
Q <= q < 2Q with Q a power of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import TorusGeometry, require_dyadic
from .errors import BudgetExceededError

#: Largest level at which the exhaustive denominator scan is used as fallback.
SCAN_FALLBACK_LIMIT = 512


@dataclass(frozen=True)
class RationalApprox:
    """Reduced fraction a/q certified against beta at level N.

    Certificate: 1 <= q < N, 0 <= a <= q, gcd(a, q) = 1 and
    |beta - a/q| <= 1/(N*q).
    """

    a: int
    q: int
    beta: float
    N: int

    def __post_init__(self):
        if not (1 <= self.q < self.N):
            raise ValueError(f"need 1 <= q < N, got q={self.q}, N={self.N}")
        if not (0 <= self.a <= self.q):
            raise ValueError(f"need 0 <= a <= q, got a={self.a}, q={self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"(a, q) = {math.gcd(self.a, self.q)} != 1 for a={self.a}, q={self.q}")
        if self.error > 1.0 / (self.N * self.q):
            raise ValueError(
                f"certificate violated: |{self.beta} - {self.a}/{self.q}| > 1/(N q)"
            )

    @property
    def value(self) -> float:
        return self.a / self.q

    @property
    def error(self) -> float:
        return abs(self.beta - self.a / self.q)


def _convergents(beta: float, max_terms: int = 64):
    """Continued-fraction convergents (p, q) of beta, q increasing."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    x = float(beta)
    for _ in range(max_terms):
        a0 = math.floor(x)
        p_prev, p = p, a0 * p + p_prev
        q_prev, q = q, a0 * q + q_prev
        yield p, q
        frac = x - a0
        if frac <= 1e-15 * max(1.0, abs(x)):
            return
        x = 1.0 / frac


def _certified(a: int, q: int, beta: float, N: int) -> bool:
    return (
        1 <= q < N
        and 0 <= a <= q
        and math.gcd(a, q) == 1
        and abs(beta - a / q) <= 1.0 / (N * q)
    )


def _dirichlet_scan(beta: float, N: int) -> tuple[int, int] | None:
    """Exhaustive search oracle: smallest certified q, ties broken by smallest a."""
    for q in range(1, N):
        lo = math.floor(beta * q)
        for a in (lo, lo + 1):
            if _certified(a, q, beta, N):
                return a, q
    return None


def dirichlet_approx(beta: float, N: int) -> RationalApprox:
    """Best rational approximation certificate at level N.

    Returns the certified pair with the smallest denominator (ties broken by
    the smaller numerator).  Existence is guaranteed for every beta.  Inputs
    outside [0, 1] are reduced mod 1 first.
    """
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    N = int(N)
    b = float(beta)
    if not 0.0 <= b <= 1.0:
        b = b % 1.0
    # The smallest certified denominator is always a convergent: any certified
    # pair (a, q) forces the convergent with denominator <= q to be certified
    # as well, by the best-approximation property.
    found = None
    for p, q in _convergents(b):
        if q >= N:
            break
        if _certified(p, q, b, N):
            found = (p, q)
            break
    if found is not None:
        a, q = found
        if q == 1 and a == 1 and _certified(0, 1, b, N):
            a = 0  # smallest-numerator tie at q = 1
        return RationalApprox(a=a, q=q, beta=b, N=N)
    if N <= SCAN_FALLBACK_LIMIT:
        hit = _dirichlet_scan(b, N)
        if hit is not None:
            return RationalApprox(a=hit[0], q=hit[1], beta=b, N=N)
    raise RuntimeError(f"no certified approximation found for beta={beta!r}, N={N}")


def dirichlet_approx_batch(betas: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized certificate search over an array of betas in [0, 1].

    Ascending scan over denominators; the first certified hit is automatically
    reduced, because an unreduced hit implies an earlier certified reduced one.
    """
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    b = np.asarray(betas, dtype=float)
    a_out = np.zeros(b.shape, dtype=np.int64)
    q_out = np.zeros(b.shape, dtype=np.int64)
    todo = np.ones(b.shape, dtype=bool)
    tol = 1.0 / N
    for q in range(1, int(N)):
        if not todo.any():
            break
        scaled = b[todo] * q
        cand = np.rint(scaled)
        ok = np.abs(scaled - cand) <= tol
        idx = np.flatnonzero(todo)[ok]
        a_out[idx] = cand[ok].astype(np.int64)
        q_out[idx] = q
        todo[idx] = False
    if todo.any():
        raise RuntimeError("certificate search failed; betas must lie in [0, 1]")
    return a_out, q_out


def farey_atoms(Q: int) -> list[Fraction]:
    """Sorted reduced fractions a/q with q ~ Q and 0 <= a < q, as points of the circle.

    Q = 1 yields the single point 0 (the pair a=0, q=1).
    """
    require_dyadic(Q, "Q")
    atoms = [
        Fraction(a, q)
        for q in range(Q, 2 * Q)
        for a in range(q)
        if math.gcd(a, q) == 1
    ]
    return sorted(atoms)


def farey_atoms_float(Q: int) -> np.ndarray:
    return np.array([float(x) for x in farey_atoms(Q)])


def divisor_count_dyadic(n: int, Q: int) -> int:
    """Number of divisors q of n with Q <= q < 2Q, by trial division up to sqrt(n)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    require_dyadic(Q, "Q")
    count = 0
    root = math.isqrt(n)
    for dv in range(1, root + 1):
        if n % dv:
            continue
        other = n // dv
        if Q <= dv < 2 * Q:
            count += 1
        if other != dv and Q <= other < 2 * Q:
            count += 1
    return count


def f2_hat(omega: int, Q: int) -> int:
    """Sum of q over divisors q ~ Q of omega; every q divides omega = 0.

    Equals the exponential sum sum_{q~Q} sum_{a=0}^{q-1} e^{2 pi i a omega / q}.
    """
    require_dyadic(Q, "Q")
    w = abs(int(omega))
    if w == 0:
        return sum(range(Q, 2 * Q))
    return sum(q for q in range(Q, 2 * Q) if w % q == 0)


def divisor_tail_count(R: int, Q: int, D: float, budget: int = 10**8) -> int:
    """Exact count of 1 <= n <= R with more than D divisors in the dyadic window.

    Enumerates by sieving multiples of each q ~ Q; guarded by a cell budget.
    """
    if R < 1:
        raise ValueError(f"need R >= 1, got {R}")
    require_dyadic(Q, "Q")
    if R > budget:
        raise BudgetExceededError(f"R={R} exceeds the enumeration budget {budget}")
    counts = np.zeros(R + 1, dtype=np.int32)
    for q in range(Q, 2 * Q):
        counts[q::q] += 1
    return int(np.count_nonzero(counts[1:] > D))


@dataclass(frozen=True)
class MajorArcParams:
    """Arc width/denominator budget: q <= N^(2 sigma) and q N^2 |theta t - a/q| <= N^(2 sigma)."""

    sigma: float
    N: int

    def __post_init__(self):
        if not 0.0 < self.sigma < 0.5:
            raise ValueError(f"sigma must lie in (0, 1/2), got {self.sigma}")
        require_dyadic(self.N)
        if self.N < 2:
            raise ValueError(f"need N >= 2, got N={self.N}")

    @property
    def threshold(self) -> float:
        return float(self.N) ** (2.0 * self.sigma)


def in_major_arc(
    t: float, params: MajorArcParams, geometry: TorusGeometry
) -> tuple[bool, tuple[int, int, int] | None]:
    """Major-arc membership of a time, with a witness (j, a, q) when inside.

    Per coordinate j the best certificate of theta_j * t at level N is checked
    against both conditions; j in the witness is 1-based.
    """
    for j, theta in enumerate(geometry.theta, start=1):
        r = dirichlet_approx(theta * t, params.N)
        if r.q <= params.threshold and r.q * params.N**2 * r.error <= params.threshold:
            return True, (j, r.a, r.q)
    return False, None


def major_arc_mask(
    ts: np.ndarray, params: MajorArcParams, geometry: TorusGeometry
) -> np.ndarray:
    """Vectorized major-arc membership over a time grid.

    Uses the definitional test N^2 * dist(theta t q, Z) <= N^(2 sigma) over all
    q up to the budget; unreduced hits reduce to valid witnesses, so this
    matches the witness-based test.
    """
    ts = np.asarray(ts, dtype=float)
    mask = np.zeros(ts.shape, dtype=bool)
    qmax = int(math.floor(params.threshold))
    nsq = float(params.N) ** 2
    for theta in geometry.theta:
        x = (theta * ts) % 1.0
        for q in range(1, qmax + 1):
            dist = np.abs(x * q - np.rint(x * q))
            mask |= nsq * dist <= params.threshold
    return mask
