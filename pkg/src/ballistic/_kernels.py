"""Compiled inner loops for the event-driven resolver."""
import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_TIE = 1


@njit(cache=True, inline="always")
def _before(ht, hi, a, b):
    if ht[a] < ht[b]:
        return True
    if ht[a] > ht[b]:
        return False
    return hi[a] < hi[b]


@njit(cache=True, inline="always")
def _swap(ht, hi, hj, a, b):
    ht[a], ht[b] = ht[b], ht[a]
    hi[a], hi[b] = hi[b], hi[a]
    hj[a], hj[b] = hj[b], hj[a]


@njit(cache=True)
def _sift_up(ht, hi, hj, k):
    while k > 0:
        parent = (k - 1) >> 1
        if _before(ht, hi, k, parent):
            _swap(ht, hi, hj, k, parent)
            k = parent
        else:
            break


@njit(cache=True)
def _sift_down(ht, hi, hj, k, size):
    while True:
        left = 2 * k + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _before(ht, hi, right, left):
            best = right
        if _before(ht, hi, best, k):
            _swap(ht, hi, hj, best, k)
            k = best
        else:
            break


@njit(cache=True)
def _pop(ht, hi, hj, size):
    last = size - 1
    _swap(ht, hi, hj, 0, last)
    _sift_down(ht, hi, hj, 0, last)
    return last


@njit(cache=True)
def _resolve_core(x, v, partner, death, order, prv, nxt, ht, hi, hj, tie):
    # buffers may be longer than x; only the first len(x) slots are used
    n = x.shape[0]
    for k in range(n):
        partner[k] = -1
        death[k] = np.inf
        prv[k] = k - 1
        nxt[k] = k + 1
    if n > 0:
        nxt[n - 1] = -1

    size = 0
    for k in range(n - 1):
        if v[k] > v[k + 1]:
            ht[size] = (x[k + 1] - x[k]) / (v[k] - v[k + 1])
            hi[size] = k
            hj[size] = k + 1
            size += 1
    for k in range((size - 2) // 2, -1, -1):
        _sift_down(ht, hi, hj, k, size)

    count = 0
    while size > 0:
        t = ht[0]
        i = hi[0]
        j = hj[0]
        size = _pop(ht, hi, hj, size)
        if partner[i] >= 0 or partner[j] >= 0 or nxt[i] != j:
            continue
        # a neighbour reaching the same point at the same instant makes the
        # outcome ambiguous; simultaneous disjoint collisions are harmless
        left = prv[i]
        right = nxt[j]
        if left >= 0 and v[left] > v[i] and (x[i] - x[left]) / (v[left] - v[i]) == t:
            tie[0] = left
            tie[1] = i
            tie[2] = i
            tie[3] = j
            return count, STATUS_TIE, t
        if right >= 0 and v[j] > v[right] and (x[right] - x[j]) / (v[j] - v[right]) == t:
            tie[0] = i
            tie[1] = j
            tie[2] = j
            tie[3] = right
            return count, STATUS_TIE, t

        partner[i] = j
        partner[j] = i
        death[i] = t
        death[j] = t
        order[count] = i
        count += 1
        if left >= 0:
            nxt[left] = right
        if right >= 0:
            prv[right] = left
        if left >= 0 and right >= 0 and v[left] > v[right]:
            ht[size] = (x[right] - x[left]) / (v[left] - v[right])
            hi[size] = left
            hj[size] = right
            _sift_up(ht, hi, hj, size)
            size += 1
    return count, STATUS_OK, 0.0


@njit(cache=True)
def _alloc(n):
    cap = n + n // 2 + 2
    return (np.empty(n, dtype=np.int64), np.empty(n), np.empty(n // 2 + 1, dtype=np.int64),
            np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64),
            np.empty(cap), np.empty(cap, dtype=np.int64), np.empty(cap, dtype=np.int64),
            np.full(4, -1, dtype=np.int64))


@njit(cache=True)
def resolve(x, v):
    """Event-driven annihilation of the particles ``(x, v)``.

    Alive particles form a doubly linked list; candidate collisions between
    adjacent alive pairs sit in a binary min-heap keyed by (time, left index).
    An event is stale once either endpoint has died or the pair is no longer
    adjacent, and stale events are dropped when they reach the top.

    Returns ``(partner, death_time, order, n_collisions, status, tie, tie_time)``
    where ``order`` lists left indices of collisions in processing order; on a
    tie, ``tie`` holds the two tied pairs.
    """
    partner, death, order, prv, nxt, ht, hi, hj, tie = _alloc(x.shape[0])
    count, status, t = _resolve_core(x, v, partner, death, order, prv, nxt, ht, hi, hj, tie)
    return partner, death, order, count, status, tie, t


@njit(cache=True)
def first_self_partner(x, v, who, start):
    """Least ``k >= start`` such that ``who`` is matched with ``k`` in the
    system restricted to indices ``who .. k``; -1 if there is none.

    Each candidate is resolved from scratch: appending a particle on the right
    may preempt collisions already scheduled inside the prefix.
    """
    n = x.shape[0]
    partner, death, order, prv, nxt, ht, hi, hj, tie = _alloc(n - who)
    for k in range(start, n):
        # the pair must enclose an even number of particles, all paired inside
        if (k - who - 1) % 2 != 0 or v[k] >= v[who]:
            continue
        _, status, _ = _resolve_core(x[who:k + 1], v[who:k + 1], partner, death, order,
                                     prv, nxt, ht, hi, hj, tie)
        if status != STATUS_OK:
            return -2
        if partner[0] == k - who:
            return k
    return -1


@njit(cache=True)
def _range_balance(x, v, lo, hi, partner, death, order, prv, nxt, ht, hi_buf, hj, tie):
    _, status, _ = _resolve_core(x[lo:hi], v[lo:hi], partner, death, order,
                                 prv, nxt, ht, hi_buf, hj, tie)
    if status != STATUS_OK:
        return np.iinfo(np.int64).min
    total = 0
    for k in range(hi - lo):
        if partner[k] < 0:
            if v[lo + k] == 0.0:
                total += 1
            elif v[lo + k] == -1.0:
                total -= 1
    return total


@njit(cache=True)
def prefix_balances(x, v, uptos, barriers):
    """Zero-speed minus (-1)-speed survivors of each prefix ``0 .. upto - 1``.

    ``barriers`` are sorted indices of zero-speed particles known to survive
    every prefix containing them.  Nothing crosses such a particle, so a
    prefix splits at its last barrier into two independently resolved parts.
    Without barriers every prefix is resolved from scratch.
    """
    n = x.shape[0]
    bufs = _alloc(n)
    nb = barriers.shape[0]
    left_of = np.empty(nb, dtype=np.int64)  # balance of 0 .. barrier - 1
    prev = 0
    acc = 0
    for b in range(nb):
        acc += _range_balance(x, v, prev, barriers[b], *bufs)
        left_of[b] = acc
        prev = barriers[b]
    out = np.empty(uptos.shape[0], dtype=np.int64)
    for m in range(uptos.shape[0]):
        upto = uptos[m]
        b = np.searchsorted(barriers, upto) - 1
        if b < 0:
            out[m] = _range_balance(x, v, 0, upto, *bufs)
        else:
            out[m] = left_of[b] + _range_balance(x, v, barriers[b], upto, *bufs)
    return out
