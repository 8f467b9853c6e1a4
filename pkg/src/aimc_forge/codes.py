"""Pulse-compression code sequences: Barker, Frank, P1-P4 polyphase, and
Costas frequency-hop arrays.

Phase codes are returned as radian chip phases; Costas arrays as hop
indices (a permutation of 0..order-1). All constructions are
deterministic; the only seeded choice is the Costas symmetry variant.
"""

from functools import lru_cache

import numpy as np

__all__ = ["CodeSequence", "barker", "frank", "p1", "p2", "p3", "p4",
           "costas", "is_costas"]


class CodeSequence:
    """Either a phase code (phases_rad set) or a hop code (hop_indices set)."""

    def __init__(self, phases_rad=None, hop_indices=None):
        if (phases_rad is None) == (hop_indices is None):
            raise ValueError("exactly one of phases_rad / hop_indices required")
        self.phases_rad = None if phases_rad is None else np.asarray(phases_rad, dtype=float)
        self.hop_indices = None if hop_indices is None else np.asarray(hop_indices, dtype=int)

    def __len__(self):
        arr = self.phases_rad if self.phases_rad is not None else self.hop_indices
        return len(arr)


# The nine binary Barker sequences shipped in the registry, as +1/-1 chips.
# Lengths 2 and 4 each have two inequivalent variants.
_BARKER = {
    "2_1": [1, 1],
    "2_2": [1, -1],
    "3": [1, 1, -1],
    "4_1": [1, 1, -1, 1],
    "4_2": [1, 1, 1, -1],
    "5": [1, 1, 1, -1, 1],
    "7": [1, 1, 1, -1, -1, 1, -1],
    "11": [1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1],
    "13": [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
}


def barker(code_id, mark_phase=np.pi):
    """Binary Barker code as {0, mark_phase} chip phases.

    code_id is one of "2_1", "2_2", "3", "4_1", "4_2", "5", "7", "11", "13".
    """
    key = str(code_id)
    if key not in _BARKER:
        raise ValueError(f"unknown Barker code id: {code_id!r}")
    chips = np.asarray(_BARKER[key])
    return CodeSequence(phases_rad=np.where(chips > 0, 0.0, mark_phase))


def frank(m, unit_scale=1.0):
    """Frank polyphase code: phi(i, j) = (2 pi / M) i j, i, j = 0..M-1,
    flattened row-major (i = group index) into M^2 chips."""
    if m < 2:
        raise ValueError("Frank code requires M >= 2")
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    phases = (2.0 * np.pi / m) * unit_scale * (i * j)
    return CodeSequence(phases_rad=phases.reshape(-1) % (2.0 * np.pi))


def p1(m, unit_scale=1.0):
    """P1 code: phi(n, m') = -(pi/M) [M - (2m'-1)] [(m'-1)M + (n-1)],
    n = chip within group, m' = group, both 1-based; M^2 chips."""
    if m < 2:
        raise ValueError("P1 code requires M >= 2")
    grp, n = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    phases = -(np.pi / m) * unit_scale * (m - (2 * grp - 1)) * ((grp - 1) * m + (n - 1))
    return CodeSequence(phases_rad=phases.reshape(-1) % (2.0 * np.pi))


def p2(m, unit_scale=1.0):
    """P2 code (even M): phi(n, m') = (pi/(2M)) (2n-1-M) (2m'-1-M)."""
    if m < 2 or m % 2:
        raise ValueError("P2 code requires even M >= 2")
    grp, n = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    phases = (np.pi / (2.0 * m)) * unit_scale * (2 * n - 1 - m) * (2 * grp - 1 - m)
    return CodeSequence(phases_rad=phases.reshape(-1) % (2.0 * np.pi))


def p3(nc, unit_scale=1.0):
    """P3 code: phi(n) = pi (n-1)^2 / Nc, n = 1..Nc."""
    if nc < 4:
        raise ValueError("P3 code requires Nc >= 4")
    n = np.arange(nc, dtype=float)
    return CodeSequence(phases_rad=(np.pi / nc) * unit_scale * n ** 2 % (2.0 * np.pi))


def p4(nc, unit_scale=1.0):
    """P4 code: phi(n) = pi (n-1)^2 / Nc - pi (n-1), n = 1..Nc."""
    if nc < 4:
        raise ValueError("P4 code requires Nc >= 4")
    n = np.arange(nc, dtype=float)
    phases = unit_scale * ((np.pi / nc) * n ** 2 - np.pi * n)
    return CodeSequence(phases_rad=phases % (2.0 * np.pi))


def is_costas(hops):
    """Exhaustive displacement-vector distinctness check."""
    hops = np.asarray(hops)
    n = len(hops)
    if sorted(hops.tolist()) != list(range(n)):
        return False
    seen = set()
    for d in range(1, n):
        for i in range(n - d):
            vec = (d, int(hops[i + d]) - int(hops[i]))
            if vec in seen:
                return False
            seen.add(vec)
    return True


def _primitive_root(p):
    factors = set()
    n, q = p - 1, 2
    while q * q <= n:
        while n % q == 0:
            factors.add(q)
            n //= q
        q += 1
    if n > 1:
        factors.add(n)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            return g
    raise ValueError(f"{p} is not prime")


def _is_prime(n):
    if n < 2:
        return False
    q = 2
    while q * q <= n:
        if n % q == 0:
            return False
        q += 1
    return True


def _welch_costas(p):
    """Welch W1 construction: hops[i] = g^(i+1) mod p - 1, order p - 1."""
    g = _primitive_root(p)
    return [pow(g, i + 1, p) - 1 for i in range(p - 1)]


def _backtrack_costas(order):
    """Lexicographically first Costas permutation of the given order."""
    used = [False] * order
    hops = []
    diffs = [set() for _ in range(order)]

    def place(value):
        for d in range(1, len(hops) + 1):
            delta = value - hops[-d]
            if delta in diffs[d]:
                return False
        for d in range(1, len(hops) + 1):
            diffs[d].add(value - hops[-d])
        hops.append(value)
        used[value] = True
        return True

    def unplace():
        value = hops.pop()
        used[value] = False
        for d in range(1, len(hops) + 1):
            diffs[d].discard(value - hops[-d])

    def search():
        if len(hops) == order:
            return True
        for v in range(order):
            if not used[v] and place(v):
                if search():
                    return True
                unplace()
        return False

    if search():
        return hops
    return None


@lru_cache(maxsize=None)
def _base_costas(order):
    if order < 2:
        raise ValueError("Costas order must be >= 2")
    if _is_prime(order + 1):
        return tuple(_welch_costas(order + 1))
    if order <= 14:
        found = _backtrack_costas(order)
        if found is not None:
            return tuple(found)
    raise ValueError(f"no Costas array available for order {order}")


def _dihedral_variant(hops, variant):
    """Apply one of the 8 square symmetries; all preserve the Costas
    property. variant 0 is the base array."""
    a = np.asarray(hops)
    n = len(a)
    if variant & 1:
        a = a[::-1]                       # reverse positions
    if variant & 2:
        a = (n - 1) - a                   # complement frequencies
    if variant & 4:
        a = np.argsort(a)                 # transpose (swap position/frequency)
    return a


def costas(order, variant=0):
    """Costas hop sequence of the given order.

    variant (0..7) selects a dihedral symmetry of the base array, giving
    per-pulse variety without a search. Raises if no base array is known
    for the order.
    """
    base = _base_costas(int(order))
    return CodeSequence(hop_indices=_dihedral_variant(base, int(variant) & 7))
