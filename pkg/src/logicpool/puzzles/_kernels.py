"""Enumeration kernels behind the puzzle solvers.

Both solvers spend essentially all their time here: knights-and-knaves
checks every truth assignment against compiled statement bytecode, and the
zebra search walks per-attribute permutations depth-first. Each kernel has
a numba-jitted implementation and a vectorized pure-numpy fallback with
identical output (same solutions, same order).

Set ``LOGICPOOL_NO_NUMBA=1`` to force the numpy path (also used
automatically when numba is not importable). ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

from .statements import OP_AND, OP_ATOM, OP_IFF, OP_IMPLIES, OP_NOT, OP_OR

# Zebra clue kind codes (mirrored by puzzles.zebra).
K_SAME_HOUSE = 0
K_AT_POSITION = 1
K_LEFT_OF = 2
K_DIRECTLY_LEFT_OF = 3
K_NEXT_TO = 4
K_NOT_SAME_HOUSE = 5

_FORCE_NUMPY = os.environ.get("LOGICPOOL_NO_NUMBA", "").strip() not in ("", "0")

try:  # pragma: no cover - exercised via env-flag matrix in CI
    if _FORCE_NUMPY:
        raise ImportError("numba disabled by LOGICPOOL_NO_NUMBA")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# knights and knaves: consistent assignment masks
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kk_masks_jit(code: np.ndarray, bounds: np.ndarray, n_chars: int) -> np.ndarray:
    n_masks = 1 << n_chars
    out = np.empty(n_masks, dtype=np.int64)
    stack = np.empty(64, dtype=np.bool_)
    found = 0
    for mask in range(n_masks):
        ok = True
        for c in range(n_chars):
            sp = 0
            for i in range(bounds[c], bounds[c + 1]):
                op = code[i, 0]
                if op == OP_ATOM:
                    stack[sp] = ((mask >> code[i, 1]) & 1) == code[i, 2]
                    sp += 1
                elif op == OP_NOT:
                    stack[sp - 1] = not stack[sp - 1]
                else:
                    b = stack[sp - 1]
                    a = stack[sp - 2]
                    sp -= 1
                    if op == OP_AND:
                        stack[sp - 1] = a and b
                    elif op == OP_OR:
                        stack[sp - 1] = a or b
                    elif op == OP_IMPLIES:
                        stack[sp - 1] = (not a) or b
                    else:  # OP_IFF
                        stack[sp - 1] = a == b
            if stack[0] != (((mask >> c) & 1) == 1):
                ok = False
                break
        if ok:
            out[found] = mask
            found += 1
    return out[:found]


def _kk_masks_numpy(code: np.ndarray, bounds: np.ndarray, n_chars: int) -> np.ndarray:
    n_masks = 1 << n_chars
    masks = np.arange(n_masks, dtype=np.int64)
    knight = ((masks[:, None] >> np.arange(n_chars)) & 1).astype(bool)
    consistent = np.ones(n_masks, dtype=bool)
    for c in range(n_chars):
        stack: list[np.ndarray] = []
        for i in range(bounds[c], bounds[c + 1]):
            op, a1, a2 = int(code[i, 0]), int(code[i, 1]), int(code[i, 2])
            if op == OP_ATOM:
                stack.append(knight[:, a1] == bool(a2))
            elif op == OP_NOT:
                stack[-1] = ~stack[-1]
            else:
                b = stack.pop()
                a = stack.pop()
                if op == OP_AND:
                    stack.append(a & b)
                elif op == OP_OR:
                    stack.append(a | b)
                elif op == OP_IMPLIES:
                    stack.append(~a | b)
                else:  # OP_IFF
                    stack.append(a == b)
        consistent &= stack[0] == knight[:, c]
    return masks[consistent]


def kk_consistent_masks(code: np.ndarray, bounds: np.ndarray, n_chars: int) -> np.ndarray:
    """All assignment masks (character i = bit i, knight = 1) consistent with
    every character's statement, ascending."""
    if _HAVE_NUMBA:
        return _kk_masks_jit(code, bounds, n_chars)
    return _kk_masks_numpy(code, bounds, n_chars)


# ---------------------------------------------------------------------------
# zebra: depth-first search over per-attribute permutations
# ---------------------------------------------------------------------------


@njit(cache=True)
def _zebra_search_jit(
    pos: np.ndarray, clues: np.ndarray, m_attrs: int, limit: int
) -> np.ndarray:
    # pos[j, v] = house of value v under permutation j; permutations are in
    # lexicographic order, so ascending cursor order yields lexicographic
    # solution order.
    n_perms = pos.shape[0]
    n_clues = clues.shape[0]
    assigned = np.full(m_attrs, -1, dtype=np.int64)
    cursor = np.zeros(m_attrs, dtype=np.int64)
    out = np.empty((limit, m_attrs), dtype=np.int64)
    found = 0
    depth = 0
    while depth >= 0:
        if depth == m_attrs:
            for a in range(m_attrs):
                out[found, a] = assigned[a]
            found += 1
            if found >= limit:
                break
            depth -= 1
            continue
        j = cursor[depth]
        if j >= n_perms:
            cursor[depth] = 0
            depth -= 1
            continue
        cursor[depth] = j + 1
        assigned[depth] = j
        ok = True
        for k in range(n_clues):
            a_attr = clues[k, 1]
            b_attr = clues[k, 3]
            # Check a clue exactly once: at the first depth where all of its
            # attributes are assigned and at least one equals `depth`.
            if a_attr != depth and b_attr != depth:
                continue
            if a_attr > depth or b_attr > depth:
                continue
            kind = clues[k, 0]
            ha = pos[assigned[a_attr], clues[k, 2]]
            if kind == K_AT_POSITION:
                if ha != clues[k, 5]:
                    ok = False
                    break
                continue
            hb = pos[assigned[b_attr], clues[k, 4]]
            if kind == K_SAME_HOUSE:
                sat = ha == hb
            elif kind == K_LEFT_OF:
                sat = ha < hb
            elif kind == K_DIRECTLY_LEFT_OF:
                sat = ha + 1 == hb
            elif kind == K_NEXT_TO:
                sat = (ha - hb == 1) or (hb - ha == 1)
            else:  # K_NOT_SAME_HOUSE
                sat = ha != hb
            if not sat:
                ok = False
                break
        if ok:
            depth += 1
    return out[:found]


def _pair_table(kind: int, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
    if kind == K_SAME_HOUSE:
        return ha == hb
    if kind == K_LEFT_OF:
        return ha < hb
    if kind == K_DIRECTLY_LEFT_OF:
        return ha + 1 == hb
    if kind == K_NEXT_TO:
        return np.abs(ha - hb) == 1
    return ha != hb  # K_NOT_SAME_HOUSE


def _zebra_search_numpy(
    pos: np.ndarray, clues: np.ndarray, m_attrs: int, limit: int
) -> np.ndarray:
    n_perms = pos.shape[0]
    unary = [np.ones(n_perms, dtype=bool) for _ in range(m_attrs)]
    pair: dict[tuple[int, int], np.ndarray] = {}
    for row in clues:
        kind, a_attr, a_val, b_attr, b_val, extra = (int(x) for x in row)
        if kind == K_AT_POSITION:
            unary[a_attr] &= pos[:, a_val] == extra
            continue
        ha = pos[:, a_val]
        hb = pos[:, b_val]
        if a_attr == b_attr:
            unary[a_attr] &= _pair_table(kind, ha, hb)
            continue
        table = _pair_table(kind, ha[:, None], hb[None, :])
        if a_attr > b_attr:
            a_attr, b_attr = b_attr, a_attr
            table = table.T
        key = (a_attr, b_attr)
        pair[key] = table if key not in pair else pair[key] & table

    solutions: list[tuple[int, ...]] = []
    assigned = np.zeros(m_attrs, dtype=np.int64)

    def descend(depth: int) -> bool:
        if depth == m_attrs:
            solutions.append(tuple(assigned))
            return len(solutions) >= limit
        allowed = unary[depth].copy()
        for a in range(depth):
            table = pair.get((a, depth))
            if table is not None:
                allowed &= table[assigned[a]]
        for j in np.flatnonzero(allowed):
            assigned[depth] = j
            if descend(depth + 1):
                return True
        return False

    descend(0)
    return np.array(solutions, dtype=np.int64).reshape(-1, m_attrs)


def zebra_solutions(pos: np.ndarray, clues: np.ndarray, m_attrs: int, limit: int) -> np.ndarray:
    """Permutation-index tuples (one per attribute) satisfying every clue,
    in lexicographic order, truncated at ``limit`` rows."""
    if clues.size == 0:
        clues = np.empty((0, 6), dtype=np.int64)
    if _HAVE_NUMBA:
        return _zebra_search_jit(pos, clues, m_attrs, limit)
    return _zebra_search_numpy(pos, clues, m_attrs, limit)


def active_backend() -> str:
    """Which kernel path is live: "numba" or "numpy"."""
    return "numba" if _HAVE_NUMBA else "numpy"
