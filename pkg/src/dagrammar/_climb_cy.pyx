# cython: language_level=3, boundscheck=False, wraparound=False
"""Hill-climbing alignment kernel, compiled twin of ``_climb_py``.

Same contract, same scan order, same tie-breaking; only the inner loops
are typed.  Keep the two implementations in lockstep.
"""

from libc.stdlib cimport free, malloc

KERNEL_NAME = "cython"


cdef int* _to_ints(object seq, Py_ssize_t n) except NULL:
    cdef int* out = <int*> malloc(n * sizeof(int) if n else sizeof(int))
    cdef Py_ssize_t i
    if out == NULL:
        raise MemoryError()
    for i in range(n):
        out[i] = seq[i]
    return out


cdef long _score(int* mapping, Py_ssize_t n_pred, int n_gold, int* unary,
                 int* pi1, int* pi2, int* pj1, int* pj2, Py_ssize_t n_pairs):
    cdef long score = 0
    cdef Py_ssize_t i, k
    cdef int j
    for i in range(n_pred):
        j = mapping[i]
        if j >= 0:
            score += unary[i * n_gold + j]
    for k in range(n_pairs):
        if mapping[pi1[k]] == pj1[k] and mapping[pi2[k]] == pj2[k]:
            score += 1
    return score


def score_mapping(mapping, n_gold, unary, pi1, pi2, pj1, pj2):
    cdef Py_ssize_t n_pred = len(mapping)
    cdef Py_ssize_t n_pairs = len(pi1)
    cdef int* c_map = _to_ints(mapping, n_pred)
    cdef int* c_unary = _to_ints(unary, n_pred * n_gold)
    cdef int* c_pi1 = _to_ints(pi1, n_pairs)
    cdef int* c_pi2 = _to_ints(pi2, n_pairs)
    cdef int* c_pj1 = _to_ints(pj1, n_pairs)
    cdef int* c_pj2 = _to_ints(pj2, n_pairs)
    try:
        return _score(c_map, n_pred, n_gold, c_unary,
                      c_pi1, c_pi2, c_pj1, c_pj2, n_pairs)
    finally:
        free(c_map); free(c_unary)
        free(c_pi1); free(c_pi2); free(c_pj1); free(c_pj2)


def climb(init, n_gold, unary, pi1, pi2, pj1, pj2):
    """Greedy local search from one start; returns (mapping, score)."""
    cdef Py_ssize_t n_pred = len(init)
    cdef Py_ssize_t n_pairs = len(pi1)
    cdef int m = n_gold
    cdef int* mapping = _to_ints(init, n_pred)
    cdef int* c_unary = _to_ints(unary, n_pred * m)
    cdef int* c_pi1 = _to_ints(pi1, n_pairs)
    cdef int* c_pi2 = _to_ints(pi2, n_pairs)
    cdef int* c_pj1 = _to_ints(pj1, n_pairs)
    cdef int* c_pj2 = _to_ints(pj2, n_pairs)
    cdef int* owner = <int*> malloc(m * sizeof(int) if m else sizeof(int))
    cdef Py_ssize_t i
    cdef int j, k, old_i, best_i, best_j
    cdef long score, trial, best_gain
    if owner == NULL:
        free(mapping); free(c_unary)
        free(c_pi1); free(c_pi2); free(c_pj1); free(c_pj2)
        raise MemoryError()
    try:
        for j in range(m):
            owner[j] = -1
        for i in range(n_pred):
            if mapping[i] >= 0:
                owner[mapping[i]] = <int> i
        score = _score(mapping, n_pred, m, c_unary,
                       c_pi1, c_pi2, c_pj1, c_pj2, n_pairs)
        while True:
            best_gain = 0
            best_i = -1
            best_j = -1
            for i in range(n_pred):
                for j in range(m):
                    if mapping[i] == j:
                        continue
                    k = owner[j]
                    old_i = mapping[i]
                    mapping[i] = j
                    if k >= 0:
                        mapping[k] = old_i
                    trial = _score(mapping, n_pred, m, c_unary,
                                   c_pi1, c_pi2, c_pj1, c_pj2, n_pairs)
                    mapping[i] = old_i
                    if k >= 0:
                        mapping[k] = j
                    if trial - score > best_gain:
                        best_gain = trial - score
                        best_i = <int> i
                        best_j = j
            if best_gain == 0:
                return [mapping[i] for i in range(n_pred)], int(score)
            k = owner[best_j]
            old_i = mapping[best_i]
            mapping[best_i] = best_j
            owner[best_j] = best_i
            if k >= 0:
                mapping[k] = old_i
            if old_i >= 0:
                owner[old_i] = k
            score += best_gain
    finally:
        free(mapping); free(c_unary); free(owner)
        free(c_pi1); free(c_pi2); free(c_pj1); free(c_pj2)
