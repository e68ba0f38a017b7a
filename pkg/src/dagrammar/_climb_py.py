"""Hill-climbing alignment kernel, pure-Python reference implementation.

The compiled twin in ``_climb_cy.pyx`` mirrors this file operation for
operation; the two must stay bit-identical in scores, mappings, and
tie-breaking so either can back the evaluator.

Inputs are plain integers: ``n_pred`` and ``n_gold`` variable counts, a
flat ``unary`` score table of length ``n_pred * n_gold`` counting the
variable-local triples shared by each candidate pairing, and four
parallel arrays describing relation-triple coincidences: entry ``k``
scores one point when the mapping sends ``pi1[k] -> pj1[k]`` and
``pi2[k] -> pj2[k]`` simultaneously.  A mapping is a list of gold
indices with -1 for unmapped.
"""

KERNEL_NAME = "pure-python"


def score_mapping(mapping, n_gold, unary, pi1, pi2, pj1, pj2):
    score = 0
    for i, j in enumerate(mapping):
        if j >= 0:
            score += unary[i * n_gold + j]
    for k in range(len(pi1)):
        if mapping[pi1[k]] == pj1[k] and mapping[pi2[k]] == pj2[k]:
            score += 1
    return score


def climb(init, n_gold, unary, pi1, pi2, pj1, pj2):
    """Greedy local search from one start; returns (mapping, score).

    Moves exchange the images of a pred variable and of the current
    owner of a gold variable (a plain move when that gold variable is
    free).  The best strictly improving move is applied each round, ties
    broken by scan order, so the result is deterministic in the inputs.
    """
    mapping = list(init)
    n_pred = len(mapping)
    owner = [-1] * n_gold
    for i, j in enumerate(mapping):
        if j >= 0:
            owner[j] = i
    score = score_mapping(mapping, n_gold, unary, pi1, pi2, pj1, pj2)
    while True:
        best_gain = 0
        best_i = -1
        best_j = -1
        for i in range(n_pred):
            for j in range(n_gold):
                if mapping[i] == j:
                    continue
                k = owner[j]
                old_i = mapping[i]
                mapping[i] = j
                if k >= 0:
                    mapping[k] = old_i
                trial = score_mapping(mapping, n_gold, unary,
                                      pi1, pi2, pj1, pj2)
                mapping[i] = old_i
                if k >= 0:
                    mapping[k] = j
                if trial - score > best_gain:
                    best_gain = trial - score
                    best_i = i
                    best_j = j
        if best_gain == 0:
            return mapping, score
        k = owner[best_j]
        old_i = mapping[best_i]
        mapping[best_i] = best_j
        owner[best_j] = best_i
        if k >= 0:
            mapping[k] = old_i
        if old_i >= 0:
            owner[old_i] = k
        score += best_gain
