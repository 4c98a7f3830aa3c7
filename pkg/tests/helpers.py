"""Independent brute-force oracles for the test suite.

Everything here is written with plain Python loops and definitional
formulas, on purpose: these functions double-check the package's vectorized
paths, so they must not share code with them. Statistic functions return
None where the statistic is undefined (zero-variance detection is exact:
a group is constant when its min equals its max).
"""

import itertools


def multiset_assignments(sizes):
    """Every distinct label vector for the given group sizes.

    Built by recursively choosing index sets with itertools.combinations,
    i.e. a different construction from the package's next-permutation walk.
    """
    n = sum(sizes)

    def place(positions, labels):
        j = labels[0]
        take = sizes[j - 1]
        if len(labels) == 1:
            yield {p: j for p in positions}
            return
        for chosen in itertools.combinations(positions, take):
            chosen_set = set(chosen)
            rest = tuple(p for p in positions if p not in chosen_set)
            for tail in place(rest, labels[1:]):
                full = dict(tail)
                for p in chosen:
                    full[p] = j
                yield full

    for mapping in place(tuple(range(n)), tuple(range(1, len(sizes) + 1))):
        yield [mapping[i] for i in range(n)]


def group_values(y, w):
    groups = {}
    for yi, wi in zip(y, w):
        groups.setdefault(int(wi), []).append(float(yi))
    return groups


def oracle_mean(values):
    return sum(values) / len(values)


def oracle_variance(values):
    if len(values) < 2 or min(values) == max(values):
        return 0.0
    m = oracle_mean(values)
    return sum((v - m) ** 2 for v in values) / (len(values) - 1)


def oracle_f(y, w):
    groups = group_values(y, w)
    n = len(y)
    j = len(groups)
    grand = oracle_mean(list(y))
    ss_tre = sum(len(v) * (oracle_mean(v) - grand) ** 2 for v in groups.values())
    constant = all(len(v) < 2 or min(v) == max(v) for v in groups.values())
    if constant:
        return None
    ss_res = sum(
        sum((x - oracle_mean(v)) ** 2 for x in v) for v in groups.values()
    )
    return (ss_tre / (j - 1)) / (ss_res / (n - j))


def oracle_x2(y, w):
    groups = group_values(y, w)
    weights, means = {}, {}
    for j, v in groups.items():
        if len(v) < 2 or min(v) == max(v):
            return None
        means[j] = oracle_mean(v)
        weights[j] = len(v) / oracle_variance(v)
    total_weight = sum(weights.values())
    weighted_mean = sum(weights[j] * means[j] for j in groups) / total_weight
    return sum(weights[j] * (means[j] - weighted_mean) ** 2 for j in groups)


def oracle_t2(y, w):
    groups = group_values(y, w)
    values = list(y)
    if min(values) == max(values):
        return None
    s2 = oracle_variance(values)
    n1, n2 = len(groups[1]), len(groups[2])
    n = n1 + n2
    tau = oracle_mean(groups[1]) - oracle_mean(groups[2])
    return tau**2 / (n * s2 / (n1 * n2))


def oracle_dim(y, w):
    groups = group_values(y, w)
    return abs(oracle_mean(groups[1]) - oracle_mean(groups[2]))


def oracle_pairwise(j, jp):
    def statistic(y, w):
        groups = group_values(y, w)
        a, b = groups[j], groups[jp]
        if min(a) == max(a) or min(b) == max(b):
            return None
        tau = oracle_mean(a) - oracle_mean(b)
        return tau**2 / (oracle_variance(a) / len(a) + oracle_variance(b) / len(b))

    return statistic


ORACLE_STATISTICS = {
    "f": oracle_f,
    "x2": oracle_x2,
    "t2": oracle_t2,
    "dim": oracle_dim,
}


def oracle_exact_pvalue(y, w_obs, sizes, statistic, policy="count-extreme"):
    """Exact randomization p-value by full enumeration.

    Ties count as extreme, with the same relative slack the engine
    documents: T* >= T_obs - 1e-12 |T_obs|.
    """
    t_obs = statistic(y, w_obs)
    assert t_obs is not None, "observed statistic must be defined"
    threshold = t_obs - 1e-12 * abs(t_obs)
    extreme = degenerate = total = 0
    for w in multiset_assignments(sizes):
        total += 1
        value = statistic(y, w)
        if value is None:
            degenerate += 1
        elif value >= threshold:
            extreme += 1
    if policy == "count-extreme":
        return (extreme + degenerate) / total, degenerate
    return extreme / (total - degenerate), degenerate


def oracle_expected_ss(table, sizes):
    """Enumerated E[SSTre], E[SSRes] for a potential-outcome table."""
    total = 0
    sum_tre = 0.0
    sum_res = 0.0
    n = len(table)
    j_max = len(sizes)
    for w in multiset_assignments(sizes):
        y = [table[i][w[i] - 1] for i in range(n)]
        groups = group_values(y, w)
        grand = oracle_mean(y)
        sum_tre += sum(
            len(v) * (oracle_mean(v) - grand) ** 2 for v in groups.values()
        )
        sum_res += sum(
            sum((x - oracle_mean(v)) ** 2 for x in v) for v in groups.values()
        )
        total += 1
    assert j_max >= 2
    return sum_tre / total, sum_res / total
