"""Independently written reference implementations used by the tests."""
import itertools
import math


def cycle_oracle(trace, c, b):
    """Token-by-token wall-clock replay.

    Returns (t_exe, stalls) or (inf, 0) when some step can never fit.
    """
    if any(d > b + c for d in trace):
        return math.inf, 0
    tokens = b
    cycles = stalls = 0
    step = 0
    while step < len(trace):
        cycles += 1
        pool = tokens
        for _ in range(c):
            pool += 1
        need = trace[step]
        if need <= pool:
            pool -= need
            step += 1
        else:
            stalls += 1
        tokens = pool if pool < b else b
    return cycles, stalls


def brute_delta_max(trace, c):
    if not trace:
        return 0
    return max(sum(trace[:t]) - c * t for t in range(1, len(trace) + 1))


def all_traces(max_len, max_demand):
    for n in range(max_len + 1):
        yield from itertools.product(range(max_demand + 1), repeat=n)
