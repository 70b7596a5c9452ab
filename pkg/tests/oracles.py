"""Independent reference computations used as test oracles.

Populations are kept as ``{bit tuple: probability}`` and every gate is written
out on bit tuples, sharing no code with the package.
"""

import itertools
import math


def thermal(biases):
    pops = {}
    for bits in itertools.product((0, 1), repeat=len(biases)):
        p = 1.0
        for b, eps in zip(bits, biases):
            p *= (1 + eps) / 2 if b == 0 else (1 - eps) / 2
        pops[bits] = p
    return pops


def bias(pops, i):
    return sum(p if bits[i] == 0 else -p for bits, p in pops.items())


def swap(pops, i, j):
    out = {}
    for bits, p in pops.items():
        b = list(bits)
        b[i], b[j] = b[j], b[i]
        out[tuple(b)] = p
    return out


def compress(pops, t, a, b):
    out = {}
    for bits, p in pops.items():
        key = (bits[t], bits[a], bits[b])
        new = list(bits)
        if key == (0, 1, 1):
            new[t], new[a], new[b] = 1, 0, 0
        elif key == (1, 0, 0):
            new[t], new[a], new[b] = 0, 1, 1
        out[tuple(new)] = p
    return out


def reset(pops, r, eps):
    rest = {}
    for bits, p in pops.items():
        key = bits[:r] + bits[r + 1:]
        rest[key] = rest.get(key, 0.0) + p
    out = {}
    for key, p in rest.items():
        out[key[:r] + (0,) + key[r:]] = p * (1 + eps) / 2
        out[key[:r] + (1,) + key[r:]] = p * (1 - eps) / 2
    return out


def three_qubit_circuit_target_biases(eps, rounds):
    """Target (qubit 0) bias after each compression of the three-carbon circuit."""
    pops = thermal([0.0, 0.0, 0.0])
    out = []
    for r in range(rounds):
        pops = reset(pops, 2, eps)
        pops = swap(pops, 2, 1)
        pops = reset(pops, 2, eps)
        if r == 0:
            pops = swap(pops, 2, 0)
            pops = reset(pops, 2, eps)
        pops = compress(pops, 0, 1, 2)
        out.append(bias(pops, 0))
    return out


def binary_entropy(p):
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def max_bias_over_permutations(probs, qubit=0):
    """Brute force over every reassignment of the populations to basis states."""
    import numpy as np

    probs = np.asarray(probs)
    n = int(round(math.log2(len(probs))))
    sign = np.array([1 - 2 * ((k >> (n - 1 - qubit)) & 1) for k in range(len(probs))])
    perms = np.array(list(itertools.permutations(range(len(probs)))))
    return float(np.max(probs[perms] @ sign))
