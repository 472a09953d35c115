"""Reference SplitMix64 sampler used to freeze grid-sampling golden values."""
import json
import sys

MASK = (1 << 64) - 1


def splitmix64(seed):
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def sample(seed, n, c):
    gen = splitmix64(seed)
    # uniform index: floor(top53 * c / 2^53), done with exact Python integers
    return [[((next(gen) >> 11) * c) // (1 << 53) for _ in range(n)] for _ in range(n)]


CASES = [(0, 2, 3), (1, 3, 10), (42, 4, 5), (MASK, 3, 7), (123456789, 5, 2)]

if __name__ == "__main__":
    out = {
        "raw_seed0_first4": [v for v, _ in zip(splitmix64(0), range(4))],
        "cases": [{"seed": s, "n": n, "c": c, "matrix": sample(s, n, c)} for s, n, c in CASES],
    }
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")
