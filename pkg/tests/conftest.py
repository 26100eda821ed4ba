import numpy as np

from harness_lab.lattice import WeightVector, parse_weights, validate_weights


def wv(text: str) -> WeightVector:
    return validate_weights(parse_weights(text))


LAZY = "0:0.5,1:0.5"
ASYM = "-1:0.5,0:0.25,2:0.25"
SYM3 = "-1:0.25,0:0.5,1:0.25"


def random_walk(rng: np.random.Generator, max_abs: int = 3, size: int = 3) -> WeightVector:
    """Seeded valid weight vector: span 1, positive variance."""
    while True:
        offs = np.sort(rng.choice(np.arange(-max_abs, max_abs + 1), size=size, replace=False))
        gaps = np.diff(offs)
        if len(offs) > 1 and np.gcd.reduce(gaps) == 1:
            break
    masses = rng.uniform(0.1, 1.0, size=size)
    masses /= masses.sum()
    text = ",".join(f"{int(o)}:{float(p)!r}" for o, p in zip(offs, masses))
    return wv(text)
