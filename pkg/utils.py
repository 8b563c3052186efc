import os
import platform
from typing import Optional

import numpy as np

# Stream identifiers mixed into seed entropy so one master seed can feed
# independent generators without any two sharing a sequence.
RNG_POISSON = 0
RNG_TREE = 1
RNG_GENERATOR_MODEL = 2
RNG_GENERATOR_INSTANCES = 3
RNG_DRIFT = 4

MISSING_MARK = '—'


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, keys...); equal inputs give equal streams"""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])


def argmax_lowest(scores: np.ndarray) -> int:
    """Index of the largest score; ties go to the lowest index"""
    if len(scores) == 0:
        return 0
    return int(np.argmax(scores))


def normalize_votes(scores: np.ndarray) -> np.ndarray:
    total = float(np.sum(scores))
    if total > 0:
        return scores / total
    return np.zeros_like(scores, dtype=np.float64)


def format_pct(value: Optional[float], digits: int = 2) -> str:
    """Fixed-point rendering; undefined values become MISSING_MARK"""
    if value is None or np.isnan(value):
        return MISSING_MARK
    return f"{value:.{digits}f}"


def parse_number_list(text: str, cast=float) -> list:
    """Split '0.5,0.001' style lists"""
    return [cast(token) for token in text.split(',') if token.strip()]


def hardware_summary() -> str:
    """One-line host description written next to timing results"""
    return (f"{platform.node()} {platform.system()} {platform.release()} "
            f"{platform.machine()} cpus={os.cpu_count()} python={platform.python_version()}")


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a sub-run (a CV replica, a sweep point) of a seeded experiment"""
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]]).generate_state(1)[0])
