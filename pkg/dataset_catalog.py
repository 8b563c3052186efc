"""
Named synthetic datasets (AGR_a, SEA_g, ...) built from generator configs.

Drift datasets switch concept once, at `position` (default: half the
stream). Abrupt drifts use width 1; gradual drifts default to
min(100000, length // 10). Every value can be overridden per run.
"""
import logging
from typing import Dict, List, Optional

from errors import DomainError
from streams import ConceptDriftStream, StreamGenerator, make_generator

logger = logging.getLogger(__name__)

GRADUAL_WIDTH = 100000

DATASETS: List[Dict] = [
    {
        'name': 'AGR_a',
        'generator': 'agrawal',
        'drift': 'abrupt',
        'before': {'function': 1},
        'after': {'function': 2},
        'noise_key': 'perturbation',
    },
    {
        'name': 'AGR_g',
        'generator': 'agrawal',
        'drift': 'gradual',
        'before': {'function': 1},
        'after': {'function': 2},
        'noise_key': 'perturbation',
    },
    {
        'name': 'HYPER',
        'generator': 'hyperplane',
        'drift': 'incremental',
        'before': {'mag_change': 0.001},
        'noise_key': 'noise',
    },
    {
        'name': 'LED_a',
        'generator': 'led',
        'drift': 'abrupt',
        'before': {'n_drift_features': 1},
        'after': {'n_drift_features': 5},
        'noise_key': 'noise',
    },
    {
        'name': 'LED_g',
        'generator': 'led',
        'drift': 'gradual',
        'before': {'n_drift_features': 1},
        'after': {'n_drift_features': 5},
        'noise_key': 'noise',
    },
    {
        'name': 'RBF_m',
        'generator': 'rbf',
        'drift': 'incremental',
        'before': {'speed': 0.0001},
    },
    {
        'name': 'RBF_f',
        'generator': 'rbf',
        'drift': 'incremental',
        'before': {'speed': 0.001},
    },
    {
        'name': 'RTG',
        'generator': 'rtg',
        'drift': 'none',
        'before': {},
    },
    {
        'name': 'SEA_a',
        'generator': 'sea',
        'drift': 'abrupt',
        'before': {'function': 2},
        'after': {'function': 3},
        'noise_key': 'noise',
    },
    {
        'name': 'SEA_g',
        'generator': 'sea',
        'drift': 'gradual',
        'before': {'function': 2},
        'after': {'function': 3},
        'noise_key': 'noise',
    },
]

_BY_NAME = {entry['name'].lower(): entry for entry in DATASETS}


def dataset_names() -> List[str]:
    return [entry['name'] for entry in DATASETS]


def get_dataset(name: str) -> Optional[Dict]:
    return _BY_NAME.get(name.lower())


def default_drift_width(drift: str, length: int) -> int:
    if drift == 'gradual':
        return max(1, min(GRADUAL_WIDTH, length // 10))
    return 1


def build_dataset(name: str, length: int, seed: int = 1, noise: Optional[float] = None,
                  drift_position: Optional[int] = None, drift_width: Optional[int] = None) -> StreamGenerator:
    """Stream for a catalogue entry, scaled to `length` instances"""
    entry = get_dataset(name)
    if entry is None:
        raise DomainError(f"unknown dataset '{name}'; known: {', '.join(dataset_names())}")
    before = dict(entry['before'])
    after = dict(entry.get('after', {}))
    if noise is not None:
        key = entry.get('noise_key')
        if key is None:
            logger.warning(f"Dataset {entry['name']} has no noise parameter; ignoring noise={noise}")
        else:
            before[key] = noise
            after[key] = noise
    stream = make_generator(entry['generator'], seed=seed, **before)
    if 'after' not in entry:
        return stream
    drift_stream = make_generator(entry['generator'], seed=seed + 1, **after)
    position = length // 2 if drift_position is None else drift_position
    width = default_drift_width(entry['drift'], length) if drift_width is None else drift_width
    logger.debug(f"{entry['name']}: {entry['drift']} drift at {position}, width {width}")
    return ConceptDriftStream(stream, drift_stream, position=position, width=width, seed=seed + 2)
