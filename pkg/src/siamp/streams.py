"""Named, independent RNG substreams derived from one master seed.

Every random draw in the library comes from a substream addressed by a
name path such as ("trial", 3, "noise").  Substreams are independent of
each other and stable across runs and platforms, so toggling one consumer
(e.g. the detector variant) never perturbs the draws seen by another.
"""

import numpy as np


def _label_entropy(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    if isinstance(label, str):
        return int.from_bytes(label.encode("utf-8"), "little")
    raise TypeError(f"substream labels must be int or str, got {type(label)!r}")


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    """SeedSequence for the substream addressed by ``labels``."""
    entropy = [int(master_seed)] + [_label_entropy(lab) for lab in labels]
    return np.random.SeedSequence(entropy)


def substream(master_seed: int, *labels) -> np.random.Generator:
    """Generator for the substream addressed by ``labels``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *labels)))
