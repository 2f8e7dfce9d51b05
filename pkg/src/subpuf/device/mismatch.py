"""Counter-based random streams and Pelgrom mismatch sampling.

A stream is identified by a seed and an integer key path such as
``(STREAM_MISMATCH, stage, role)``. The key is mixed by numpy's
``SeedSequence`` into a Philox key, so a stream is reproducible from its
identity alone: no generator state is shared between streams, and a sample
does not depend on which other streams were drawn first or on which worker
draws it. Vectors drawn from one stream are indexed by cell.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from subpuf.device.params import MismatchModel, TransistorParams, VthDeviation


@dataclass(frozen=True)
class RandomStream:
    """Deterministic keyed stream backed by the Philox counter-based generator."""

    seed: int
    key: Tuple[int, ...] = ()

    def child(self, *key: int) -> "RandomStream":
        """Stream with ``key`` appended to this stream's key path."""
        return RandomStream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(sequence))

    def normal(self, size, scale: float = 1.0) -> np.ndarray:
        """Draw N(0, scale) samples from the start of the stream."""
        return self.generator().normal(0.0, scale, size=size)


def sample_mismatch(
    model: MismatchModel,
    params: TransistorParams,
    stream: RandomStream,
    size: int = 1,
) -> VthDeviation:
    """Sample ``size`` devices of type ``params`` from ``stream``.

    Static offsets follow N(0, A_VT / sqrt(W L)); the body factor deviates by
    N(0, gamma_sigma_rel * gamma); the tempco deviation has std tempco_sigma
    and correlation ``tempco_gamma_correlation`` with the body-factor
    deviation; the slope factor deviates by N(0, slope_sigma_rel) relative.
    """
    z = stream.generator().standard_normal((4, size))
    rho = model.tempco_gamma_correlation

    static = model.vth_sigma(params) * z[0]
    gamma = model.gamma_sigma_rel * params.body_gamma * z[1]
    tempco = model.tempco_sigma * (rho * z[1] + np.sqrt(1.0 - rho**2) * z[2])
    slope = model.slope_sigma_rel * z[3]
    return VthDeviation(static=static, tempco=tempco, gamma=gamma, slope=slope)
