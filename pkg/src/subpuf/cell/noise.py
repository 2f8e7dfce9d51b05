"""Per-evaluation comparison noise."""
from pydantic import BaseModel, ConfigDict, Field

from subpuf.core.constants import MODE_ORIGINAL, MODE_RECONFIGURED


class NoiseModel(BaseModel):
    """Input-referred comparison noise and the chain gains that scale it.

    The noise seen by the decision is ``sigma_n * gain_original / gain``, so a
    chain with fewer stages (lower gain) is noisier.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_n: float = Field(default=0.2e-3, ge=0, description="V at the original gain")
    gain_original: float = Field(default=40.0, gt=1)
    gain_reconfigured: float = Field(default=30.0, gt=1)

    def effective_sigma(self, mode: str) -> float:
        if mode == MODE_ORIGINAL:
            return self.sigma_n
        if mode == MODE_RECONFIGURED:
            return self.sigma_n * self.gain_original / self.gain_reconfigured
        raise ValueError(f"Unknown cell mode: {mode}")

    @classmethod
    def silent(cls) -> "NoiseModel":
        return cls(sigma_n=0.0)
