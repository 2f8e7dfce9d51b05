"""Base class and result records for statistical randomness tests."""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from subpuf.core.constants import NIST_ALPHA
from subpuf.core.logging import get_logger

logger = get_logger(__name__)


class TestResult(BaseModel):
    """Outcome of one (sub-)test on one sequence."""

    __test__ = False

    name: str = Field(..., description="Test or sub-test name")
    statistic: Optional[float] = Field(default=None, description="Test statistic")
    p_value: Optional[float] = Field(default=None, description="P-value")
    passed: Optional[bool] = Field(default=None, description="p_value >= alpha")
    skipped: bool = Field(default=False, description="Sequence too short or parameter invalid")
    reason: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def skip(cls, name: str, reason: str) -> "TestResult":
        return cls(name=name, skipped=True, reason=reason)


class TestInfo(BaseModel):
    """Information about a registered test."""

    __test__ = False

    name: str
    description: str
    min_length: int
    sub_tests: List[str] = Field(default_factory=list)


class RandomnessTest(ABC):
    """Abstract base class for the randomness tests.

    Subclasses implement :meth:`compute` with the reference formulas.
    :meth:`run` adds the length precondition and the pass decision, so a
    sequence that is too short is reported as skipped, never as passed.

    Usage:
        class MyTest(RandomnessTest):
            name = "my_test"
            min_length = 100

            def compute(self, bits, **params):
                ...
                return [TestResult(name=self.name, statistic=s, p_value=p)]

        results = MyTest().run(bits)
    """

    __test__ = False

    name: str = ""
    description: str = ""
    min_length: int = 1
    sub_tests: List[str] = []

    @abstractmethod
    def compute(self, bits: np.ndarray, **params: Any) -> List[TestResult]:
        """Statistic and p-value for every sub-test, without the pass decision.

        Raises:
            ValueError: If a parameter is invalid for the sequence length.
        """

    def resolve_params(self, n: int, **params: Any) -> Dict[str, Any]:
        """Fill parameters left as None with the recommended value for length ``n``."""
        return {k: v for k, v in params.items() if v is not None}

    def run(self, bits: np.ndarray, alpha: float = NIST_ALPHA, **params: Any) -> List[TestResult]:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        names = self.sub_tests or [self.name]
        if bits.size < self.min_length:
            reason = f"needs at least {self.min_length} bits, got {bits.size}"
            return [TestResult.skip(n, reason) for n in names]
        try:
            resolved = self.resolve_params(bits.size, **params)
            results = self.compute(bits, **resolved)
        except ValueError as e:
            logger.debug("randomness test skipped", test=self.name, reason=str(e))
            return [TestResult.skip(n, str(e)) for n in names]
        return [
            r if r.skipped else r.model_copy(update={"passed": r.p_value >= alpha})
            for r in results
        ]

    def get_info(self) -> TestInfo:
        return TestInfo(
            name=self.name,
            description=self.description,
            min_length=self.min_length,
            sub_tests=list(self.sub_tests or [self.name]),
        )


def to_pm1(bits: np.ndarray) -> np.ndarray:
    """Map {0, 1} to {-1, +1}."""
    return 2 * np.asarray(bits, dtype=np.int64) - 1
