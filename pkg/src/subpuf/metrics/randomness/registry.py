"""Randomness test registry.

Keeps the test instances by name and runs a selection of them on a
sequence.

Usage:
    registry = default_registry()
    results = registry.run_all(bits, alpha=0.01)
"""

from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from subpuf.core.constants import NIST_ALPHA
from subpuf.core.logging import get_logger
from subpuf.metrics.randomness.base import RandomnessTest, TestInfo, TestResult

logger = get_logger(__name__)


class TestRegistry:
    """Registry of randomness tests."""

    __test__ = False

    def __init__(self):
        self._tests: Dict[str, RandomnessTest] = {}

    def register(self, test: RandomnessTest) -> None:
        """Register a test instance.

        Raises:
            TypeError: If ``test`` is not a RandomnessTest.
            ValueError: If the test has no name.
        """
        if not isinstance(test, RandomnessTest):
            raise TypeError(f"Expected RandomnessTest instance, got {type(test)}")
        if not test.name:
            raise ValueError(f"Test must have a 'name' attribute: {type(test).__name__}")
        if test.name in self._tests:
            logger.warning("Test already registered, overwriting", test=test.name)
        self._tests[test.name] = test

    def get(self, name: str) -> Optional[RandomnessTest]:
        return self._tests.get(name)

    def names(self) -> List[str]:
        return list(self._tests)

    def list_available(self) -> List[TestInfo]:
        return [t.get_info() for t in self._tests.values()]

    def run(
        self, name: str, bits: np.ndarray, alpha: float = NIST_ALPHA, **params: Any
    ) -> List[TestResult]:
        test = self.get(name)
        if test is None:
            raise ValueError(f"Test '{name}' not found in registry")
        return test.run(bits, alpha=alpha, **params)

    def run_all(
        self,
        bits: np.ndarray,
        alpha: float = NIST_ALPHA,
        enabled: Optional[Iterable[str]] = None,
        params: Optional[Dict[str, Dict[str, Any]]] = None,
    ) -> List[TestResult]:
        """Run every (or every ``enabled``) test, in registration order."""
        selected = self.names() if enabled is None else list(enabled)
        unknown = [n for n in selected if n not in self._tests]
        if unknown:
            raise ValueError(f"Unknown randomness tests: {unknown}")
        params = params or {}
        results: List[TestResult] = []
        for name in selected:
            results.extend(self.run(name, bits, alpha=alpha, **params.get(name, {})))
        return results
