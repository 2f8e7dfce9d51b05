"""Array geometry."""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from subpuf.core.constants import DEFAULT_CELLS_PER_REGULATOR, DEFAULT_COLS, DEFAULT_ROWS


class ArrayGeometry(BaseModel):
    """Rows x cols cell array; each regulator drives ``cells_per_regulator`` cells of a column."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rows: int = Field(default=DEFAULT_ROWS, ge=1)
    cols: int = Field(default=DEFAULT_COLS, ge=1)
    cells_per_regulator: int = Field(default=DEFAULT_CELLS_PER_REGULATOR, ge=1)

    @model_validator(mode="after")
    def _regulator_divides_rows(self) -> "ArrayGeometry":
        if self.rows % self.cells_per_regulator != 0:
            raise ValueError(
                f"cells_per_regulator ({self.cells_per_regulator}) must divide rows ({self.rows})"
            )
        return self

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def regulators_per_column(self) -> int:
        return self.rows // self.cells_per_regulator

    @property
    def n_regulators(self) -> int:
        return self.regulators_per_column * self.cols

    def regulator_index(self) -> np.ndarray:
        """Row-major (rows, cols) array mapping every cell to its regulator."""
        r = np.arange(self.rows)[:, None] // self.cells_per_regulator
        c = np.arange(self.cols)[None, :]
        return r * self.cols + c
