import enum
from typing import Literal

import numpy as np
import numpy.typing as npt

__all__ = (
    "ComplexArray",
    "FloatArray",
    "MatrixKind",
    "Method",
    "OutputFormat",
    "Parity",
    "Verdict",
)


type FloatArray = npt.NDArray[np.float64]
type ComplexArray = npt.NDArray[np.complex128]
type Parity = Literal["even", "odd"]


class Method(enum.StrEnum):
    EIGEN_N1 = "eigen-N1"
    NEWTON_NGT1 = "newton-Ngt1"
    CLOSED_FORM = "closed-form"
    PROJECTED = "projected"


class Verdict(enum.StrEnum):
    CONFIRMED = "confirmed"
    UNMATCHED = "unmatched"
    NON_NORMALIZABLE = "non-normalizable"
    UNVERIFIED = "unverified"


class MatrixKind(enum.StrEnum):
    F = "F"
    P = "P"
    Q = "Q"


class OutputFormat(enum.StrEnum):
    JSON = "json"
    CSV = "csv"
