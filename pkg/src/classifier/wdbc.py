"""UCI Wisconsin Diagnostic Breast Cancer (wdbc.data) ingestion."""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..models.errors import WdbcFormatError

logger = logging.getLogger(__name__)

WDBC_COLUMNS = 32
EXPECTED_ROWS = 569
EXPECTED_MALIGNANT = 212
EXPECTED_BENIGN = 357

# mean radius, mean texture, mean concave points, mean fractal dimension
FEATURE_COLUMNS = (2, 3, 9, 11)
FEATURE_NAMES = ("radius_mean", "texture_mean", "concave_points_mean", "fractal_dimension_mean")


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with binary labels (1 = malignant)."""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    provenance: str = ""

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def malignant(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def benign(self) -> int:
        return int(np.count_nonzero(self.labels == 0))


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, header=None, dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else None
        raise WdbcFormatError(f"malformed row in {path}: {e}", line=line) from e
    except pd.errors.EmptyDataError as e:
        raise WdbcFormatError(f"{path} is empty") from e


def load_wdbc(path: str | Path, strict: bool = True) -> LabeledDataset:
    """Load wdbc.data: id, diagnosis (M/B), then 30 real-valued features.

    Keeps the mean radius, mean texture, mean concave points and mean fractal
    dimension columns.

    Args:
        path: Path to the comma-separated file (no header)
        strict: Require the published 569 rows with 212 malignant and 357 benign

    Returns:
        LabeledDataset with d = 4

    Raises:
        FileNotFoundError: If the file does not exist
        WdbcFormatError: On malformed rows (with line number) or count mismatch
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"WDBC file not found: {path}")

    frame = _read_frame(path)
    if frame.shape[1] != WDBC_COLUMNS:
        raise WdbcFormatError(f"expected {WDBC_COLUMNS} fields per row, found {frame.shape[1]}", line=1)

    missing = frame.isna().any(axis=1).to_numpy()
    if missing.any():
        raise WdbcFormatError("row has empty fields", line=int(np.argmax(missing)) + 1)

    diagnosis = frame[1].str.strip().str.upper()
    bad_label = ~diagnosis.isin(["M", "B"]).to_numpy()
    if bad_label.any():
        row = int(np.argmax(bad_label))
        raise WdbcFormatError(f"diagnosis must be M or B, got {frame.iloc[row, 1]!r}", line=row + 1)

    numeric = frame.loc[:, list(FEATURE_COLUMNS)].apply(pd.to_numeric, errors="coerce")
    bad_value = numeric.isna().any(axis=1).to_numpy() | ~np.isfinite(numeric.to_numpy()).all(axis=1)
    if bad_value.any():
        raise WdbcFormatError("non-numeric feature value", line=int(np.argmax(bad_value)) + 1)

    dataset = LabeledDataset(
        features=numeric.to_numpy(dtype=float),
        labels=(diagnosis == "M").to_numpy().astype(np.int64),
        provenance=str(path),
    )
    if strict and (
        dataset.n != EXPECTED_ROWS
        or dataset.malignant != EXPECTED_MALIGNANT
        or dataset.benign != EXPECTED_BENIGN
    ):
        raise WdbcFormatError(
            f"expected {EXPECTED_ROWS} rows ({EXPECTED_MALIGNANT} M / {EXPECTED_BENIGN} B), "
            f"got {dataset.n} ({dataset.malignant} M / {dataset.benign} B)"
        )
    logger.info(f"Loaded WDBC: {dataset.n} rows, {dataset.malignant} malignant, {dataset.benign} benign")
    return dataset
