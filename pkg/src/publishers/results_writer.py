"""Result file writer: JSON and CSV artifacts written atomically (write, then rename)."""

import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from ..models.grid import EvalGrid
from ..models.mixture import GaussianMixture

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _format_float(value: float) -> str:
    if np.isnan(value):
        return "NaN"
    if np.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    text = format(value, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps_json(payload, indent: int = 2) -> str:
    """JSON text with every float at 17 significant digits (NaN and Infinity allowed)."""

    def encode(value, level: int) -> str:
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(value, dict):
            if not value:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {encode(v, level + 1)}" for k, v in value.items()]
            return "{\n" + ",\n".join(items) + f"\n{pad}}}"
        if isinstance(value, list):
            if not value:
                return "[]"
            items = [f"{inner}{encode(v, level + 1)}" for v in value]
            return "[\n" + ",\n".join(items) + f"\n{pad}]"
        if isinstance(value, float):
            return _format_float(value)
        return json.dumps(value)

    return encode(_to_jsonable(payload), 0)


class ResultsWriter:
    """Writer for result artifacts under one output directory."""

    def __init__(self, output_dir: str | Path):
        """Initialize results writer.

        Args:
            output_dir: Directory the artifacts go to (created on first write)
        """
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        return self.output_dir / name

    def write_text(self, name: str, text: str) -> Path:
        """Write text to output_dir/name atomically.

        Raises:
            OSError: If the directory cannot be created or the rename fails
        """
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.debug(f"Wrote {path}")
        return path

    def publish_json(self, name: str, payload) -> Path | None:
        """Publish a JSON document.

        Returns:
            Path written, or None if writing failed
        """
        try:
            return self.write_text(name, dumps_json(payload) + "\n")
        except Exception as e:
            logger.error(f"Failed to publish {name}: {e}", exc_info=True)
            return None

    def publish_frame(self, name: str, frame: pd.DataFrame) -> Path | None:
        """Publish a table as CSV with 17 significant digits per float."""
        try:
            return self.write_text(name, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
        except Exception as e:
            logger.error(f"Failed to publish {name}: {e}", exc_info=True)
            return None

    def publish_mixture(self, name: str, mixture: GaussianMixture) -> Path | None:
        try:
            return self.write_text(name, dumps_json(mixture.to_document().model_dump()) + "\n")
        except Exception as e:
            logger.error(f"Failed to publish mixture {name}: {e}", exc_info=True)
            return None

    def publish_grid(self, name: str, density, grid: EvalGrid) -> Path | None:
        """Publish density values at grid midpoints, columns x1[,x2],density."""
        points = grid.points
        frame = pd.DataFrame({f"x{j + 1}": points[:, j] for j in range(grid.d)})
        frame["density"] = np.asarray(density.evaluate(points), dtype=float)
        return self.publish_frame(name, frame)

    def publish_trace(self, name: str, trace) -> Path | None:
        """Publish a fit trace without wall-clock columns so reruns are byte-identical."""
        return self.publish_frame(name, trace.to_frame(timing=False))

    def publish_ise_report(self, stem: str, report, extra: dict | None = None) -> dict[str, Path | None]:
        """Per-replication CSV plus aggregate JSON."""
        summary = report.summary()
        aggregate = {**(extra or {}), "cells": summary.to_dict(orient="records")}
        return {
            "reps": self.publish_frame(f"{stem}_reps.csv", report.to_frame()),
            "summary": self.publish_json(f"{stem}_summary.json", aggregate),
        }

    def publish_classifier_report(self, stem: str, report) -> dict[str, Path | None]:
        return {
            "rates": self.publish_frame(f"{stem}_rates.csv", report.to_frame()),
            "summary": self.publish_json(f"{stem}_summary.json", report.to_dict()),
        }
