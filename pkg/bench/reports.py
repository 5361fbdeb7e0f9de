import json
import logging
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from adapt import runlog_frame
from shared.schemas import RunLog, RunSpec, RunSummary
from .studies import StudyResult, summarize

logger = logging.getLogger(__name__)


def report_stem(spec: RunSpec) -> str:
    return f"{spec.example}_r{spec.degree}_{spec.mode}"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def write_summary(summary: RunSummary, path: Path, extra: Optional[Dict] = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = summary.model_dump()
    if extra:
        payload = {**payload, **extra}
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
    return path


def emit_report(log: RunLog, out_dir, stem: str) -> Dict[str, Path]:
    """Per-step CSV of one run plus its JSON summary"""
    out = Path(out_dir)
    paths = {
        "runlog": write_frame(runlog_frame(log), out / f"{stem}_runlog.csv"),
        "summary": write_summary(summarize(log), out / f"{stem}_summary.json"),
    }
    logger.info(f"[bench] wrote {paths['runlog']} and {paths['summary']}")
    return paths


def emit_study(result: StudyResult, spec: RunSpec) -> Dict[str, Path]:
    """Study table, and the run log and summary of every run in it"""
    out = Path(spec.out)
    stem = report_stem(spec)
    paths = {"study": write_frame(result.table, out / f"{stem}_study.csv")}
    first = spec.levels[0]
    for index, log in enumerate(result.logs):
        run_stem = f"{stem}_level{first + index}" if spec.mode == "uniform" else stem
        for kind, path in emit_report(log, out, run_stem).items():
            paths[f"{kind}_{index}"] = path
    if result.comparison is not None:
        paths["comparison"] = write_summary(
            result.summary, out / f"{stem}_comparison.json", {"comparison": result.comparison}
        )
    return paths
