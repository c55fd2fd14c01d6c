# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Debug file logging and the pipeline stage audit trail."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Optional

APP_LOG_FILENAME = "app.log"
STAGE_LOG_FILENAME = "stages.log"
LOG_DIR_ENV = "IBR_ARD_LOG_DIR"
DATA_DIR_ENV = "IBR_ARD_DATA_DIR"


def get_log_dir(default_root: Optional[Path] = None) -> Path:
    """Return the directory used for debug log files.

    ``IBR_ARD_LOG_DIR`` wins; otherwise ``<IBR_ARD_DATA_DIR>/logs``, falling
    back to ``<default_root>/logs`` (the run output directory) or ``data/logs``.
    """
    configured = os.environ.get(LOG_DIR_ENV)
    if configured:
        return Path(configured)
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir:
        return Path(data_dir) / "logs"
    return Path(default_root if default_root is not None else "data") / "logs"


def get_app_log_path(default_root: Optional[Path] = None) -> Path:
    return get_log_dir(default_root) / APP_LOG_FILENAME


def get_stage_log_path(default_root: Optional[Path] = None) -> Path:
    return get_log_dir(default_root) / STAGE_LOG_FILENAME


def setup_debug_file_logging(default_root: Optional[Path] = None) -> Path:
    """Attach an application file log handler once per process."""
    log_path = get_app_log_path(default_root)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler_key = str(log_path.resolve())

    root_logger = logging.getLogger()
    for handler in root_logger.handlers:
        if getattr(handler, "_ibr_ard_debug_log_path", None) == handler_key:
            return log_path

    handler = logging.FileHandler(log_path, encoding="utf-8")
    handler.setFormatter(
        logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    )
    handler._ibr_ard_debug_log_path = handler_key  # type: ignore[attr-defined]
    root_logger.addHandler(handler)
    return log_path


def log_stage_event(
    stage: str, status: str, default_root: Optional[Path] = None, **fields: Any
) -> None:
    """Append one ``stage=... status=... key=value`` line to the stage log."""
    log_path = get_stage_log_path(default_root)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    extras = " ".join(f"{key}={fields[key]}" for key in sorted(fields))
    message = f"stage={stage} status={status}" + (f" {extras}" if extras else "")
    with log_path.open("a", encoding="utf-8") as handle:
        handle.write(message.rstrip("\n") + "\n")
