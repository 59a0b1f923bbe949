"""trfp: fingerprinting streamed language models from packet timing.

Pipeline: ingest raw captures, extract 36 timing/size features over
sliding windows, train a bidirectional-recurrent attention classifier with
focal loss, and evaluate; a generative trace simulator provides labeled
desk-scale datasets end to end.
"""

import logging
import os

__version__ = "0.1.0"

from ._numba import NUMBA_ENABLED  # noqa: F401


def _configure_logging() -> None:
    level_name = os.environ.get("TRFP_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


_configure_logging()
