"""Outcome of each acceptance criterion, printed at the end of the run."""

from __future__ import annotations

# criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
