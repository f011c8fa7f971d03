"""Published full-scale results, for side-by-side display only.

Desk-scale runs are never compared against these numbers; they are
attached to reports as non-binding context.
"""

from __future__ import annotations

import json
from importlib import resources


def get_reference_results() -> dict:
    with resources.files(__package__).joinpath("reference_results.json").open() as fh:
        return json.load(fh)
