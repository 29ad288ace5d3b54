"""Reader for the key-value constants file shipped with the package."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

from ..errors import ConfigError


def parse_key_values(text):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Values are returned as strings; blank lines are skipped.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def _number(value):
    parts = [p.strip() for p in value.split(",")]
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"not a number: {value!r}") from None
    return nums[0] if len(nums) == 1 else np.array(nums)


@lru_cache(maxsize=None)
def _bundled():
    text = resources.files("filterlab.data").joinpath("constants.txt").read_text()
    return {k: _number(v) for k, v in parse_key_values(text).items()}


def load_constants(path=None):
    """Numeric constants from ``path``, or the bundled file by default."""
    if path is None:
        return dict(_bundled())
    with open(path) as fh:
        return {k: _number(v) for k, v in parse_key_values(fh.read()).items()}
