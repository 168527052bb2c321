"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: usage mistakes exit 1,
data/config problems exit 2, trainer failures exit 3.
"""

from __future__ import annotations


class HpiError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HpiError):
    """Invalid configuration (grids, plans, estimation settings)."""


class GridError(ConfigError):
    """Invalid hyperparameter grid definition."""


class MalformedGridError(GridError):
    """Grid config text does not conform to the schema."""


class DuplicateAxisError(GridError):
    """Two axes share a name."""


class EmptyAxisError(GridError):
    """An axis has no candidate values."""


class DuplicateValueError(GridError):
    """An axis lists the same candidate twice."""


class MixedTypeAxisError(GridError):
    """An axis mixes numeric and categorical candidates."""


class DefaultNotInValuesError(GridError):
    """An axis default is not one of its candidates."""


class DataError(HpiError):
    """Dataset loading, splitting, or subsampling failure."""


class TrainerError(HpiError):
    """A model evaluation failed."""


class ProtocolError(TrainerError):
    """An external trainer violated the wire protocol."""
