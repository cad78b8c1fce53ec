"""Exceptions raised by geomappy.

Everything a caller should be able to handle derives from `GeoMapError`;
the cli maps these to the input-error exit code.

Copyright (c) 2026 geomappy contributors
"""

from typing import Optional


class GeoMapError(Exception):
    pass


class ParseError(GeoMapError, ValueError):
    """Raised when an input file cannot be parsed.

    Args:
        message (str): What went wrong.
        line (int, optional): 1-based line number of the offending line.
        offset (int, optional): Byte offset into the document (JSON inputs).
    """

    def __init__(self, message: str, line: Optional[int] = None, offset: Optional[int] = None):
        location = ""
        if line is not None:
            location = f" (line {line})"
        elif offset is not None:
            location = f" (byte offset {offset})"
        super().__init__(f"{message}{location}")
        self.line = line
        self.offset = offset


class EmptyMapError(GeoMapError, ValueError):
    def __init__(self, message: str = "empty map"):
        super().__init__(message)


class UnknownCountryError(GeoMapError, KeyError):
    def __init__(self, iso3: str):
        super().__init__(f"unknown country code: {iso3}")
        self.iso3 = iso3

    def __str__(self) -> str:
        return self.args[0]


class MissingCentroidError(GeoMapError, ValueError):
    def __init__(self, iso3: str):
        super().__init__(f"missing centroid for country: {iso3}")
        self.iso3 = iso3


class DesignError(GeoMapError, ValueError):
    pass


class RankingError(GeoMapError, ValueError):
    pass


class ConfigError(GeoMapError, ValueError):
    pass


class KnowledgeFetchError(GeoMapError, IOError):
    pass
