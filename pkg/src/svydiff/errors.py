"""Exception types shared across the package."""


class SvydiffError(Exception):
    """Base class for errors raised by this package."""


class IngestError(SvydiffError):
    """An input file failed structural or semantic validation."""


class MismatchError(SvydiffError):
    """Cross-file identifiers do not line up (e.g. a surveyed area has no baseline row)."""


class SynthError(SvydiffError):
    """Synthetic-data configuration is infeasible."""


class RenderError(SvydiffError):
    """A map could not be rendered from the given inputs."""


class ConfigError(SvydiffError):
    """Bad command-line flags or config-file settings."""
