"""Exception hierarchy shared by the numerics, services, API and CLI."""


class SmoothCertError(Exception):
    """Base class for all certification toolkit errors"""


class ConfigurationError(SmoothCertError, ValueError):
    """Invalid parameter: risk level, sigma, simplex vector, shapes, layer bounds"""


class DataError(SmoothCertError, ValueError):
    """Malformed or inconsistent input data (counts files, missing phases)"""

    def __init__(self, message: str, line: int | None = None, record: str | None = None):
        self.detail = message
        self.line = line
        self.record = record
        location = []
        if line is not None:
            location.append(f"line {line}")
        if record is not None:
            location.append(f"record {record!r}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class SolverError(SmoothCertError, RuntimeError):
    """Root bracketing or convergence failure"""


class SamplingError(SmoothCertError, RuntimeError):
    """A classifier oracle failed while producing predictions"""

    def __init__(self, message: str, sample_index: int):
        self.sample_index = sample_index
        super().__init__(f"sample {sample_index}: {message}")
