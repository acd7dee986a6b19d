"""Error type shared by every analysis module."""
from typing import Any, Dict, Optional


class MultiManifoldError(ValueError):
    """Raised when an analysis step cannot proceed.

    ``code`` is a short machine-readable tag such as ``"empty-set"`` or
    ``"k-exceeds-cloud"``; ``context`` carries extra detail (stratum, line number,
    residual trace) that the CLI appends to the message.
    """

    def __init__(self, message: str, code: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.context = dict(context or {})

    def with_context(self, **extra: Any) -> "MultiManifoldError":
        """Return a copy of this error with additional context entries."""
        return MultiManifoldError(self.message, self.code, {**self.context, **extra})

    def __str__(self) -> str:
        details = ", ".join(
            f"{key}={value}" for key, value in self.context.items() if key != "trace"
        )
        return f"{self.message} ({details})" if details else self.message
