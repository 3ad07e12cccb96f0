"""Shared exception types.

Exit-code mapping used by the command line driver:
invariant failure -> 1, ConfigError -> 2, ConvergenceError -> 3.
"""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to reach its stated tolerance.

    Carries ``check``, a short identifier of the failing step, so batch
    drivers can report which stage went wrong.
    """

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}")
        self.check = check


class ConfigError(ValueError):
    """Invalid run configuration.

    ``entries`` lists every offending item, not just the first one found.
    """

    def __init__(self, entries):
        self.entries = list(entries)
        super().__init__("; ".join(self.entries))
