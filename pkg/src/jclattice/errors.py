"""Exception types shared across the package.

The command line tool maps these onto distinct exit codes (see cli.py),
so library code should raise the most specific one that applies.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad key, wrong shape, out-of-range value."""


class TruncationError(RuntimeError):
    """Population reached the top of the truncated Fock space beyond tolerance."""


class IntegrationError(RuntimeError):
    """The integrator failed: step-size underflow, positivity loss, divergence."""
