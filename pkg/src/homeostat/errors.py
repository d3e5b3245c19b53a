"""Exception types raised by the analysis engines."""


class HomeostatError(Exception):
    """Base class for all library errors."""


class NonTransientNetworkError(HomeostatError):
    """The routing matrix keeps molecules circulating forever."""


class KernelConvergenceError(HomeostatError):
    """The arrival-density iteration did not converge within the cap."""


class SpectralGapError(HomeostatError):
    """A signal carries energy at a nonzero frequency inside the gap band."""


class AttenuationError(HomeostatError):
    """No per-hop damping factor below one exists for the requested gap."""


class ResponseSingularError(HomeostatError):
    """The frequency-response linear system is singular."""


class IntegrationError(HomeostatError):
    """A fixed-step integrator failed its accuracy or stability check."""
