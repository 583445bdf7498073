"""Exception types shared across the toolkit."""


class BilliardError(Exception):
    """Base class for all toolkit errors."""


class NonConvex(BilliardError):
    """Curvature radius is not strictly positive (or curvature changes sign)."""


class NotClosed(BilliardError):
    """Curvature profile violates the closure constraint (harmonic-1 terms)."""


class ResamplingFailure(BilliardError):
    """A trigonometric fit did not reach the requested residual."""


class SolveFailure(BilliardError):
    """Impact root-finding failed; usually a broken curve or |theta| ~ pi/2."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NotFound(BilliardError):
    """Periodic-orbit search exhausted its multi-start budget."""


class ContinuumFlag(BilliardError):
    """dl/dphi vanishes identically: circle-like curve, no isolated diameters."""


class NotElliptic(BilliardError):
    """Operation requires an elliptic 2-periodic orbit."""


class NotResonant(BilliardError):
    """Operation requires a resonant elliptic diameter."""


class Resonant(BilliardError):
    """Rotation angle too close to a low-order resonance for normal-form work."""


class Degenerate(BilliardError):
    """A denominator in a closed-form expression vanishes."""


class Inadmissible(BilliardError):
    """Normal perturbation destroys regularity or strict convexity."""


class NotDiffeo(BilliardError):
    """Tangent-angle transfer map h is not monotone (perturbation too large)."""


class MarginUnreachable(BilliardError):
    """Resonance-breaking could not reach the margin within the norm budget."""


class SeriesSolveFailure(BilliardError):
    """Order-by-order solution of the impact condition did not converge."""
