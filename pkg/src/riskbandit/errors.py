"""Exception types raised across the package."""


class RankDeficient(ValueError):
    """The action set does not span the ambient space."""

    def __init__(self, rank: int, dim: int) -> None:
        super().__init__(f"action set has numerical rank {rank} < dimension {dim}")
        self.rank = rank
        self.dim = dim


class Singular(ArithmeticError):
    """A matrix that must be positive definite failed to factorize."""


class CapExceeded(ValueError):
    """Enumeration would produce more actions than the configured cap."""


class InvalidSpec(ValueError):
    """A routing spec or instance violates its constraints."""

    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = list(violations)
