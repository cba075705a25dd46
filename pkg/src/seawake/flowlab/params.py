from dataclasses import dataclass

from ..errors import ContractError


@dataclass(frozen=True)
class FlowParams:
    """Dense-flow settings; defaults are the conventional Farneback choices."""

    pyramid_levels: int = 3
    pyramid_scale: float = 0.5
    window: int = 15
    poly_n: int = 5
    poly_sigma: float = 1.1
    iterations: int = 3

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ContractError("pyramid_levels must be >= 1")
        if not 0 < self.pyramid_scale < 1:
            raise ContractError("pyramid_scale must lie in (0, 1)")
        if self.window < 3 or self.window % 2 == 0:
            raise ContractError("window must be odd and >= 3")
        if self.poly_n < 3 or self.poly_n % 2 == 0:
            raise ContractError("poly_n must be odd and >= 3")
        if not self.poly_sigma > 0:
            raise ContractError("poly_sigma must be positive")
        if self.iterations < 1:
            raise ContractError("iterations must be >= 1")


@dataclass(frozen=True)
class TrackParams:
    """Sparse tracking settings: 21x21 window over a three-level pyramid by default."""

    window: int = 21
    pyramid_levels: int = 3
    max_iterations: int = 30
    epsilon: float = 0.01
    min_eigen: float = 1e-6

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ContractError("window must be odd and >= 3")
        if self.pyramid_levels < 1:
            raise ContractError("pyramid_levels must be >= 1")
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be >= 1")
