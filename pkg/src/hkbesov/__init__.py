"""Heat-semigroup Besov and BV calculus on finite metric measure spaces."""

__version__ = "0.1.0"
