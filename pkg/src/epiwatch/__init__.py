"""epiwatch: desk-scale epidemic surveillance and bed-capacity platform."""

__version__ = "0.1.0"
