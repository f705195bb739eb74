"""Single source for the package version, importable without pulling in
the rest of the package (exported artifacts embed it)."""

__version__ = "0.1.0"
