"""Top-level package for mixop-brezis-oswald.

This package solves sublinear Dirichlet problems driven by the mixed operator
``-Δ_p + (-Δ)^s_p`` on the interval (0, 1) and checks, numerically, the
existence/uniqueness characterization in terms of first eigenvalues, the
strong maximum principle and the level-truncation L∞ bound.

The canonical public API is exposed via the command line interface defined in
``mixop/bo/cli.py``; the modules below can also be used directly.
"""

from importlib.metadata import version as _get_version


def __getattr__(name: str):  # pragma: no cover
    if name == "__version__":
        return _get_version("mixop-brezis-oswald")
    raise AttributeError(name)


__all__ = [
    "cli",
    "config",
    "eigen",
    "errors",
    "export",
    "forms",
    "mesh",
    "minimize",
    "nonlinearity",
    "utils",
    "verify",
]
