"""Optimal-policy-value estimation for disjoint linear contextual bandits."""

try:
    from ._optreward import *  # noqa: F401,F403  (installed package layout)
    from ._optreward import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _optreward import *  # noqa: F401,F403
    from _optreward import __version__  # noqa: F401
