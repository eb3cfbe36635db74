"""Multi-state TD learning toolkit.

Thin package wrapper around the compiled _mstd module: target algebra,
exact finite-MDP operators, the tabular convergence laboratory and the
experiment harness.
"""

try:
    from ._mstd import *  # noqa: F401,F403  (installed layout)
except ImportError:  # build-tree layout: module directory on sys.path
    from _mstd import *  # noqa: F401,F403
