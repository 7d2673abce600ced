"""Threshold multi-party PSI bindings."""

try:
    from ._totpsi import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _totpsi import *  # noqa: F401,F403  (in-tree: module on PYTHONPATH)

__all__ = [
    "prime_hex",
    "derive_params",
    "share",
    "reconstruct",
    "ideal_intersection",
    "simulate",
    "gen_instance",
    "TotpsiError",
]
