"""Numerical tolerances shared by all modules.

Defaults can be overridden with the environment variables
``CNNPREIMAGE_EPS_RANK``, ``CNNPREIMAGE_EPS_SOLVE``,
``CNNPREIMAGE_MEMBERSHIP_TOL`` and ``CNNPREIMAGE_SIGN_TOL``; scenario configs take precedence over the
environment (see :func:`use_tolerances`).
"""

from __future__ import annotations

import contextlib
import dataclasses
import os

ENV_PREFIX = "CNNPREIMAGE_"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    eps_rank: float = 1e-10
    eps_solve: float = 1e-8
    membership_tol: float = 1e-9
    sign_tol: float = 1e-9

    @classmethod
    def from_env(cls, environ=None) -> "Tolerances":
        environ = os.environ if environ is None else environ
        kwargs = {}
        for field in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + field.name.upper())
            if raw is not None:
                kwargs[field.name] = float(raw)
        return cls(**kwargs)


_current = Tolerances.from_env()


def get_tolerances() -> Tolerances:
    return _current


def set_tolerances(tol: Tolerances) -> None:
    global _current
    _current = tol


@contextlib.contextmanager
def use_tolerances(**overrides):
    """Temporarily replace selected tolerances, e.g. ``use_tolerances(eps_rank=1e-12)``."""
    global _current
    previous = _current
    _current = dataclasses.replace(previous, **overrides)
    try:
        yield _current
    finally:
        _current = previous
