"""Enumeration and solver caps shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, replace


class CapExceededError(RuntimeError):
    """An enumeration or exact solver would exceed its configured cap."""

    def __init__(self, what: str, required: int, cap: int, hint: str = ""):
        msg = f"{what}: requires {required}, cap is {cap}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
        self.what = what
        self.required = required
        self.cap = cap


class SolverError(RuntimeError):
    """Iterative solver failed to converge; ``best`` holds the last iterate."""

    def __init__(self, msg: str, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class Caps:
    product_vertices: int = 10**6
    exact_vertices: int = 64
    typeclass: int = 200_000
    types: int = 200_000
    sequences: int = 2_000_000
    phi_tables: int = 4096
    grid_points: int = 250_000

    def with_(self, **kw) -> "Caps":
        return replace(self, **kw)


DEFAULT_CAPS = Caps()


def check_cap(what: str, required: int, cap: int, hint: str = "") -> None:
    if required > cap:
        raise CapExceededError(what, required, cap, hint)
