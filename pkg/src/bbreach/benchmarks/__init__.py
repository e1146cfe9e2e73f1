"""Shipped benchmark specs and policies, addressable by short name.

``b2`` and ``toy1d`` are complete. The other specs carry the standard
regions and granularities but ``"dynamics": null``; fill in the equations
before analysing them.
"""

from __future__ import annotations

from pathlib import Path

DATA = Path(__file__).resolve().parent


def names() -> list[str]:
    return sorted(p.stem for p in DATA.glob("*.spec"))


def resolve(ref: str | Path, suffix: str = ".spec") -> Path:
    """Map an existing path through unchanged, else a shipped file name.

    ``resolve("b2")`` -> ``b2.spec``; ``resolve("b2", ".policy")`` -> the
    shipped policy.
    """
    p = Path(ref)
    if p.exists() or p.parent != Path("."):
        return p
    for cand in (DATA / p.name, DATA / f"{p.name}{suffix}"):
        if cand.is_file():
            return cand
    return p


def spec_path(name: str) -> Path:
    return DATA / f"{name}.spec"


def policy_path(name: str) -> Path:
    return DATA / f"{name}.policy"
