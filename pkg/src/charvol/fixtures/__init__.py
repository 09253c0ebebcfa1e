"""Shipped manifold fixtures with provenance notes."""

from importlib import resources

from ..manifold import ManifoldSpec, parse_spec

FIXTURE_NAMES = ("fig8", "wlink", "abelian", "nonhyp")


def fixture_text(name: str) -> str:
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name}; shipped: {FIXTURE_NAMES}")
    return resources.files(__package__).joinpath(f"{name}.spec").read_text()


def load_fixture(name: str) -> ManifoldSpec:
    return parse_spec(fixture_text(name))
