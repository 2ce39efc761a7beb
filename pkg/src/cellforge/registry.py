"""Name-keyed component registries used by the config-driven pipeline."""

from __future__ import annotations

from .errors import RegistryError


class Registry:
    def __init__(self, kind: str):
        self.kind = kind
        self._factories: dict[str, object] = {}

    def register(self, name: str, factory):
        if name in self._factories:
            raise RegistryError(f"duplicate {self.kind} name {name!r}")
        self._factories[name] = factory

    def names(self) -> list[str]:
        return sorted(self._factories)

    def get_factory(self, name: str):
        """The registered factory, or None when the name is unknown."""
        return self._factories.get(name)

    def create(self, name: str, **kwargs):
        if name not in self._factories:
            raise RegistryError(
                f"unknown {self.kind} {name!r}; registered: {', '.join(self.names())}"
            )
        try:
            return self._factories[name](**kwargs)
        except TypeError as exc:
            raise RegistryError(f"{self.kind} {name!r}: bad parameters: {exc}") from exc


SPLITTERS = Registry("splitter")
FEATURES = Registry("feature extractor")
LABELS = Registry("label annotator")
TRANSFORMS = Registry("data transformation")
MODELS = Registry("model")

_KINDS = {
    "splitter": SPLITTERS,
    "feature": FEATURES,
    "label": LABELS,
    "transform": TRANSFORMS,
    "model": MODELS,
}


def register(kind: str, name: str, factory):
    """Register a component under one of the five registry kinds."""
    if kind not in _KINDS:
        raise RegistryError(f"unknown registry kind {kind!r}; kinds: {sorted(_KINDS)}")
    _KINDS[kind].register(name, factory)
