"""Combine per-modality descriptions into one input text.

Two methods: joining description units with a model-specific separator
token, or filling a natural-language paragraph template.  Either way the
modality order is audio, facial, lingual.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import (
    MissingLocaleKeyError,
    NoModalityPresentError,
    SeparatorCollisionError,
    TemplateSlotUnknownError,
)
from .locales import LocaleTable, load_locale

DEFAULT_SEPARATOR = "[SEP]"

_SLOT_ORDER = ("audio", "facial", "lingual")
_SLOT_RE = re.compile(r"\{([^{}]*)\}")


class CombinationMethod(enum.Enum):
    SEPARATOR = "separator"
    PARAGRAPH = "paragraph"


@dataclass(frozen=True)
class ModalityDescriptions:
    """Description units per modality; absent modalities are None."""

    lingual: str | None = None
    audio: tuple[str, str] | None = None  # (pitch sentence, energy sentence)
    facial: tuple[str, ...] | None = None  # AU phrases or the no-AU phrase

    def __post_init__(self):
        if self.lingual is None and self.audio is None and self.facial is None:
            raise NoModalityPresentError("no modality description present")
        for unit in self.units():
            if not unit.strip():
                raise ValueError("description units must be non-empty")

    def units(self) -> list[str]:
        """All description units in audio, facial, lingual order."""
        out: list[str] = []
        if self.audio is not None:
            out.extend(self.audio)
        if self.facial is not None:
            out.extend(self.facial)
        if self.lingual is not None:
            out.append(self.lingual)
        return out

    def modality_set(self) -> str:
        present = []
        if self.audio is not None:
            present.append("A")
        if self.facial is not None:
            present.append("F")
        if self.lingual is not None:
            present.append("L")
        return "".join(present)


@dataclass(frozen=True)
class CombinedInput:
    text: str
    method: CombinationMethod
    modalities: str  # subset of "AFL" in canonical order


@dataclass
class CompositionConfig:
    separator_token: str = DEFAULT_SEPARATOR
    locale: LocaleTable = field(default_factory=load_locale)
    paragraph_template: str | None = None  # defaults to the locale's template

    def template(self) -> str:
        if self.paragraph_template is not None:
            return self.paragraph_template
        return self.locale.get("template.paragraph")


def combine_separator(d: ModalityDescriptions, cfg: CompositionConfig) -> CombinedInput:
    """Join all description units with exactly one separator token between."""
    sep = cfg.separator_token
    if not sep:
        raise ValueError("separator token must be non-empty")
    units = d.units()
    for unit in units:
        if sep in unit:
            raise SeparatorCollisionError(
                f"description unit contains the separator token {sep!r}: {unit!r}"
            )
    return CombinedInput(
        text=sep.join(units),
        method=CombinationMethod.SEPARATOR,
        modalities=d.modality_set(),
    )


def _join_phrases(phrases: list[str]) -> str:
    if len(phrases) == 1:
        return phrases[0]
    return ", ".join(phrases[:-1]) + " and " + phrases[-1]


def _inflect_facial(phrases: tuple[str, ...], locale: LocaleTable) -> list[str]:
    """Swap each facial phrase for its third-person form from the locale."""
    reverse = {}
    for key in locale.keys():
        if key.startswith("au."):
            reverse[locale.get(key)] = f"inflect.{key}"
    out = []
    for phrase in phrases:
        if phrase not in reverse:
            raise MissingLocaleKeyError(f"inflect.<key for {phrase!r}>")
        out.append(locale.get(reverse[phrase]))
    return out


def _template_segments(template: str) -> list[tuple[str, str]]:
    """Split the template into (slot, sentence) pairs, one slot per sentence.

    Each segment runs to the first '. ' (or end of string) after its slot,
    so dropping an absent modality removes exactly one sentence.
    """
    slots = list(_SLOT_RE.finditer(template))
    names = [m.group(1) for m in slots]
    for name in names:
        if name not in _SLOT_ORDER:
            raise TemplateSlotUnknownError(name)
    if len(set(names)) != len(names):
        raise ValueError("paragraph template repeats a slot")
    if names != [s for s in _SLOT_ORDER if s in names]:
        raise ValueError("paragraph template slots must be ordered audio, facial, lingual")

    segments: list[tuple[str, str]] = []
    start = 0
    for m in slots:
        cut = template.find(". ", m.end())
        end = len(template) if cut == -1 else cut + 1
        segment = template[start:end]
        if len(_SLOT_RE.findall(segment)) != 1:
            raise ValueError("paragraph template must put each slot in its own sentence")
        segments.append((m.group(1), segment))
        start = end
        while start < len(template) and template[start] == " ":
            start += 1
    return segments


def combine_paragraph(d: ModalityDescriptions, cfg: CompositionConfig) -> CombinedInput:
    """Fill the paragraph template, dropping sentences of absent modalities."""
    values: dict[str, str] = {}
    if d.audio is not None:
        values["audio"] = _join_phrases(list(d.audio))
    if d.facial is not None:
        values["facial"] = _join_phrases(_inflect_facial(d.facial, cfg.locale))
    if d.lingual is not None:
        values["lingual"] = d.lingual

    parts = [
        segment.replace("{%s}" % slot, values[slot])
        for slot, segment in _template_segments(cfg.template())
        if slot in values
    ]
    if not parts:
        raise NoModalityPresentError("template has no sentence for any present modality")
    return CombinedInput(
        text=" ".join(parts),
        method=CombinationMethod.PARAGRAPH,
        modalities=d.modality_set(),
    )


def combine(d: ModalityDescriptions, cfg: CompositionConfig,
            method: CombinationMethod) -> CombinedInput:
    if method is CombinationMethod.SEPARATOR:
        return combine_separator(d, cfg)
    return combine_paragraph(d, cfg)
