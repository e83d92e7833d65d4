"""Shallow text processing: tokenizer, sentence heuristics, extraction modes.

The pipeline deliberately stays shallow. It tokenizes, looks words up in a
stem lexicon, classifies sentences by word order (wh-questions start with a
wh-particle, yes/no-questions with a verb) and flags negation particles.
Three extraction modes build on that:

    morphana    stems of nouns/verbs/adjectives plus full forms of unknown
                words, over the whole text
    heuristics  the same extraction restricted to question sentences,
                negation-bearing sentences and declaratives immediately
                preceding a question; falls back to morphana when nothing
                matches
    combined    morphana plus the heuristic selection, so heuristically
                selected tokens count twice

All functions are pure; lexicon and particle lists are immutable after load.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Iterable, Sequence

WORD = "word"
NUMBER = "number"
PUNCTUATION = "punctuation"

WH_QUESTION = "wh_question"
YESNO_QUESTION = "yesno_question"
DECLARATIVE = "declarative"

MODE_MORPHANA = "morphana"
MODE_HEURISTICS = "heuristics"
MODE_COMBINED = "combined"
MODES = (MODE_MORPHANA, MODE_HEURISTICS, MODE_COMBINED)

NOUN = "noun"
VERB = "verb"
ADJECTIVE = "adjective"
OTHER = "other"
POS_TAGS = (NOUN, VERB, ADJECTIVE, OTHER)

CONTENT_POS = frozenset({NOUN, VERB, ADJECTIVE})
SENTENCE_TERMINATORS = frozenset({".", "!", "?"})

# Words are maximal runs of letters/digits (underscore counts as a symbol);
# every other non-space character becomes a single-character token.
_TOKEN_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)
_BLANK_LINE_RE = re.compile(r"\n[ \t\r]*\n")


@dataclass(frozen=True)
class Token:
    """One surface token with its [start, end) offsets in the source text."""

    surface: str
    normalized: str
    start: int
    end: int
    kind: str

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class LexEntry:
    key: str
    stem: str
    pos: str


class Lexicon:
    """Case-insensitive surface-form to stem/POS lookup."""

    def __init__(self, entries: Iterable[LexEntry] = ()):
        self._entries: dict[str, LexEntry] = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: LexEntry) -> None:
        if not entry.stem:
            raise ValueError(f"lexicon entry {entry.key!r} has an empty stem")
        if entry.pos not in POS_TAGS:
            raise ValueError(f"lexicon entry {entry.key!r} has unknown pos {entry.pos!r}")
        self._entries[entry.key.lower()] = entry

    def get(self, surface: str) -> LexEntry | None:
        return self._entries.get(surface.lower())

    def __contains__(self, surface: str) -> bool:
        return surface.lower() in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @classmethod
    def from_tsv(cls, path: Path | str) -> "Lexicon":
        """Load surface<TAB>stem<TAB>pos lines; '#' starts a comment."""
        lex = cls()
        text = Path(path).read_text(encoding="utf-8")
        lex.update_from_text(text, origin=str(path))
        return lex

    def update_from_text(self, text: str, origin: str = "<string>") -> None:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{origin}:{lineno}: expected 3 tab-separated fields")
            surface, stem, pos = (p.strip() for p in parts)
            self.add(LexEntry(surface, stem, pos))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sentence_type: str
    has_negation: bool

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class ExtractionResult:
    """Ordered multiset of extracted items (stems or unknown full forms)."""

    items: tuple[str, ...]
    mode: str
    fallback_used: bool = False

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for item in self.items:
            out[item] = out.get(item, 0) + 1
        return out


@dataclass(frozen=True)
class PipelineResources:
    """Immutable bundle of lexicon, stopwords and particle lists."""

    lexicon: Lexicon
    stopwords: frozenset[str]
    wh_particles: frozenset[str]
    negation_particles: frozenset[str]

    @classmethod
    def default(cls) -> "PipelineResources":
        return _default_resources()

    @classmethod
    def from_paths(
        cls,
        lexicon: Path | str,
        stopwords: Path | str,
        wh_particles: Path | str,
        negation_particles: Path | str,
    ) -> "PipelineResources":
        return cls(
            lexicon=Lexicon.from_tsv(lexicon),
            stopwords=load_wordlist(stopwords),
            wh_particles=load_wordlist(wh_particles),
            negation_particles=load_wordlist(negation_particles),
        )


def load_wordlist(path: Path | str) -> frozenset[str]:
    """One entry per line, lowercased; blank lines and '#' comments skipped."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def _wordlist_from_text(text: str) -> frozenset[str]:
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    )


_RESOURCE_CACHE: dict[str, PipelineResources] = {}


def _default_resources() -> PipelineResources:
    cached = _RESOURCE_CACHE.get("default")
    if cached is not None:
        return cached
    pkg = importlib_resources.files("mailtriage.resources")
    lexicon = Lexicon()
    lexicon.update_from_text(
        (pkg / "lexicon.tsv").read_text(encoding="utf-8"), origin="lexicon.tsv"
    )
    res = PipelineResources(
        lexicon=lexicon,
        stopwords=_wordlist_from_text((pkg / "stopwords.txt").read_text(encoding="utf-8")),
        wh_particles=_wordlist_from_text(
            (pkg / "wh_particles.txt").read_text(encoding="utf-8")
        ),
        negation_particles=_wordlist_from_text(
            (pkg / "negation_particles.txt").read_text(encoding="utf-8")
        ),
    )
    _RESOURCE_CACHE["default"] = res
    return res


def tokenize(text: str) -> list[Token]:
    """Split text into word, number and punctuation tokens.

    Words are maximal letter/digit runs; any other visible character is a
    single punctuation token. Spans are strictly increasing and the surfaces
    plus the skipped gaps reconstruct the input exactly.
    """
    tokens: list[Token] = []
    for match in _TOKEN_RE.finditer(text):
        surface = match.group(0)
        if surface[0].isalnum() and surface[0] != "_":
            kind = NUMBER if surface.isdigit() else WORD
        else:
            kind = PUNCTUATION
        tokens.append(
            Token(
                surface=surface,
                normalized=surface.lower(),
                start=match.start(),
                end=match.end(),
                kind=kind,
            )
        )
    return tokens


def _is_terminator(token: Token) -> bool:
    return token.kind == PUNCTUATION and token.surface in SENTENCE_TERMINATORS


def _terminator_flags(tokens: Sequence[Token]) -> list[bool]:
    """Terminator flags per token; a '.' tightly between digits (as in a
    version string like 4.0) does not close a sentence."""
    flags = []
    for i, token in enumerate(tokens):
        flag = _is_terminator(token)
        if flag and token.surface == ".":
            prev_tok = tokens[i - 1] if i > 0 else None
            next_tok = tokens[i + 1] if i + 1 < len(tokens) else None
            if (
                prev_tok is not None
                and next_tok is not None
                and prev_tok.kind == NUMBER
                and next_tok.kind == NUMBER
                and prev_tok.end == token.start
                and token.end == next_tok.start
            ):
                flag = False
        flags.append(flag)
    return flags


def _ends_with_question_mark(tokens: Sequence[Token]) -> bool:
    for token in reversed(tokens):
        if token.kind != PUNCTUATION:
            return False
        if token.surface == "?":
            return True
    return False


def classify_tokens(
    tokens: Sequence[Token], resources: PipelineResources
) -> tuple[str, bool]:
    """Sentence type plus negation flag for one sentence's token run.

    Wh-question: first word token is a wh-particle. Yes/no-question: first
    word token is a lexicon verb and the sentence either ends in '?' or is
    verb-initial. Everything else is declarative. Unknown first tokens never
    trigger the yes/no rule.
    """
    has_negation = any(t.normalized in resources.negation_particles for t in tokens)
    first_word = next((t for t in tokens if t.kind == WORD), None)
    if first_word is None:
        return DECLARATIVE, has_negation
    if first_word.normalized in resources.wh_particles:
        return WH_QUESTION, has_negation
    entry = resources.lexicon.get(first_word.normalized)
    if entry is not None and entry.pos == VERB:
        verb_initial = tokens[0] is first_word
        if verb_initial or _ends_with_question_mark(tokens):
            return YESNO_QUESTION, has_negation
    return DECLARATIVE, has_negation


def classify_sentence(sentence: Sentence, resources: PipelineResources) -> Sentence:
    """Reclassify a sentence; returns a new Sentence with fields filled."""
    stype, negation = classify_tokens(sentence.tokens, resources)
    return Sentence(tokens=sentence.tokens, sentence_type=stype, has_negation=negation)


def split_sentences(
    tokens: Sequence[Token],
    resources: PipelineResources,
    text: str | None = None,
) -> list[Sentence]:
    """Group tokens into classified sentences.

    Boundaries: after a run of '.', '!' or '?' tokens, and at blank lines
    (detectable only when the source text is passed in, since the gap content
    is not part of the token stream). Every token lands in exactly one
    sentence; consecutive terminators stay attached to the sentence they
    close, which keeps terminator spam like '??????' out of phantom
    sentences.
    """
    sentences: list[Sentence] = []
    current: list[Token] = []
    in_terminator_run = False
    prev_end = 0
    terminator = _terminator_flags(tokens)

    def flush() -> None:
        nonlocal current, in_terminator_run
        if current:
            stype, negation = classify_tokens(current, resources)
            sentences.append(Sentence(tuple(current), stype, negation))
        current = []
        in_terminator_run = False

    for i, token in enumerate(tokens):
        if current:
            gap_break = (
                text is not None
                and _BLANK_LINE_RE.search(text[prev_end : token.start]) is not None
            )
            if gap_break or (in_terminator_run and not terminator[i]):
                flush()
        current.append(token)
        prev_end = token.end
        in_terminator_run = terminator[i]
    flush()
    return sentences


def segment(text: str, resources: PipelineResources) -> list[Sentence]:
    """Tokenize and split in one step (blank-line boundaries included)."""
    return split_sentences(tokenize(text), resources, text=text)


def morph_analyze(
    tokens: Sequence[Token], resources: PipelineResources
) -> ExtractionResult:
    """Stems of nouns/verbs/adjectives plus lowercased unknown full forms.

    Closed-class lexicon entries (pos=other), stopwords, numbers and
    punctuation are dropped; multiplicity of everything else is preserved.
    """
    items: list[str] = []
    for token in tokens:
        if token.kind != WORD:
            continue
        entry = resources.lexicon.get(token.normalized)
        if entry is not None:
            if entry.pos not in CONTENT_POS:
                continue
            item = entry.stem
        else:
            item = token.normalized
        if item.lower() in resources.stopwords:
            continue
        items.append(item)
    return ExtractionResult(items=tuple(items), mode=MODE_MORPHANA)


def select_heuristic_sentences(sentences: Sequence[Sentence]) -> list[Sentence]:
    """Questions, negation-bearing sentences, declaratives right before a question."""
    selected: list[Sentence] = []
    question_types = (WH_QUESTION, YESNO_QUESTION)
    for i, sentence in enumerate(sentences):
        pick = sentence.sentence_type in question_types or sentence.has_negation
        if not pick and sentence.sentence_type == DECLARATIVE:
            nxt = sentences[i + 1] if i + 1 < len(sentences) else None
            pick = nxt is not None and nxt.sentence_type in question_types
        if pick:
            selected.append(sentence)
    return selected


def extract(
    text: str,
    mode: str,
    resources: PipelineResources | None = None,
) -> ExtractionResult:
    """Run one preprocessing mode over a whole text.

    heuristics with an empty sentence selection falls back to the morphana
    result and sets fallback_used; combined concatenates morphana with the
    heuristic selection so heuristic tokens appear with doubled count.
    """
    if mode not in MODES:
        raise ValueError(f"unknown extraction mode {mode!r}; expected one of {MODES}")
    if resources is None:
        resources = PipelineResources.default()

    tokens = tokenize(text)
    base = morph_analyze(tokens, resources)
    if mode == MODE_MORPHANA:
        return base

    sentences = split_sentences(tokens, resources, text=text)
    selected = select_heuristic_sentences(sentences)
    selected_tokens: list[Token] = []
    for sentence in selected:
        selected_tokens.extend(sentence.tokens)
    focused = morph_analyze(selected_tokens, resources)

    if mode == MODE_HEURISTICS:
        if not selected:
            return ExtractionResult(base.items, MODE_HEURISTICS, fallback_used=True)
        return ExtractionResult(focused.items, MODE_HEURISTICS, fallback_used=False)

    # combined: morphana plus the selection only (no fallback doubling)
    return ExtractionResult(
        items=base.items + focused.items,
        mode=MODE_COMBINED,
        fallback_used=not selected,
    )
