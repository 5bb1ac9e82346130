"""Domain data model and file ingestion.

Tables are immutable once constructed.  Words are matched by exact string
equality after Unicode NFC normalisation and whitespace trimming; no script
conversion (simplified/traditional) is attempted.
"""

from __future__ import annotations

import csv
import enum
import gzip
import io
import json
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NormDataError

logger = logging.getLogger(__name__)

SENSORIMOTOR_MAX = 5.0
EMBODIMENT_MAX = 6.0
MAX_REJECT_FRACTION = 0.10


class Dimension(enum.IntEnum):
    """The 11 sensorimotor dimensions in canonical order."""

    VISUAL = 0
    AUDITORY = 1
    GUSTATORY = 2
    OLFACTORY = 3
    HAPTIC = 4
    INTEROCEPTIVE = 5
    LEG_FOOT = 6
    HAND_ARM = 7
    MOUTH_THROAT = 8
    HEAD = 9
    TORSO = 10

    @property
    def key(self) -> str:
        """Lower-case column key, e.g. ``leg_foot``."""
        return self.name.lower()

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def is_perceptual(self) -> bool:
        return self.value < 6

    @property
    def is_action(self) -> bool:
        return self.value >= 6

    @classmethod
    def parse(cls, token: str) -> "Dimension":
        found = _lookup_dimension(token)
        if found is None or found is EMBODIMENT:
            raise NormDataError(f"unknown sensorimotor dimension {token!r}")
        return found


_LABELS = {
    Dimension.VISUAL: "Visual",
    Dimension.AUDITORY: "Auditory",
    Dimension.GUSTATORY: "Gustatory",
    Dimension.OLFACTORY: "Olfactory",
    Dimension.HAPTIC: "Haptic",
    Dimension.INTEROCEPTIVE: "Interoceptive",
    Dimension.LEG_FOOT: "Leg/Foot",
    Dimension.HAND_ARM: "Hand/Arm",
    Dimension.MOUTH_THROAT: "Mouth/Throat",
    Dimension.HEAD: "Head",
    Dimension.TORSO: "Torso",
}

DIMENSIONS: tuple[Dimension, ...] = tuple(Dimension)
N_DIMS = len(DIMENSIONS)
PERCEPTUAL = tuple(d for d in DIMENSIONS if d.is_perceptual)
ACTION = tuple(d for d in DIMENSIONS if d.is_action)
# The five classical senses, without interoception.
CLASSICAL_SENSES = (
    Dimension.VISUAL, Dimension.AUDITORY, Dimension.GUSTATORY,
    Dimension.OLFACTORY, Dimension.HAPTIC,
)


class _EmbodimentMarker:
    """Singleton marking the unidimensional embodiment rating."""

    key = "embodiment"
    label = "Embodiment"
    name = "EMBODIMENT"

    def __repr__(self):
        return "EMBODIMENT"

    def __reduce__(self):
        return "EMBODIMENT"


EMBODIMENT = _EmbodimentMarker()


def _squash(token: str) -> str:
    return "".join(ch for ch in token.lower() if ch.isalnum())


_ALIASES = {}
for _d in DIMENSIONS:
    _ALIASES[_squash(_d.name)] = _d
    _ALIASES[_squash(_d.label)] = _d
_ALIASES.update({"footleg": Dimension.LEG_FOOT, "armhand": Dimension.HAND_ARM,
                 "throatmouth": Dimension.MOUTH_THROAT, "embodiment": EMBODIMENT})


def _lookup_dimension(token: str):
    return _ALIASES.get(_squash(token))


def parse_dimension(token: str):
    """Parse a dimension name case-insensitively; returns a Dimension or EMBODIMENT."""
    found = _lookup_dimension(token)
    if found is None:
        raise NormDataError(f"unknown dimension name {token!r}")
    return found


def scale_max(dimension) -> float:
    return EMBODIMENT_MAX if dimension is EMBODIMENT else SENSORIMOTOR_MAX


def normalize_word(word: str) -> str:
    return unicodedata.normalize("NFC", word).strip()


POS_TAGS = ("noun", "verb", "adjective", "adverb", "other")
_POS_ALIASES = {
    "n": "noun", "noun": "noun", "nouns": "noun",
    "v": "verb", "verb": "verb", "verbs": "verb",
    "a": "adjective", "adj": "adjective", "adjective": "adjective", "adjectives": "adjective",
    "d": "adverb", "adv": "adverb", "adverb": "adverb", "adverbs": "adverb",
}


def normalize_pos(tag: str | None) -> str | None:
    if tag is None:
        return None
    t = tag.strip().lower()
    if not t:
        return None
    return _POS_ALIASES.get(t, "other")


# ---------------------------------------------------------------------------
# norm lexicon
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormEntry:
    word: str
    ratings: tuple[float, ...]
    embodiment: float | None = None
    pos: str | None = None
    sd: tuple[float, ...] | None = None
    n_raters: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.word:
            raise NormDataError("empty word")
        if len(self.ratings) != N_DIMS:
            raise NormDataError(f"{self.word}: expected {N_DIMS} ratings, got {len(self.ratings)}")
        for d, v in zip(DIMENSIONS, self.ratings):
            if not math.isfinite(v):
                raise NormDataError(f"missing or non-finite {d.key} rating")
            if not 0.0 <= v <= SENSORIMOTOR_MAX:
                raise NormDataError(f"rating out of [0,5]: {d.key} = {v}")
        if self.embodiment is not None and not 0.0 <= self.embodiment <= EMBODIMENT_MAX:
            raise NormDataError(f"embodiment out of [0,6]: {self.embodiment}")
        if self.pos is not None and self.pos not in POS_TAGS:
            raise NormDataError(f"unknown POS tag {self.pos!r}")
        if self.sd is not None:
            if len(self.sd) != N_DIMS or any(not (s >= 0) for s in self.sd):
                raise NormDataError("per-dimension sd must be 11 non-negative values")
        if self.n_raters is not None:
            if len(self.n_raters) != N_DIMS or any(k <= 0 for k in self.n_raters):
                raise NormDataError("per-dimension n_raters must be 11 positive integers")

    def rating(self, dimension) -> float | None:
        if dimension is EMBODIMENT:
            return self.embodiment
        return self.ratings[Dimension(dimension)]


@dataclass(frozen=True)
class RejectedRow:
    line: int
    word: str
    reason: str


@dataclass(frozen=True)
class NormLexicon:
    """Ordered, duplicate-free collection of norm entries."""

    entries: tuple[NormEntry, ...]
    source: str = ""
    n_rows: int = 0
    rejected: tuple[RejectedRow, ...] = ()

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.word in seen:
                raise NormDataError(f"duplicate word {e.word!r}")
            seen.add(e.word)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, word: str) -> NormEntry:
        return self.entries[self.index[word]]

    @cached_property
    def index(self) -> dict[str, int]:
        return {e.word: i for i, e in enumerate(self.entries)}

    @cached_property
    def words(self) -> tuple[str, ...]:
        return tuple(e.word for e in self.entries)

    @cached_property
    def ratings(self) -> np.ndarray:
        """n x 11 array of mean ratings (read-only)."""
        a = np.array([e.ratings for e in self.entries], dtype=float).reshape(len(self), N_DIMS)
        a.setflags(write=False)
        return a

    @cached_property
    def embodiment(self) -> np.ndarray:
        """Embodiment ratings with NaN where absent."""
        a = np.array([np.nan if e.embodiment is None else e.embodiment for e in self.entries],
                     dtype=float)
        a.setflags(write=False)
        return a

    @property
    def has_embodiment(self) -> bool:
        return len(self) > 0 and all(e.embodiment is not None for e in self.entries)

    @property
    def has_pos(self) -> bool:
        return any(e.pos is not None for e in self.entries)

    @property
    def has_dispersion(self) -> bool:
        return len(self) > 0 and all(e.sd is not None and e.n_raters is not None for e in self.entries)

    def column(self, dimension) -> np.ndarray:
        if dimension is EMBODIMENT:
            return self.embodiment
        return self.ratings[:, Dimension(dimension)]

    def subset(self, words: Iterable[str]) -> "NormLexicon":
        keep = set(words)
        return NormLexicon(tuple(e for e in self.entries if e.word in keep),
                           source=self.source, n_rows=self.n_rows, rejected=self.rejected)


DEFAULT_NORMS_SCHEMA: dict[str, str] = {
    "word": "word",
    **{d.key: d.key for d in DIMENSIONS},
    "embodiment": "embodiment",
    "pos": "pos",
    **{f"sd_{d.key}": f"sd_{d.key}" for d in DIMENSIONS},
    **{f"n_{d.key}": f"n_{d.key}" for d in DIMENSIONS},
}
_REQUIRED_NORMS_FIELDS = ("word",) + tuple(d.key for d in DIMENSIONS)


def load_schema(path) -> dict[str, str]:
    """Read a JSON column mapping ``{canonical_field: file_column}``."""
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise NormDataError(f"{path}: schema must be a JSON object of strings")
    unknown = set(mapping) - set(DEFAULT_NORMS_SCHEMA)
    if unknown:
        raise NormDataError(f"{path}: unknown schema fields {sorted(unknown)}")
    return mapping


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8", newline="")


def _float_or_none(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if raw == "" or raw.lower() in {"na", "nan", "null"}:
        return None
    return float(raw)


def load_norms(path, schema: Mapping[str, str] | None = None) -> NormLexicon:
    """Load a norms CSV into a validated :class:`NormLexicon`.

    Rows that violate an entry invariant are rejected and recorded on the
    returned lexicon; more than 10% rejected rows is fatal.
    """
    path = Path(path)
    cols = dict(DEFAULT_NORMS_SCHEMA)
    if schema:
        cols.update(schema)
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        header = [h.strip().lstrip("﻿") for h in header]
        reader.fieldnames = header
        for f in _REQUIRED_NORMS_FIELDS:
            if cols[f] not in header:
                raise NormDataError(f"{path}: missing column {cols[f]!r} (field {f})")
        has = {f: cols[f] in header for f in cols}
        has_sd = all(has[f"sd_{d.key}"] for d in DIMENSIONS)
        has_n = all(has[f"n_{d.key}"] for d in DIMENSIONS)

        entries: list[NormEntry] = []
        rejected: list[RejectedRow] = []
        seen: set[str] = set()
        n_rows = 0
        for n_rows, row in enumerate(reader, start=1):
            line = n_rows + 1
            word = normalize_word(row.get(cols["word"]) or "")
            try:
                if not word:
                    raise NormDataError("empty word")
                if word in seen:
                    raise NormDataError("duplicate word")
                ratings = []
                for d in DIMENSIONS:
                    v = _float_or_none(row.get(cols[d.key]))
                    if v is None:
                        raise NormDataError(f"missing {d.key} rating")
                    ratings.append(v)
                emb = _float_or_none(row.get(cols["embodiment"])) if has["embodiment"] else None
                pos = normalize_pos(row.get(cols["pos"])) if has["pos"] else None
                sd = n = None
                if has_sd:
                    sd_vals = [_float_or_none(row.get(cols[f"sd_{d.key}"])) for d in DIMENSIONS]
                    sd = None if any(v is None for v in sd_vals) else tuple(sd_vals)
                if has_n:
                    n_vals = [_float_or_none(row.get(cols[f"n_{d.key}"])) for d in DIMENSIONS]
                    if not any(v is None for v in n_vals):
                        if any(v != int(v) for v in n_vals):
                            raise NormDataError("n_raters must be integers")
                        n = tuple(int(v) for v in n_vals)
                entry = NormEntry(word, tuple(ratings), emb, pos, sd, n)
            except (NormDataError, ValueError) as exc:
                rejected.append(RejectedRow(line, word, str(exc)))
                continue
            seen.add(word)
            entries.append(entry)

    if n_rows and len(rejected) > MAX_REJECT_FRACTION * n_rows:
        reasons = "; ".join(f"line {r.line}: {r.reason}" for r in rejected[:5])
        raise NormDataError(
            f"{path}: {len(rejected)} of {n_rows} rows rejected (>10%); first: {reasons}")
    for r in rejected:
        logger.warning("%s line %d (%r) rejected: %s", path, r.line, r.word, r.reason)
    return NormLexicon(tuple(entries), source=str(path), n_rows=n_rows, rejected=tuple(rejected))


def _fmt(v: float) -> str:
    return repr(float(v))


def write_norms(lexicon: NormLexicon, path) -> None:
    """Write a lexicon in the default norms CSV schema (lossless float repr)."""
    cols = ["word"] + [d.key for d in DIMENSIONS]
    any_emb = any(e.embodiment is not None for e in lexicon)
    if any_emb:
        cols.append("embodiment")
    if lexicon.has_pos:
        cols.append("pos")
    any_sd = any(e.sd is not None for e in lexicon)
    any_n = any(e.n_raters is not None for e in lexicon)
    if any_sd:
        cols += [f"sd_{d.key}" for d in DIMENSIONS]
    if any_n:
        cols += [f"n_{d.key}" for d in DIMENSIONS]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for e in lexicon:
            row = [e.word] + [_fmt(v) for v in e.ratings]
            if any_emb:
                row.append("" if e.embodiment is None else _fmt(e.embodiment))
            if lexicon.has_pos:
                row.append(e.pos or "")
            if any_sd:
                row += [_fmt(v) for v in e.sd] if e.sd else [""] * N_DIMS
            if any_n:
                row += [str(v) for v in e.n_raters] if e.n_raters else [""] * N_DIMS
            w.writerow(row)


def intersect(lexicon: NormLexicon, other: Iterable[str]) -> NormLexicon:
    """Sub-lexicon of words also in ``other``, in lexicon order."""
    if isinstance(other, NormLexicon):
        keep = set(other.words)
    elif isinstance(other, EmbeddingStore):
        keep = set(other.vectors)
    else:
        keep = {normalize_word(w) for w in other}
    entries = tuple(e for e in lexicon if e.word in keep)
    if not entries:
        raise NormDataError(
            f"empty intersection between {len(lexicon)} lexicon words and {len(keep)} other words")
    coverage = len(entries) / len(lexicon) if len(lexicon) else 0.0
    logger.info("intersection keeps %d of %d words (%.1f%%)", len(entries), len(lexicon),
                100 * coverage)
    return NormLexicon(entries, source=lexicon.source, n_rows=lexicon.n_rows,
                       rejected=lexicon.rejected)


def coverage(lexicon: NormLexicon, subset: NormLexicon) -> float:
    return len(subset) / len(lexicon) if len(lexicon) else 0.0


# ---------------------------------------------------------------------------
# raw responses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RawResponse:
    survey_id: str
    participant_id: str
    word: str
    dimension: object  # Dimension or EMBODIMENT
    rating: float


@dataclass(frozen=True)
class RawResponseTable:
    records: tuple[RawResponse, ...]
    source: str = ""

    def __post_init__(self):
        seen = set()
        for r in self.records:
            smax = scale_max(r.dimension)
            if not (0.0 <= r.rating <= smax):
                raise NormDataError(
                    f"rating {r.rating} outside [0,{smax:g}] for {r.word}/{r.dimension!r}")
            key = (r.survey_id, r.participant_id, r.word, r.dimension)
            if key in seen:
                raise NormDataError(f"duplicate response {key}")
            seen.add(key)

    def __len__(self):
        return len(self.records)

    def dimensions(self) -> list:
        present = {r.dimension for r in self.records}
        out = [d for d in DIMENSIONS if d in present]
        if EMBODIMENT in present:
            out.append(EMBODIMENT)
        return out


RAW_COLUMNS = ("survey_id", "participant_id", "word", "dimension", "rating")


def load_raw_responses(path) -> RawResponseTable:
    path = Path(path)
    records = []
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lstrip("﻿") for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        missing = [c for c in RAW_COLUMNS if c not in header]
        if missing:
            raise NormDataError(f"{path}: missing column(s) {missing}")
        for line, row in enumerate(reader, start=2):
            dim = parse_dimension(row["dimension"])
            try:
                rating = float(row["rating"])
            except ValueError as exc:
                raise NormDataError(f"{path} line {line}: bad rating {row['rating']!r}") from exc
            records.append(RawResponse(row["survey_id"].strip(), row["participant_id"].strip(),
                                       normalize_word(row["word"]), dim, rating))
    return RawResponseTable(tuple(records), source=str(path))


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingStore:
    dim: int
    vectors: Mapping[str, np.ndarray]
    source: str = ""
    skipped_lines: tuple[int, ...] = ()
    duplicates: int = 0

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, word):
        return word in self.vectors

    def matrix(self, words: Sequence[str]) -> np.ndarray:
        """Stack vectors for ``words`` into a len(words) x dim array."""
        out = np.empty((len(words), self.dim))
        for i, w in enumerate(words):
            out[i] = self.vectors[w]
        return out


def load_embeddings(path) -> EmbeddingStore:
    """Parse a word2vec text file (optionally gzip-compressed)."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    skipped: list[int] = []
    duplicates = 0
    dim = None
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip("\r").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    declared = (int(parts[0]), int(parts[1]))
                except ValueError:
                    declared = None
                if declared is not None:
                    dim = declared[1]
                    continue
            word = normalize_word(parts[0])
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=float)
            except ValueError:
                skipped.append(lineno)
                continue
            if dim is None:
                if vec.size == 0:
                    skipped.append(lineno)
                    continue
                dim = vec.size
            if vec.size != dim or not np.all(np.isfinite(vec)):
                skipped.append(lineno)
                continue
            if word in vectors:
                duplicates += 1
                continue
            vec.setflags(write=False)
            vectors[word] = vec
    if not vectors:
        raise NormDataError(f"{path}: no usable embedding lines")
    if skipped:
        logger.warning("%s: skipped %d malformed line(s), first at line %d", path,
                       len(skipped), skipped[0])
    if duplicates:
        logger.warning("%s: %d duplicate word(s) ignored (first occurrence kept)", path, duplicates)
    return EmbeddingStore(dim, vectors, str(path), tuple(skipped), duplicates)


# ---------------------------------------------------------------------------
# lexical decision data
# ---------------------------------------------------------------------------

LD_COLUMNS = ("word", "zrt", "err", "length", "log_freq")


@dataclass(frozen=True)
class LexicalDecisionRecord:
    word: str
    zrt: float
    err: float
    length: int
    log_freq: float


@dataclass(frozen=True)
class LexicalDecisionTable:
    """Megastudy lexical-decision measures; missing values are NaN."""

    records: tuple[LexicalDecisionRecord, ...]
    source: str = ""
    rejected: tuple[RejectedRow, ...] = field(default=())

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.word in seen:
                raise NormDataError(f"duplicate word {r.word!r} in lexical decision data")
            seen.add(r.word)

    def __len__(self):
        return len(self.records)

    @cached_property
    def index(self) -> dict[str, int]:
        return {r.word: i for i, r in enumerate(self.records)}

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(r.word for r in self.records)


def load_lexical_decision(path) -> LexicalDecisionTable:
    path = Path(path)
    records = []
    rejected = []
    seen = set()
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lstrip("﻿") for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        missing = [c for c in LD_COLUMNS if c not in header]
        if missing:
            raise NormDataError(f"{path}: missing column(s) {missing}")
        for line, row in enumerate(reader, start=2):
            word = normalize_word(row["word"] or "")
            try:
                if not word:
                    raise NormDataError("empty word")
                if word in seen:
                    raise NormDataError("duplicate word")
                vals = [_float_or_none(row[c]) for c in ("zrt", "err", "length", "log_freq")]
                zrt, err, length, log_freq = (math.nan if v is None else v for v in vals)
                if not math.isnan(err) and not 0.0 <= err <= 1.0:
                    raise NormDataError(f"error rate out of [0,1]: {err}")
                if not math.isnan(length):
                    if length <= 0 or length != int(length):
                        raise NormDataError(f"length must be a positive integer: {length}")
                    length = int(length)
                rec = LexicalDecisionRecord(word, zrt, err, length, log_freq)
            except (NormDataError, ValueError) as exc:
                rejected.append(RejectedRow(line, word, str(exc)))
                continue
            seen.add(word)
            records.append(rec)
    for r in rejected:
        logger.warning("%s line %d (%r) rejected: %s", path, r.line, r.word, r.reason)
    return LexicalDecisionTable(tuple(records), str(path), tuple(rejected))


# ---------------------------------------------------------------------------
# external norms for cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExternalNorms:
    """A third-party rating set: word order plus named numeric columns (NaN = missing)."""

    name: str
    words: tuple[str, ...]
    columns: Mapping[str, np.ndarray]

    @classmethod
    def from_lexicon(cls, lexicon: NormLexicon, name: str = "") -> "ExternalNorms":
        cols = {d.key: lexicon.ratings[:, d].copy() for d in DIMENSIONS}
        if any(e.embodiment is not None for e in lexicon):
            cols["embodiment"] = lexicon.embodiment.copy()
        return cls(name or lexicon.source, lexicon.words, cols)


def load_external_norms(path, name: str | None = None) -> ExternalNorms:
    """Load any CSV with a ``word`` column; every other numeric column is kept."""
    path = Path(path)
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lstrip("﻿") for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        if "word" not in header:
            raise NormDataError(f"{path}: missing column 'word'")
        value_cols = [h for h in header if h != "word"]
        words: list[str] = []
        data: dict[str, list[float]] = {c: [] for c in value_cols}
        seen = set()
        for row in reader:
            w = normalize_word(row["word"] or "")
            if not w or w in seen:
                continue
            seen.add(w)
            words.append(w)
            for c in value_cols:
                try:
                    v = _float_or_none(row[c])
                except ValueError:
                    v = None
                data[c].append(math.nan if v is None else v)
    cols = {c: np.array(v, dtype=float) for c, v in data.items()
            if np.any(np.isfinite(np.array(v, dtype=float)))}
    return ExternalNorms(name or path.stem, tuple(words), cols)
