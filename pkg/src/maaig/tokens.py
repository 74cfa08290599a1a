"""Word-level tokenizer for instruction and caption text.

Normalization is lowercase plus punctuation isolation: ";" and any other
punctuation mark become standalone tokens. Five special ids are fixed:
PAD=0, BOS=1, EOS=2, UNK=3, SEP=4; SEP is the ";" separator used when
several instructions are merged into one.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

PAD, BOS, EOS, UNK, SEP = 0, 1, 2, 3, 4
N_SPECIALS = 5
SEP_WORD = ";"
UNK_WORD = "<unk>"
SPECIAL_WORDS = ("<pad>", "<bos>", "<eos>", UNK_WORD, SEP_WORD)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def normalize(text: str) -> list[str]:
    """Lowercase and split into word/punctuation tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Frozen word list; ordinary words occupy ids N_SPECIALS and up."""

    words: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if SEP_WORD in self.words:
            raise ValueError("';' is reserved for the SEP special")
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        object.__setattr__(
            self, "_id_of", {w: N_SPECIALS + i for i, w in enumerate(self.words)}
        )

    @property
    def size(self) -> int:
        return N_SPECIALS + len(self.words)

    def id_of(self, word: str) -> int:
        if word == SEP_WORD:
            return SEP
        return self._id_of.get(word, UNK)

    def word_of(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise ValueError(f"token id {token_id} out of range for vocab of {self.size}")
        if token_id < N_SPECIALS:
            return SPECIAL_WORDS[token_id]
        return self.words[token_id - N_SPECIALS]

    def save(self, path: str | Path) -> None:
        payload = {"words": list(self.words), "specials": list(SPECIAL_WORDS)}
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        payload = json.loads(Path(path).read_text())
        return cls(words=tuple(payload["words"]))


def train_vocab(corpus: list[str], min_count: int = 1) -> Vocabulary:
    """Build a vocabulary from raw texts.

    Words are kept when their corpus frequency reaches min_count, ordered by
    (frequency desc, word asc) so construction is reproducible anywhere.
    """
    if not corpus:
        raise ValueError("cannot train a vocabulary on an empty corpus")
    counts = Counter(w for text in corpus for w in normalize(text) if w != SEP_WORD)
    kept = sorted(
        (w for w, c in counts.items() if c >= min_count),
        key=lambda w: (-counts[w], w),
    )
    return Vocabulary(words=tuple(kept))


def encode(vocab: Vocabulary, text: str, add_bos_eos: bool = False) -> list[int]:
    ids = [vocab.id_of(w) for w in normalize(text)]
    if add_bos_eos:
        return [BOS, *ids, EOS]
    return ids


def decode(vocab: Vocabulary, ids: list[int]) -> str:
    """Render ids back to text: PAD/BOS/EOS dropped, SEP shown as ";"."""
    out: list[str] = []
    for i in ids:
        word = vocab.word_of(i)
        if i in (PAD, BOS, EOS):
            continue
        out.append(word)
    return " ".join(out)
