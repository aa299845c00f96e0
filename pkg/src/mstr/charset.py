"""Character vocabulary: 10 digits, 26 lowercase letters, one padding token.

The padding token marks end-of-word; every encoded sequence is padded to a
fixed length and decoding stops at the first padding index.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

PAD_TOKEN = "<pad>"
DEFAULT_SYMBOLS = tuple("0123456789abcdefghijklmnopqrstuvwxyz") + (PAD_TOKEN,)

DEFAULT_T_SEQ = 26  # 25 characters + mandatory trailing padding slot


@dataclass(frozen=True)
class Charset:
    symbols: tuple = DEFAULT_SYMBOLS

    def __post_init__(self):
        if len(self.symbols) != 37:
            raise ValueError(f"charset must have exactly 37 classes, got {len(self.symbols)}")
        if self.symbols.count(PAD_TOKEN) != 1:
            raise ValueError("charset must contain the padding token exactly once")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("charset symbols must be unique")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @property
    def padding_index(self) -> int:
        return self._index[PAD_TOKEN]

    @property
    def num_classes(self) -> int:
        return len(self.symbols)

    def index_of(self, symbol: str) -> int:
        idx = self._index.get(symbol)
        if idx is None:
            raise ValueError(f"symbol {symbol!r} is not in the charset")
        return idx

    def contains_text(self, text: str) -> bool:
        return all(c in self._index and c != PAD_TOKEN for c in text)

    def hash(self) -> str:
        """Stable identifier used to guard checkpoint/dataset compatibility."""
        joined = "\x00".join(self.symbols)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]

    def encode(self, text: str, t_seq: int = DEFAULT_T_SEQ) -> list[int]:
        """Map text to a fixed-length index sequence, padding past end-of-word."""
        if len(text) > t_seq - 1:
            raise ValueError(f"text {text!r} longer than {t_seq - 1} characters")
        indices = [self.index_of(c) for c in text]
        indices.extend([self.padding_index] * (t_seq - len(indices)))
        return indices

    def decode(self, indices) -> str:
        """Inverse of encode; stops at the first padding index."""
        chars = []
        for i in indices:
            i = int(i)
            if not 0 <= i < len(self.symbols):
                raise ValueError(f"index {i} out of range for charset")
            if i == self.padding_index:
                break
            chars.append(self.symbols[i])
        return "".join(chars)


DEFAULT_CHARSET = Charset()
