"""Word sources: the bundled lexicon and rule-structured synthetic words."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .charset import Charset, DEFAULT_CHARSET

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def load_lexicon() -> list[str]:
    text = resources.files("mstr.assets").joinpath("lexicon.txt").read_text("utf-8")
    return [w for w in text.split() if w]


def successor_words(n: int, rng: np.random.Generator, prefix_len: int = 2) -> list[str]:
    """Words whose last letter is the alphabet successor of the one before it.

    The final position is a deterministic function of its left neighbour, so a
    cloze model trained on this corpus can drive its loss at that position to
    zero.
    """
    words = []
    for _ in range(n):
        prefix = "".join(rng.choice(list(_LETTERS), size=prefix_len))
        succ = _LETTERS[(_LETTERS.index(prefix[-1]) + 1) % 26]
        words.append(prefix + succ)
    return words


def random_words(n: int, rng: np.random.Generator, min_len: int = 2, max_len: int = 8,
                 charset: Charset = DEFAULT_CHARSET) -> list[str]:
    """Uniform random strings over the non-padding charset (no structure)."""
    symbols = [s for s in charset.symbols if len(s) == 1]
    lengths = rng.integers(min_len, max_len + 1, size=n)
    return ["".join(rng.choice(symbols, size=k)) for k in lengths]


def sample_corpus(n_words: int, seed: int, lexicon: list[str] | None = None) -> list[str]:
    """Draw a text corpus (with repetition) from the lexicon."""
    lexicon = lexicon if lexicon is not None else load_lexicon()
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(lexicon), size=n_words)
    return [lexicon[i] for i in idx]
