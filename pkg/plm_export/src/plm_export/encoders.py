"""Frozen sentence encoders behind a tiny common interface.

An encoder turns a tagged token sequence into per-word vectors, a
classifier-token style statement vector, and nothing else; aspect vectors
are assembled by the exporter. Two backends:

* ``hash``: a deterministic pseudo-encoder for fixtures and tests. Word
  vectors are hash-seeded Gaussians; the statement vector hashes the whole
  tagged sequence so it is order-sensitive, like a real contextual CLS.
* ``transformers:<model>``: a real frozen multilingual model (mBERT, XLMR
  and friends) through the local transformers runtime; per-word vectors
  are means of the word's subword states, the statement vector is the
  first-token state.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .formats import ExportError


def _hash_rng(text: str, salt: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{salt}\x00{text}".encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class HashEncoder:
    """Deterministic stand-in for a frozen PLM."""

    def __init__(self, dim: int = 32):
        self.dim = dim

    def word_vectors(self, tokens: list[str]) -> np.ndarray:
        out = np.zeros((len(tokens), self.dim), dtype=np.float32)
        for i, tok in enumerate(tokens):
            out[i] = _hash_rng(tok, "word").normal(size=self.dim).astype(np.float32)
        return out

    def statement_vector(self, tagged_tokens: list[str]) -> np.ndarray:
        text = "\x1f".join(tagged_tokens)
        return _hash_rng(text, "cls").normal(size=self.dim).astype(np.float32)


class TransformersEncoder:
    """Frozen pretrained encoder; vectors come out at the model's width."""

    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ExportError(f"transformers backend unavailable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise ExportError(f"cannot load encoder {model_name!r}: {exc}") from exc
        self.torch = torch
        self.device = device
        self.model.to(device)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def _states(self, tokens: list[str]):
        encoding = self.tokenizer(
            tokens,
            is_split_into_words=True,
            return_tensors="pt",
            truncation=True,
        )
        with self.torch.no_grad():
            output = self.model(**{k: v.to(self.device) for k, v in encoding.items()})
        return encoding, output.last_hidden_state[0].cpu().numpy()

    def word_vectors(self, tokens: list[str]) -> np.ndarray:
        encoding, states = self._states(tokens)
        word_ids = encoding.word_ids(0)
        out = np.zeros((len(tokens), self.dim), dtype=np.float32)
        counts = np.zeros(len(tokens))
        for pos, wid in enumerate(word_ids):
            if wid is not None and wid < len(tokens):
                out[wid] += states[pos]
                counts[wid] += 1
        counts[counts == 0] = 1.0
        return (out / counts[:, None]).astype(np.float32)

    def statement_vector(self, tagged_tokens: list[str]) -> np.ndarray:
        _, states = self._states(tagged_tokens)
        return states[0].astype(np.float32)


def build_encoder(name: str, dim: int = 32, device: str = "cpu"):
    """`hash` or `transformers:<model name>`."""
    if name == "hash":
        return HashEncoder(dim=dim)
    if name.startswith("transformers:"):
        return TransformersEncoder(name.split(":", 1)[1], device=device)
    raise ExportError(f"unknown encoder {name!r}")
