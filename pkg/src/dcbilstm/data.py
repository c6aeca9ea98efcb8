"""Text loading: embeddings, tokenization, dataset formats, vocab, batching.

Supported dataset formats:

  tsv        one example per line, "<label>\\t<text>", labels are
             non-negative integers.
  sst_trees  one PTB-style parse per line with sentiment labels 0..4 at
             every node, e.g. "(3 (2 It) (4 (2 's) (4 great)))".  The root
             label is the sentence label.  With binary=True the five-way
             labels collapse to negative {0,1} -> 0 and positive {3,4} -> 1
             and neutral (2) sentences are dropped.

Vocabulary convention: row 0 is padding, row 1 is the unknown token, both
embed to zero vectors.  Real tokens occupy rows 2 and up.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError
from .tensor import make_rng

PAD_IDX = 0
UNK_IDX = 1

# splits off standard sentence punctuation while keeping contractions and
# hyphenated words intact ("rock-solid", "don't")
_PUNCT_RE = re.compile(r"([.,!?;:()\"]|\.\.\.)")


class EmbeddingTable:
    """Word -> vector lookup with case-insensitive keys."""

    def __init__(self, vectors, dim):
        self.vectors = vectors
        self.dim = dim

    def __contains__(self, word):
        return word.lower() in self.vectors

    def __len__(self):
        return len(self.vectors)

    def get(self, word):
        return self.vectors.get(word.lower())


def load_embeddings(path, dim=None):
    """Parse whitespace-separated "word v1 v2 ... vd" lines.

    The first data line fixes the dimension unless dim is given.  Repeated
    words keep the first occurrence (GloVe files list cased variants; we
    lowercase keys, so "The" after "the" is dropped).
    """
    vectors = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                if line.strip() == "":
                    continue
                raise ParseError("embedding line has no vector part", line_no)
            word = parts[0].lower()
            if dim is None:
                dim = len(parts) - 1
            if len(parts) - 1 != dim:
                raise ParseError(
                    f"expected {dim} vector components, got {len(parts) - 1}", line_no
                )
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad vector component ({exc})", line_no)
            if word not in vectors:
                vectors[word] = vec
    if dim is None:
        raise ParseError("embedding file is empty", 0)
    return EmbeddingTable(vectors, dim)


def tokenize(text):
    """Lowercase, split off punctuation, then split on whitespace."""
    text = _PUNCT_RE.sub(r" \1 ", text.lower())
    return [tok for tok in text.split() if tok]


def tokenize_and_filter(raw, table):
    """Tokenize and abandon tokens the embedding table does not cover.

    Idempotent: running the result through again changes nothing.  May
    return an empty list; callers decide how to handle fully-unknown
    sentences (vectorize substitutes a single unknown index).
    """
    return [tok for tok in tokenize(raw) if tok in table]


@dataclass
class Example:
    tokens: list
    label: int


def _load_tsv(path):
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip() == "":
                continue
            label_str, sep, text = line.rstrip("\n").partition("\t")
            if not sep:
                raise ParseError("expected '<label>\\t<text>'", line_no)
            try:
                label = int(label_str)
            except ValueError:
                raise ParseError(f"label {label_str!r} is not an integer", line_no)
            if label < 0:
                raise ParseError(f"label {label} is negative", line_no)
            tokens = tokenize(text)
            if not tokens:
                raise ParseError("no tokens after tokenization", line_no)
            examples.append(Example(tokens=tokens, label=label))
    return examples


# -- PTB sentiment trees ----------------------------------------------------


@dataclass
class _Node:
    label: int
    word: str | None
    children: list


def parse_tree(line, line_no=0):
    """One parenthesized sentiment tree -> (_Node, leaf tokens in order)."""
    pos = 0
    n = len(line)

    def skip_ws():
        nonlocal pos
        while pos < n and line[pos] in " \t":
            pos += 1

    def node():
        nonlocal pos
        skip_ws()
        if pos >= n or line[pos] != "(":
            raise ParseError(f"expected '(' at column {pos}", line_no)
        pos += 1
        skip_ws()
        start = pos
        while pos < n and line[pos].isdigit():
            pos += 1
        if start == pos:
            raise ParseError(f"expected node label at column {start}", line_no)
        label = int(line[start:pos])
        skip_ws()
        children = []
        word = None
        if pos < n and line[pos] == "(":
            while pos < n and line[pos] == "(":
                children.append(node())
                skip_ws()
        else:
            start = pos
            while pos < n and line[pos] not in "() \t":
                pos += 1
            word = line[start:pos]
            if not word:
                raise ParseError(f"expected word or subtree at column {start}", line_no)
        skip_ws()
        if pos >= n or line[pos] != ")":
            raise ParseError(f"unbalanced parentheses near column {pos}", line_no)
        pos += 1
        return _Node(label=label, word=word, children=children)

    root = node()
    skip_ws()
    if pos != n:
        raise ParseError(f"trailing text after tree at column {pos}", line_no)

    leaves = []

    def collect(nd):
        if nd.word is not None:
            leaves.append(nd.word)
        for ch in nd.children:
            collect(ch)

    collect(root)
    return root, leaves


def _all_phrases(nd, out):
    if nd.word is not None:
        out.append(([nd.word], nd.label))
        return [nd.word]
    toks = []
    for ch in nd.children:
        toks.extend(_all_phrases(ch, out))
    out.append((toks, nd.label))
    return toks


def _binary_label(label):
    """Five-way sentiment to binary; None means drop (neutral)."""
    if label in (0, 1):
        return 0
    if label in (3, 4):
        return 1
    return None


def _load_sst(path, binary, phrases):
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.strip() == "":
                continue
            root, leaves = parse_tree(line, line_no)
            if phrases:
                spans = []
                _all_phrases(root, spans)
            else:
                spans = [(leaves, root.label)]
            for toks, label in spans:
                toks = [t.lower() for t in toks]
                if binary:
                    label = _binary_label(label)
                    if label is None:
                        continue
                if toks:
                    examples.append(Example(tokens=toks, label=label))
    return examples


def load_dataset(path, fmt, binary=False, phrases=False):
    if fmt == "tsv":
        return _load_tsv(path)
    if fmt == "sst_trees":
        return _load_sst(path, binary=binary, phrases=phrases)
    raise ConfigError(f"unknown dataset format {fmt!r}")


def load_label_lines(path, label, encoding="utf-8"):
    """One-sentence-per-line file where every line shares one label.

    Movie-review style distributions ship as latin-1; pass encoding for
    those.  Blank lines are skipped.
    """
    examples = []
    with open(path, "r", encoding=encoding) as fh:
        for line in fh:
            tokens = tokenize(line)
            if tokens:
                examples.append(Example(tokens=tokens, label=label))
    return examples


# -- vocab / vectorization --------------------------------------------------


def build_vocab(example_sets, table=None):
    """Token -> row index over all splits, rows 0 and 1 reserved.

    When an embedding table is given, only tokens the table covers get
    their own row; everything else maps to the unknown row at lookup time.
    Sorted order keeps the mapping independent of example order.
    """
    seen = set()
    for examples in example_sets:
        for ex in examples:
            seen.update(ex.tokens)
    if table is not None:
        seen = {tok for tok in seen if tok in table}
    return {tok: idx for idx, tok in enumerate(sorted(seen), start=2)}


def build_embedding_matrix(vocab, table):
    """Rows follow vocab indices; pad and unknown rows stay zero."""
    mat = np.zeros((len(vocab) + 2, table.dim))
    for tok, idx in vocab.items():
        vec = table.get(tok)
        if vec is None:
            raise ConfigError(f"vocab token {tok!r} missing from embedding table")
        mat[idx] = vec
    return mat


def random_embedding_matrix(vocab, dim, rng, scale=0.1):
    """Uniform random rows for runs without pretrained vectors."""
    mat = np.zeros((len(vocab) + 2, dim))
    for idx in vocab.values():
        mat[idx] = rng.uniform(-scale, scale, size=dim)
    return mat


def vectorize(examples, vocab, drop_unknown=False):
    """Token lists -> index lists.

    drop_unknown abandons out-of-vocabulary tokens entirely (matching the
    pretrained-table regime); otherwise they map to the unknown index.  A
    sentence left with no tokens keeps a single unknown index so downstream
    code never sees length zero.
    """
    out = []
    for ex in examples:
        if drop_unknown:
            idxs = [vocab[tok] for tok in ex.tokens if tok in vocab]
        else:
            idxs = [vocab.get(tok, UNK_IDX) for tok in ex.tokens]
        if not idxs:
            idxs = [UNK_IDX]
        out.append((idxs, ex.label))
    return out


# -- folds / batches --------------------------------------------------------


def make_folds(n, k=10, seed=0):
    """Shuffle range(n) with a seeded generator, deal round-robin into k folds."""
    if n < k:
        raise ConfigError(f"cannot split {n} examples into {k} folds")
    order = np.arange(n)
    make_rng(seed).shuffle(order)
    return [sorted(order[i::k].tolist()) for i in range(k)]


@dataclass
class Batch:
    indices: np.ndarray  # (B, T) int64, padded with PAD_IDX
    lengths: np.ndarray  # (B,) int64
    labels: np.ndarray  # (B,) int64


def pad_batch(group):
    """(index list, label) pairs -> one padded Batch."""
    B = len(group)
    if B == 0:
        raise ConfigError("cannot build an empty batch")
    lengths = np.array([len(idxs) for idxs, _ in group], dtype=np.int64)
    T = int(lengths.max())
    indices = np.full((B, T), PAD_IDX, dtype=np.int64)
    for n, (idxs, _) in enumerate(group):
        indices[n, :len(idxs)] = idxs
    labels = np.array([label for _, label in group], dtype=np.int64)
    return Batch(indices=indices, lengths=lengths, labels=labels)


def make_batches(indexed, size, rng=None, shuffle=False):
    """Slice indexed examples into padded batches of at most `size`."""
    if size < 1:
        raise ConfigError(f"batch size must be >= 1, got {size}")
    order = np.arange(len(indexed))
    if shuffle:
        if rng is None:
            raise ConfigError("shuffle=True needs an rng")
        rng.shuffle(order)
    return [
        pad_batch([indexed[i] for i in order[start:start + size]])
        for start in range(0, len(indexed), size)
    ]
