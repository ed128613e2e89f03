"""Word embeddings: CBOW training with hierarchical softmax over a Huffman tree.

A target word is predicted from the mean of its context word vectors. The
probability of a word is a product of branch sigmoids along the word's
path in a binary Huffman tree built from corpus frequencies, which makes
the distribution over the vocabulary exactly normalized. Training is
sequential stochastic gradient descent (numba-compiled inner loop), so a
fixed seed and config reproduce the model bit for bit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit


@dataclass
class TrainConfig:
    """Hyper-parameters for CBOW training. Values are artifact defaults."""

    dim: int = 100
    window: int = 5
    epochs: int = 5
    rate: float = 0.025
    min_count: int = 5
    seed: int = 1

    # Learning rate decays linearly to this fraction of the initial rate.
    rate_floor_fraction: float = 1e-4


class Vocabulary:
    """Retained words ordered by descending corpus frequency."""

    def __init__(self, words: list[str], counts: np.ndarray, min_count: int):
        self.words = words
        self.counts = np.asarray(counts, dtype=np.int64)
        self.min_count = min_count
        self.index = {w: i for i, w in enumerate(words)}

    @property
    def size(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.words)


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int = 5) -> Vocabulary:
    """Count tokens and retain those seen at least ``min_count`` times.

    Words are ordered by count descending, ties by first occurrence.
    """
    counts: dict[str, int] = {}
    empty = True
    for sentence in corpus:
        for token in sentence:
            empty = False
            counts[token] = counts.get(token, 0) + 1
    if empty:
        raise ValueError("empty corpus")
    order = {w: i for i, w in enumerate(counts)}
    retained = [w for w, c in counts.items() if c >= min_count]
    if not retained:
        raise ValueError(f"no word reaches min_count={min_count}")
    retained.sort(key=lambda w: (-counts[w], order[w]))
    return Vocabulary(retained, np.array([counts[w] for w in retained]), min_count)


@dataclass
class HuffmanTree:
    """Per-word binary codes and root-to-leaf paths of internal node ids.

    Flattened arrays (``path_flat``/``code_flat`` indexed through
    ``offsets``) feed the compiled kernels; ``codes``/``paths`` expose
    the per-word view.
    """

    codes: list[np.ndarray]
    paths: list[np.ndarray]
    n_internal: int
    path_flat: np.ndarray = field(repr=False, default=None)
    code_flat: np.ndarray = field(repr=False, default=None)
    offsets: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.path_flat is None:
            lengths = [len(p) for p in self.paths]
            self.offsets = np.zeros(len(self.paths) + 1, dtype=np.int64)
            np.cumsum(lengths, out=self.offsets[1:])
            self.path_flat = (
                np.concatenate(self.paths) if self.paths else np.empty(0, np.int32)
            ).astype(np.int32)
            self.code_flat = (
                np.concatenate(self.codes) if self.codes else np.empty(0, np.uint8)
            ).astype(np.uint8)

    def code_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)


def build_huffman(vocab: Vocabulary) -> HuffmanTree:
    """Huffman coding over word counts; frequent words get short codes.

    Ties in the merge heap are broken by node creation order (leaves in
    frequency-rank order first), which keeps the tree deterministic.
    """
    m = vocab.size
    if m < 2:
        raise ValueError("Huffman tree needs a vocabulary of at least 2 words")
    # heap entries: (count, serial, node_id); leaves are 0..m-1, internal m..2m-2
    heap: list[tuple[int, int, int]] = [(int(c), i, i) for i, c in enumerate(vocab.counts)]
    heapq.heapify(heap)
    left = np.zeros(m - 1, dtype=np.int64)
    right = np.zeros(m - 1, dtype=np.int64)
    for k in range(m - 1):
        c1, _, n1 = heapq.heappop(heap)
        c2, _, n2 = heapq.heappop(heap)
        left[k], right[k] = n1, n2
        heapq.heappush(heap, (c1 + c2, m + k, m + k))

    codes: list[np.ndarray] = [None] * m  # type: ignore[list-item]
    paths: list[np.ndarray] = [None] * m  # type: ignore[list-item]
    # root is the last internal node created, id 2m-2 -> internal index m-2
    stack = [(2 * m - 2, [], [])]
    while stack:
        node, code, path = stack.pop()
        if node < m:
            codes[node] = np.array(code, dtype=np.uint8)
            paths[node] = np.array(path, dtype=np.int32)
        else:
            k = node - m
            stack.append((int(left[k]), code + [0], path + [k]))
            stack.append((int(right[k]), code + [1], path + [k]))
    return HuffmanTree(codes=codes, paths=paths, n_internal=m - 1)


@dataclass
class EmbeddingModel:
    """Fitted word vectors plus the Huffman output layer."""

    vocab: Vocabulary
    tree: HuffmanTree
    config: TrainConfig
    input_vectors: np.ndarray  # M x d
    node_vectors: np.ndarray  # (M-1) x d
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, word: str) -> np.ndarray:
        return self.input_vectors[self.vocab.index[word]]

    def indices(self, tokens: Sequence[str]) -> np.ndarray:
        """Map tokens to vocab indices, dropping out-of-vocabulary tokens."""
        idx = self.vocab.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int32)


def init_model(vocab: Vocabulary, config: TrainConfig) -> EmbeddingModel:
    """Seeded uniform init for input vectors; node vectors start at zero."""
    if config.dim < 1:
        raise ValueError("dim must be >= 1")
    tree = build_huffman(vocab)
    rng = np.random.default_rng(config.seed)
    bound = 0.5 / config.dim
    vectors = rng.uniform(-bound, bound, size=(vocab.size, config.dim))
    nodes = np.zeros((vocab.size - 1, config.dim))
    return EmbeddingModel(vocab, tree, config, vectors, nodes)


# ---------------------------------------------------------------------------
# Compiled kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _softplus(x: float) -> float:
    # log(1 + e^x), stable for large |x|
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def _count_pairs(sent_offsets: np.ndarray, window: int) -> int:
    total = 0
    for s in range(sent_offsets.size - 1):
        n = sent_offsets[s + 1] - sent_offsets[s]
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            if hi - lo - 1 > 0:
                total += 1
    return total


@njit(cache=True)
def _cbow_train(
    tokens: np.ndarray,
    sent_offsets: np.ndarray,
    vectors: np.ndarray,
    nodes: np.ndarray,
    path_flat: np.ndarray,
    code_flat: np.ndarray,
    tree_offsets: np.ndarray,
    window: int,
    epochs: int,
    rate: float,
    rate_floor: float,
    epoch_losses: np.ndarray,
) -> None:
    d = vectors.shape[1]
    h = np.empty(d)
    grad_h = np.empty(d)
    per_epoch = _count_pairs(sent_offsets, window)
    total = per_epoch * epochs
    if total == 0:
        return
    done = 0
    for epoch in range(epochs):
        loss_sum = 0.0
        for s in range(sent_offsets.size - 1):
            a = sent_offsets[s]
            n = sent_offsets[s + 1] - a
            for i in range(n):
                lo = max(0, i - window)
                hi = min(n, i + window + 1)
                c = hi - lo - 1
                if c <= 0:
                    continue
                target = tokens[a + i]
                for k in range(d):
                    h[k] = 0.0
                for j in range(lo, hi):
                    if j == i:
                        continue
                    w = tokens[a + j]
                    for k in range(d):
                        h[k] += vectors[w, k]
                inv_c = 1.0 / c
                for k in range(d):
                    h[k] *= inv_c
                lr = rate - (rate - rate_floor) * (done / total)
                for k in range(d):
                    grad_h[k] = 0.0
                for q in range(tree_offsets[target], tree_offsets[target + 1]):
                    node = path_flat[q]
                    bit = code_flat[q]
                    x = 0.0
                    for k in range(d):
                        x += h[k] * nodes[node, k]
                    sig = 1.0 / (1.0 + math.exp(-x))
                    err = sig - (1.0 - bit)  # d(loss)/dx with label b' = 1 - bit
                    sgn = 1.0 - 2.0 * bit
                    loss_sum += _softplus(-sgn * x)
                    for k in range(d):
                        grad_h[k] += err * nodes[node, k]
                        nodes[node, k] -= lr * err * h[k]
                step = lr * inv_c
                for j in range(lo, hi):
                    if j == i:
                        continue
                    w = tokens[a + j]
                    for k in range(d):
                        vectors[w, k] -= step * grad_h[k]
                done += 1
        epoch_losses[epoch] = loss_sum / per_epoch


@njit(cache=True)
def _sequence_loglik(
    tokens: np.ndarray,
    window: int,
    vectors: np.ndarray,
    nodes: np.ndarray,
    path_flat: np.ndarray,
    code_flat: np.ndarray,
    tree_offsets: np.ndarray,
) -> tuple[float, int]:
    """Sum of log p(token | window context) over positions with a context."""
    d = vectors.shape[1]
    n = tokens.size
    h = np.empty(d)
    total = 0.0
    scored = 0
    for i in range(n):
        lo = max(0, i - window)
        hi = min(n, i + window + 1)
        c = hi - lo - 1
        if c <= 0:
            continue
        for k in range(d):
            h[k] = 0.0
        for j in range(lo, hi):
            if j == i:
                continue
            w = tokens[j]
            for k in range(d):
                h[k] += vectors[w, k]
        inv_c = 1.0 / c
        for k in range(d):
            h[k] *= inv_c
        target = tokens[i]
        for q in range(tree_offsets[target], tree_offsets[target + 1]):
            node = path_flat[q]
            x = 0.0
            for k in range(d):
                x += h[k] * nodes[node, k]
            sgn = 1.0 - 2.0 * code_flat[q]
            total -= _softplus(-sgn * x)
        scored += 1
    return total, scored


# ---------------------------------------------------------------------------
# Training and scoring API
# ---------------------------------------------------------------------------


def _flatten(sentences: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
    np.cumsum([s.size for s in sentences], out=offsets[1:])
    flat = np.concatenate(sentences) if sentences else np.empty(0, np.int32)
    return flat.astype(np.int32), offsets


def train_cbow(
    sentences: Iterable[Sequence[str]],
    config: TrainConfig,
    vocab: Vocabulary | None = None,
) -> EmbeddingModel:
    """Train CBOW embeddings with hierarchical softmax.

    ``sentences`` is an iterable of token lists; out-of-vocabulary tokens
    are dropped and windows never cross sentence boundaries. With
    ``epochs=0`` the returned model is its seeded random initialization.
    """
    if config.window < 1:
        raise ValueError("window must be >= 1")
    material = [list(s) for s in sentences]
    if vocab is None:
        vocab = build_vocab(material, config.min_count)
    model = init_model(vocab, config)
    index = vocab.index
    encoded = [
        np.array([index[t] for t in sent if t in index], dtype=np.int32)
        for sent in material
    ]
    encoded = [e for e in encoded if e.size > 0]
    if config.epochs == 0:
        return model
    flat, offsets = _flatten(encoded)
    losses = np.zeros(config.epochs)
    _cbow_train(
        flat,
        offsets,
        model.input_vectors,
        model.node_vectors,
        model.tree.path_flat,
        model.tree.code_flat,
        model.tree.offsets,
        config.window,
        config.epochs,
        config.rate,
        config.rate * config.rate_floor_fraction,
        losses,
    )
    model.epoch_losses = [float(x) for x in losses]
    return model


def pair_loss_and_grads(
    model: EmbeddingModel, context_idx: Sequence[int], target_idx: int
) -> tuple[float, np.ndarray, dict[int, np.ndarray]]:
    """Loss and exact gradients for one (context, target) pair.

    Returns ``(loss, grad_h_over_c, node_grads)`` where ``grad_h_over_c``
    is the gradient with respect to each context word's input vector
    (identical across the context because the hidden state is their mean)
    and ``node_grads`` maps internal node id to its gradient. Gradients
    match central finite differences of the loss; the training kernel
    takes exactly these steps scaled by the learning rate.
    """
    c = len(context_idx)
    if c == 0:
        raise ValueError("pair needs at least one context word")
    h = model.input_vectors[np.asarray(context_idx)].mean(axis=0)
    path = model.tree.paths[target_idx]
    code = model.tree.codes[target_idx]
    loss = 0.0
    grad_h = np.zeros(model.dim)
    node_grads: dict[int, np.ndarray] = {}
    for node, bit in zip(path, code):
        x = float(h @ model.node_vectors[node])
        sgn = 1.0 - 2.0 * float(bit)
        loss += float(np.logaddexp(0.0, -sgn * x))
        err = _sigmoid(x) - (1.0 - float(bit))
        grad_h += err * model.node_vectors[node]
        node_grads[int(node)] = err * h
    return loss, grad_h / c, node_grads


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def predict_word_prob(
    model: EmbeddingModel, context: Sequence[str], target: str
) -> float | None:
    """p(target | context) under hierarchical softmax; sums to 1 over the vocab.

    Context tokens outside the vocabulary are dropped; returns None when no
    context token survives (the pair is unusable). Raises if the target is
    out of vocabulary.
    """
    if target not in model.vocab:
        raise ValueError(f"target {target!r} not in vocabulary")
    ctx = model.indices(context)
    if ctx.size == 0:
        return None
    h = model.input_vectors[ctx].mean(axis=0)
    t = model.vocab.index[target]
    log_p = 0.0
    for node, bit in zip(model.tree.paths[t], model.tree.codes[t]):
        x = float(h @ model.node_vectors[node])
        sgn = 1.0 - 2.0 * float(bit)
        log_p -= float(np.logaddexp(0.0, -sgn * x))
    return math.exp(log_p)


def sequence_loglik(model: EmbeddingModel, token_indices: np.ndarray) -> tuple[float, int]:
    """Log-likelihood of a token index sequence plus the scored-position count."""
    return _sequence_loglik(
        np.asarray(token_indices, dtype=np.int32),
        model.config.window,
        model.input_vectors,
        model.node_vectors,
        model.tree.path_flat,
        model.tree.code_flat,
        model.tree.offsets,
    )


# ---------------------------------------------------------------------------
# Similarity queries
# ---------------------------------------------------------------------------


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(a @ b) / (na * nb)


@dataclass
class SimilarityQuery:
    """Signed word combination queried against the N most frequent words."""

    positives: list[str]
    negatives: list[str] = field(default_factory=list)
    n_candidates: int = 10_000
    k: int = 10

    @property
    def words(self) -> list[str]:
        return self.positives + self.negatives


def most_similar(model: EmbeddingModel, query: SimilarityQuery) -> list[tuple[str, float]]:
    """Top-k words by cosine to the mean of signed query vectors.

    Candidates are the ``n_candidates`` most frequent words minus the query
    words themselves; ties are broken by frequency rank.
    """
    if not query.words:
        raise ValueError("query needs at least one word")
    for word in query.words:
        if word not in model.vocab:
            raise ValueError(f"query word {word!r} not in vocabulary")
    signed = [(w, 1.0) for w in query.positives] + [(w, -1.0) for w in query.negatives]
    q = np.zeros(model.dim)
    for word, sign in signed:
        q += sign * model.vector(word)
    q /= len(signed)
    qn = float(np.linalg.norm(q))
    if qn == 0.0:
        raise ValueError("query vector is zero")

    n = min(query.n_candidates, model.vocab.size)
    exclude = {model.vocab.index[w] for w in query.words}
    cand = np.array([i for i in range(n) if i not in exclude], dtype=np.int64)
    if cand.size == 0:
        return []
    vecs = model.input_vectors[cand]
    norms = np.linalg.norm(vecs, axis=1)
    safe = norms > 0
    scores = np.where(safe, (vecs @ q) / (np.maximum(norms, 1e-300) * qn), -np.inf)
    order = np.lexsort((cand, -scores))  # score desc, then frequency rank asc
    top = order[: query.k]
    return [(model.vocab.words[int(cand[i])], float(scores[i])) for i in top]


def differential_lists(list_a: Sequence[str], list_b: Sequence[str]) -> tuple[list[str], list[str]]:
    """Drop words the two lists share; each keeps its own order."""
    shared = set(list_a) & set(list_b)
    return [w for w in list_a if w not in shared], [w for w in list_b if w not in shared]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

COMPANION_HEADER = "LAWCAST-EMB v1"


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write ``path`` (word vectors) and ``path + '.tree'`` (companion).

    The main file is "M d" then one line per word with its vector. The
    companion holds counts, Huffman codes/paths, node vectors, and the
    training config; floats round-trip exactly.
    """
    path = Path(path)
    m, d = model.input_vectors.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m} {d}\n")
        for i, word in enumerate(model.vocab.words):
            vec = " ".join(_fmt(v) for v in model.input_vectors[i])
            fh.write(f"{word} {vec}\n")
    cfg = model.config
    with open(path.with_suffix(path.suffix + ".tree"), "w", encoding="utf-8") as fh:
        fh.write(COMPANION_HEADER + "\n")
        fh.write(
            f"{m} {d} {cfg.window} {cfg.epochs} {_fmt(cfg.rate)} "
            f"{cfg.min_count} {cfg.seed}\n"
        )
        for i, word in enumerate(model.vocab.words):
            code = "".join(str(int(b)) for b in model.tree.codes[i])
            pathids = ",".join(str(int(p)) for p in model.tree.paths[i])
            fh.write(f"{word} {int(model.vocab.counts[i])} {code} {pathids}\n")
        for row in model.node_vectors:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def load_model(path: str | Path) -> EmbeddingModel:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        m, d = (int(x) for x in fh.readline().split())
        words: list[str] = []
        vectors = np.zeros((m, d))
        for i in range(m):
            parts = fh.readline().rstrip("\n").split(" ")
            words.append(parts[0])
            vectors[i] = [float(x) for x in parts[1 : d + 1]]
    with open(path.with_suffix(path.suffix + ".tree"), "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != COMPANION_HEADER:
            raise ValueError(f"unexpected companion header {header!r}")
        meta = fh.readline().split()
        window, epochs = int(meta[2]), int(meta[3])
        rate = float(meta[4])
        min_count, seed = int(meta[5]), int(meta[6])
        counts = np.zeros(m, dtype=np.int64)
        codes: list[np.ndarray] = []
        paths: list[np.ndarray] = []
        for i in range(m):
            word, count, code, pathids = fh.readline().split()
            if word != words[i]:
                raise ValueError("companion file does not match vector file")
            counts[i] = int(count)
            codes.append(np.array([int(c) for c in code], dtype=np.uint8))
            paths.append(np.array([int(p) for p in pathids.split(",")], dtype=np.int32))
        nodes = np.zeros((m - 1, d))
        for i in range(m - 1):
            nodes[i] = [float(x) for x in fh.readline().split()]
    vocab = Vocabulary(words, counts, min_count)
    tree = HuffmanTree(codes=codes, paths=paths, n_internal=m - 1)
    config = TrainConfig(
        dim=d, window=window, epochs=epochs, rate=rate, min_count=min_count, seed=seed
    )
    return EmbeddingModel(vocab, tree, config, vectors, nodes)
