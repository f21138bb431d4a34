"""Hashed feature extraction for parser states.

A parser state is seen through a 4-position window (-1, 0, 1, 2) of
``NodeView`` snapshots; every template is conjoined with the candidate
action id and hashed into a fixed power-of-two dimension count with
FNV-1a 64.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from . import clusters
from .clusters import UNK

# window geometry: n0/n1 are the pair acted on, n-1/n2 their neighbours
POSITIONS = (-1, 0, 1, 2)
PAIRS = ((-1, 0), (0, 1), (1, 2), (-1, 2), (0, 2))
BIGRAM_PAIRS = ((0, 1), (1, 2), (0, 2))


@dataclass(frozen=True)
class NodeView:
    """What feature templates may see of one parse item."""

    category: str
    head_form: str
    head_lemma: str
    cluster_full: str
    cluster_6: str
    block_degree: int


BOUNDARY = NodeView("<B>", "<B>", "<B>", "<B>", "<B>", 0)


def terminal_category(tag, form, tagclass):
    """Closed-class tags carry the word form in the category itself."""
    if tagclass is not None and tagclass.is_closed(tag):
        return f"{tag}_{form}"
    return tag


def make_terminal_view(token, tagclass=None, lexicon=None) -> NodeView:
    full = lexicon.lookup(token.form) if lexicon is not None else UNK
    return NodeView(
        category=terminal_category(token.pos, token.form, tagclass),
        head_form=token.form,
        head_lemma=token.lemma or token.form,
        cluster_full=full,
        cluster_6=clusters.prefix(full, 6),
        block_degree=1,
    )


def make_phrase_view(label, head_token, block_degree, lexicon=None) -> NodeView:
    full = lexicon.lookup(head_token.form) if lexicon is not None else UNK
    return NodeView(
        category=label,
        head_form=head_token.form,
        head_lemma=head_token.lemma or head_token.form,
        cluster_full=full,
        cluster_6=clusters.prefix(full, 6),
        block_degree=block_degree,
    )


def window(views, i) -> dict:
    """Map {-1, 0, 1, 2} -> NodeView around pair position ``i``; positions
    outside the state give the boundary sentinel."""
    n = len(views)
    if not 0 <= i < n:
        raise IndexError(f"window position {i} out of range for {n} items")
    return {p: views[i + p] if 0 <= i + p < n else BOUNDARY
            for p in POSITIONS}


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 2 ** 24
    cluster_kinds: tuple = ()
    pair_minus1_0: bool = True
    literal_duplicate_ww: bool = False
    lemma_templates: bool = False

    def __post_init__(self):
        if self.dim <= 0 or self.dim & (self.dim - 1):
            raise ValueError(f"dimension count must be a power of two, got {self.dim}")
        bad = set(self.cluster_kinds) - {clusters.FULL, clusters.SIX_BIT, clusters.FOUR_BIT}
        if bad:
            raise ValueError(f"unknown cluster kinds: {sorted(bad)}")


def config_digest(config, scorer=None) -> str:
    text = "|".join([
        str(config.dim),
        ",".join(config.cluster_kinds),
        str(config.pair_minus1_0),
        str(config.literal_duplicate_ww),
        str(config.lemma_templates),
        scorer or "-",
    ])
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def _kind_value(view, kind):
    if kind == clusters.FULL:
        return view.cluster_full
    if kind == clusters.SIX_BIT:
        return view.cluster_6
    return clusters.prefix(view.cluster_full, 4)


def template_parts(views, config, model=None) -> list:
    """All template instances for one window, as tuples of string parts
    (first part identifies the template)."""
    out = []
    for p in POSITIONS:
        v = views[p]
        ps = str(p)
        out.append(("uC" + ps, v.category))
        out.append(("uW" + ps, v.head_form))
        out.append(("uCW" + ps, v.category, v.head_form))
        if config.lemma_templates:
            out.append(("uL" + ps, v.head_lemma))
            out.append(("uCL" + ps, v.category, v.head_lemma))
    pairs = PAIRS if config.pair_minus1_0 else PAIRS[1:]
    for m, n in pairs:
        vm, vn = views[m], views[n]
        tag = f"{m}:{n}"
        out.append(("pWW" + tag, vm.head_form, vn.head_form))
        out.append(("pWC" + tag, vm.head_form, vn.category))
        out.append(("pCW" + tag, vm.category, vn.head_form))
        if config.literal_duplicate_ww:
            # the doubled word-word template, kept for the ablation
            out.append(("pWW2" + tag, vm.head_form, vn.head_form))
        else:
            out.append(("pCC" + tag, vm.category, vn.category))
        if config.lemma_templates:
            out.append(("pLL" + tag, vm.head_lemma, vn.head_lemma))
            out.append(("pLC" + tag, vm.head_lemma, vn.category))
            out.append(("pCL" + tag, vm.category, vn.head_lemma))
        for kind in config.cluster_kinds:
            km, kn = _kind_value(vm, kind), _kind_value(vn, kind)
            kt = kind + tag
            out.append(("kCK" + kt, vm.category, kn))
            out.append(("kKC" + kt, km, vn.category))
            out.append(("kCKC" + kt, vm.category, km, vn.category))
            out.append(("kCCK" + kt, vm.category, vn.category, km))
            out.append(("kCKCK" + kt, vm.category, km, vn.category, kn))
    if model is not None:
        for m, n in BIGRAM_PAIRS:
            vm, vn = views[m], views[n]
            tag = f"{m}:{n}"
            for a, b, d in ((vm, vn, "f"), (vn, vm, "b")):
                bucket = model.query(a.head_form, b.head_form).name
                out.append(("bB" + d + tag, bucket))
                out.append(("bBCC" + d + tag, bucket, vm.category, vn.category))
    return out


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes, h=_FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def hash_index(parts, action_id, dim) -> int:
    """FNV-1a 64 over the 0x1F-joined UTF-8 parts and action id, masked
    to the power-of-two ``dim``."""
    data = "\x1f".join((*parts, action_id)).encode("utf-8")
    return _fnv1a(data) & (dim - 1)


class FeatureExtractor:
    """Pairs a config (and optional bigram model) with an index memo.

    Hash values are memoized by (template parts, action id); the parts
    vocabulary is small in practice, so the exact FNV computation runs
    once per distinct input.
    """

    def __init__(self, config, bigram_model=None):
        self.config = config
        self.model = bigram_model
        self._memo = {}

    def extract(self, views, action_id) -> np.ndarray:
        return self.extract_many(views, (action_id,))[0]

    def extract_many(self, views, action_ids) -> list:
        tpls = template_parts(views, self.config, self.model)
        dim = self.config.dim
        memo = self._memo
        out = []
        for action_id in action_ids:
            row = np.empty(len(tpls), dtype=np.int64)
            for j, parts in enumerate(tpls):
                key = (parts, action_id)
                idx = memo.get(key)
                if idx is None:
                    idx = hash_index(parts, action_id, dim)
                    memo[key] = idx
                row[j] = idx
            out.append(row)
        return out


def extract(views, action_id, config, model=None) -> np.ndarray:
    """One-shot extraction; see FeatureExtractor for the memoized path."""
    return FeatureExtractor(config, model).extract(views, action_id)
