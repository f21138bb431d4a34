"""Easy-first parsing engine.

The state is an ordered sequence of immutable parse items.  Each step
scores every applicable action at every adjacent position, applies the
globally best one, and rescores only positions whose feature window the
change could have touched.  Training replays gold actions until the
first error, performs one update, and abandons the sentence.
"""

import random
from dataclasses import dataclass

import numpy as np

from .features import FeatureExtractor, make_phrase_view, make_terminal_view, window
from .treebank import ConstTree, Node, block_count

FALLBACK_ROOT = "VROOT"

LEFT = "left"
RIGHT = "right"

BUILD = "BUILD"
ATTACH = "ATTACH"
UNARY = "UNARY"
SWAP = "SWAP"
_KIND_ORDER = {BUILD: 0, ATTACH: 1, UNARY: 2, SWAP: 3}

MAX_UNARY_CHAIN = 2


@dataclass(frozen=True)
class Action:
    kind: str
    label: str = ""
    side: str = ""

    @property
    def key(self) -> str:
        return self._key

    def __post_init__(self):
        object.__setattr__(self, "_key", ":".join(
            p for p in (self.kind, self.label, self.side) if p))
        object.__setattr__(self, "_order", (
            _KIND_ORDER[self.kind], self.label, self.side))

    def sort_key(self):
        return self._order


@dataclass(frozen=True)
class ParseNode:
    """One root of the working sequence; immutable so that score and
    feature caches can key on object state safely."""

    label: str
    is_phrase: bool
    children: tuple
    token_index: int
    head_token: int
    yield_set: frozenset
    min_orig: int
    unary_chain: int
    view: object


def terminal_node(token, tagclass=None, lexicon=None) -> ParseNode:
    return ParseNode(
        label=token.pos,
        is_phrase=False,
        children=(),
        token_index=token.index,
        head_token=token.index,
        yield_set=frozenset({token.index}),
        min_orig=token.index,
        unary_chain=0,
        view=make_terminal_view(token, tagclass, lexicon),
    )


def initial_state(tokens, tagclass=None, lexicon=None) -> list:
    return [terminal_node(t, tagclass, lexicon) for t in tokens]


class ActionInventory:
    """All action instances for a label set, in canonical order
    (BUILD < ATTACH < UNARY < SWAP, labels lexicographic, left < right)."""

    def __init__(self, labels):
        self.labels = tuple(sorted(set(labels)))
        self._build = {(lab, side): Action(BUILD, lab, side)
                       for lab in self.labels for side in (LEFT, RIGHT)}
        self.attach_left = Action(ATTACH, side=LEFT)
        self.attach_right = Action(ATTACH, side=RIGHT)
        self._unary = {lab: Action(UNARY, lab) for lab in self.labels}
        self.swap = Action(SWAP)
        self.pair_order = (
            [self._build[(lab, side)] for lab in self.labels for side in (LEFT, RIGHT)]
            + [self.attach_left, self.attach_right]
            + [self._unary[lab] for lab in self.labels]
            + [self.swap])

    def build(self, label, side) -> Action:
        return self._build[(label, side)]

    def unary(self, label) -> Action:
        return self._unary.get(label)

    def applicable(self, state, i) -> list:
        """Actions usable at position ``i``, canonical order preserved.
        A single-root state is terminal and offers nothing."""
        n = len(state)
        if n < 2:
            return []
        has_pair = i + 1 < n
        left = state[i]
        right = state[i + 1] if has_pair else None
        out = []
        for action in self.pair_order:
            if action.kind == BUILD:
                if has_pair:
                    out.append(action)
            elif action.kind == ATTACH:
                if has_pair and (right if action.side == LEFT else left).is_phrase:
                    out.append(action)
            elif action.kind == UNARY:
                if left.unary_chain < MAX_UNARY_CHAIN:
                    out.append(action)
            else:
                if has_pair and left.min_orig < right.min_orig:
                    out.append(action)
        return out


def label_inventory(trees) -> list:
    labels = set()
    for tree in trees:
        for node in tree.internal_nodes():
            labels.add(node.label)
    return sorted(labels)


def _surface_head(table, label, parts, tokens, lexicon, default_head):
    """Head token for a phrase over ``parts``, by table lookup over the
    surface-ordered child labels; the caller's default wins on a miss."""
    ordered = sorted(parts, key=lambda p: p.min_orig)
    k = table.find_head_child_or_none(label, [p.label for p in ordered])
    return ordered[k].head_token if k is not None else default_head


def apply_action(state, i, action, table, tokens, tagclass=None, lexicon=None) -> list:
    """Transition function; returns a fresh state list."""
    if action.kind == SWAP:
        if not state[i].min_orig < state[i + 1].min_orig:
            raise ValueError("swap guard violated")
        new = list(state)
        new[i], new[i + 1] = new[i + 1], new[i]
        return new

    if action.kind == UNARY:
        child = state[i]
        if child.unary_chain >= MAX_UNARY_CHAIN:
            raise ValueError("unary chain limit reached")
        node = _phrase(action.label, (child,), child.head_token,
                       child.unary_chain + 1, tokens, lexicon)
        new = list(state)
        new[i] = node
        return new

    left, right = state[i], state[i + 1]
    if action.kind == BUILD:
        default = (left if action.side == LEFT else right).head_token
        head = _surface_head(table, action.label, (left, right), tokens,
                             lexicon, default)
        node = _phrase(action.label, (left, right), head, 0, tokens, lexicon)
    else:
        absorber, absorbed = (right, left) if action.side == LEFT else (left, right)
        if not absorber.is_phrase:
            raise ValueError("attach target is not a constituent")
        parts = absorber.children + (absorbed,)
        head = _surface_head(table, absorber.label, parts, tokens, lexicon,
                             absorber.head_token)
        node = _phrase(absorber.label, parts, head, 0, tokens, lexicon)
    new = list(state)
    new[i:i + 2] = [node]
    return new


def _phrase(label, children, head_token, unary_chain, tokens, lexicon):
    yset = frozenset().union(*(c.yield_set for c in children))
    return ParseNode(
        label=label,
        is_phrase=True,
        children=tuple(children),
        token_index=-1,
        head_token=head_token,
        yield_set=yset,
        min_orig=min(c.min_orig for c in children),
        unary_chain=unary_chain,
        view=make_phrase_view(label, tokens[head_token], block_count(yset), lexicon),
    )


def state_to_tree(state, tokens, sent_id="") -> ConstTree:
    """Finish a state into a tree; leftover roots go under the fallback
    root label."""
    nodes = {}
    counter = [max(500, len(tokens))]

    def emit(pnode):
        if not pnode.is_phrase:
            return pnode.token_index
        nid = counter[0]
        counter[0] += 1
        refs = [emit(c) for c in pnode.children]
        nodes[nid] = Node(nid, pnode.label, refs, pnode.yield_set)
        return nid

    if len(state) == 1 and state[0].is_phrase:
        root_id = emit(state[0])
    else:
        refs = [emit(p) for p in state]
        root_id = counter[0]
        nodes[root_id] = Node(root_id, FALLBACK_ROOT, refs,
                              frozenset(range(len(tokens))))
    return ConstTree(list(tokens), nodes, root_id, sent_id=sent_id).validate()


# --------------------------------------------------------------- oracle

def linearize_gold(tree) -> list:
    """Token index -> rank in the projective order: DFS visiting children
    by minimal original token index.  Continuous trees get the identity."""
    order = []

    def visit(ref):
        if ref not in tree.nodes:
            order.append(ref)
            return
        for c in tree.children_sorted(tree.nodes[ref]):
            visit(c)

    visit(tree.root_id)
    proj = [0] * len(tree.tokens)
    for rank, tok in enumerate(order):
        proj[tok] = rank
    return proj


_COMPLETE = "c"
_PARTIAL = "p"


class GoldOracle:
    """Gold-action sets for states reached while parsing one gold tree.

    Parse items are matched to gold nodes bottom-up: a phrase item
    corresponds to the unique gold node under which its children sit at
    contiguous positions.  Matching is memoized by item identity, which
    is sound because items are immutable.
    """

    def __init__(self, gold, table, inventory):
        self.gold = gold
        self.table = table
        self.inventory = inventory
        self.proj = linearize_gold(gold)
        self.parent = {}
        self.pos = {}
        self.label = {}
        self.nchildren = {}
        for node in gold.internal_nodes():
            self.label[node.id] = node.label
            ordered = gold.children_sorted(node)
            self.nchildren[node.id] = len(ordered)
            for k, ref in enumerate(ordered):
                self.parent[ref] = node.id
                self.pos[ref] = k
        self._match = {}
        self._minproj = {}

    def match(self, item):
        # the memo pins the item: freed ids can be reused by new objects
        got = self._match.get(id(item))
        if got is not None and got[0] is item:
            return got[1]
        result = self._compute_match(item)
        self._match[id(item)] = (item, result)
        return result

    def _compute_match(self, item):
        if not item.is_phrase:
            return (_COMPLETE, item.token_index)
        refs = []
        for c in item.children:
            m = self.match(c)
            if m is None or m[0] != _COMPLETE:
                return None
            refs.append(m[1])
        parents = {self.parent.get(r) for r in refs}
        if len(parents) != 1:
            return None
        g = parents.pop()
        if g is None or self.label[g] != item.label:
            return None
        ks = sorted(self.pos[r] for r in refs)
        if ks != list(range(ks[0], ks[0] + len(ks))):
            return None
        if len(ks) == self.nchildren[g]:
            return (_COMPLETE, g)
        return (_PARTIAL, g, ks[0], ks[-1])

    def min_proj(self, item) -> int:
        got = self._minproj.get(id(item))
        if got is not None and got[0] is item:
            return got[1]
        rank = min(self.proj[t] for t in item.yield_set)
        self._minproj[id(item)] = (item, rank)
        return rank

    def gold_moves(self, state) -> set:
        """Set of (position, action) pairs that advance toward the gold
        tree.  Empty on a finished (single-root) state."""
        n = len(state)
        out = set()
        if n < 2:
            return out
        matches = [self.match(item) for item in state]
        partial_gold = {m[1] for m in matches if m is not None and m[0] == _PARTIAL}
        inv = self.inventory
        for i in range(n):
            mi = matches[i]
            if (mi is not None and mi[0] == _COMPLETE
                    and state[i].unary_chain < MAX_UNARY_CHAIN):
                g = self.parent.get(mi[1])
                if g is not None and self.nchildren[g] == 1:
                    action = inv.unary(self.label[g])
                    if action is not None:
                        out.add((i, action))
            if i + 1 >= n:
                continue
            mj = matches[i + 1]
            left, right = state[i], state[i + 1]
            if (left.min_orig < right.min_orig
                    and self.min_proj(left) > self.min_proj(right)):
                out.add((i, inv.swap))
            if mi is None or mj is None:
                continue
            if mi[0] == _COMPLETE and mj[0] == _COMPLETE:
                gi = self.parent.get(mi[1])
                gj = self.parent.get(mj[1])
                # one in-progress fragment per gold node, or two halves
                # could never be merged again
                if (gi is not None and gi == gj
                        and self.pos[mj[1]] == self.pos[mi[1]] + 1
                        and gi not in partial_gold):
                    lab = self.label[gi]
                    ordered = sorted((left, right), key=lambda p: p.min_orig)
                    k = self.table.find_head_child_or_none(
                        lab, [p.label for p in ordered])
                    side = LEFT if k is None or ordered[k] is left else RIGHT
                    out.add((i, inv.build(lab, side)))
            elif mi[0] == _COMPLETE and mj[0] == _PARTIAL:
                g = mj[1]
                if self.parent.get(mi[1]) == g and self.pos[mi[1]] == mj[2] - 1:
                    out.add((i, inv.attach_left))
            elif mi[0] == _PARTIAL and mj[0] == _COMPLETE:
                g = mi[1]
                if self.parent.get(mj[1]) == g and self.pos[mj[1]] == mi[3] + 1:
                    out.add((i, inv.attach_right))
        return out


def replay_gold(tree, table, rng=None, inventory=None):
    """Apply gold actions to exhaustion and return the rebuilt tree.

    ``rng`` picks among the gold set at random; without it the canonical
    (leftmost, action-order) choice is taken.
    """
    if inventory is None:
        inventory = ActionInventory(label_inventory([tree]))
    oracle = GoldOracle(tree, table, inventory)
    state = initial_state(tree.tokens)
    actions_taken = 0
    limit = 4 * len(tree.tokens) ** 2 + 64
    while True:
        moves = oracle.gold_moves(state)
        if not moves:
            break
        if actions_taken > limit:
            raise RuntimeError("gold replay exceeded the action budget")
        if rng is None:
            i, action = min(moves, key=lambda m: (m[0], m[1].sort_key()))
        else:
            i, action = rng.choice(sorted(moves, key=lambda m: (m[0], m[1].sort_key())))
        state = apply_action(state, i, action, table, tree.tokens)
        actions_taken += 1
    return state_to_tree(state, tree.tokens, sent_id=tree.sent_id), actions_taken


# ---------------------------------------------------------------- parser

class _PositionEntry:
    __slots__ = ("actions", "rows", "scores", "index_of")

    def __init__(self, actions, rows, scores):
        self.actions = actions
        self.rows = rows
        self.scores = scores
        self.index_of = {a.key: k for k, a in enumerate(actions)}


class EasyFirstParser:
    """Greedy decoder plus trainer around one weight store."""

    def __init__(self, store, feat_config, table, labels, tagclass=None,
                 lexicon=None, bigram_model=None):
        self.store = store
        self.table = table
        self.tagclass = tagclass
        self.lexicon = lexicon
        self.inventory = ActionInventory(labels)
        self.extractor = FeatureExtractor(feat_config, bigram_model)
        self._vec_cache = {}
        self._vec_cache_cap = 4_000_000

    # feature rows for all applicable actions at one position
    def _entry(self, state, views, i):
        actions = self.inventory.applicable(state, i)
        if not actions:
            return _PositionEntry((), None, np.empty(0))
        w = window(views, i)
        base = (w[-1], w[0], w[1], w[2])
        cache = self._vec_cache
        rows = [None] * len(actions)
        missing = []
        for k, action in enumerate(actions):
            row = cache.get((base, action.key))
            if row is None:
                missing.append(k)
            else:
                rows[k] = row
        if missing:
            if len(cache) > self._vec_cache_cap:
                cache.clear()
            got = self.extractor.extract_many(w, [actions[k].key for k in missing])
            for k, row in zip(missing, got):
                cache[(base, actions[k].key)] = row
                rows[k] = row
        matrix = np.stack(rows)
        return _PositionEntry(tuple(actions), matrix, self.store.score_rows(matrix))

    def _refresh(self, entries, state, views, lo, hi):
        for i in range(max(0, lo), min(len(state), hi)):
            entries[i] = None

    def _advance(self, entries, state, views, i, action):
        """Apply and splice the caches exactly like the state."""
        new_state = apply_action(state, i, action, self.table,
                                 self._tokens, self.tagclass, self.lexicon)
        if action.kind == SWAP:
            views[i], views[i + 1] = views[i + 1], views[i]
            entries[i], entries[i + 1] = entries[i + 1], entries[i]
            lo, hi = i - 2, i + 3
        elif action.kind == UNARY:
            views[i] = new_state[i].view
            lo, hi = i - 2, i + 2
        else:
            views[i:i + 2] = [new_state[i].view]
            entries[i:i + 2] = [None]
            lo, hi = i - 2, i + 2
        self._refresh(entries, new_state, views, lo, hi)
        return new_state

    def _decode(self, tokens, on_step=None):
        """Greedy loop.  ``on_step`` sees (state, entries, best) before
        each apply; it may return False to abandon the sentence or
        ("redirect", i, action) to override the argmax."""
        self._tokens = tokens
        state = initial_state(tokens, self.tagclass, self.lexicon)
        views = [n.view for n in state]
        entries = [None] * len(state)
        steps = 0
        limit = 4 * len(tokens) ** 2 + 64
        while len(state) > 1 and steps < limit:
            best = None  # (score, i, entry, k); strict > keeps the leftmost tie
            for i in range(len(state)):
                if entries[i] is None:
                    entries[i] = self._entry(state, views, i)
                entry = entries[i]
                if not entry.actions:
                    continue
                k = int(np.argmax(entry.scores))
                s = entry.scores[k]
                if best is None or s > best[0]:
                    best = (s, i, entry, k)
            if best is None:
                break
            verdict = True if on_step is None else on_step(state, entries, best)
            if verdict is False:
                break
            if verdict is True:
                _, i, entry, k = best
                state = self._advance(entries, state, views, i, entry.actions[k])
            else:
                _, gi, gaction = verdict
                state = self._advance(entries, state, views, gi, gaction)
            steps += 1
        return state, steps

    def parse_tokens(self, tokens, sent_id="") -> ConstTree:
        state, _ = self._decode(tokens, None)
        return state_to_tree(state, tokens, sent_id=sent_id)

    def parse_tree(self, tree) -> ConstTree:
        """Re-parse the terminals of a gold tree (evaluation helper)."""
        return self.parse_tokens(tree.tokens, sent_id=tree.sent_id)

    def train(self, trees, epochs=15, seed=42, epoch_hook=None,
              continue_after_error=False) -> dict:
        """Error-driven training with per-epoch reshuffling.

        Every sentence runs the greedy loop; while the argmax action is
        in the gold set it is applied, and the first error triggers one
        update against the best-scoring gold action.  By default the
        sentence is then abandoned.
        """
        if not trees:
            raise ValueError("empty training corpus")
        rng = random.Random(seed)
        order = list(range(len(trees)))
        stats = {"epochs": []}
        for epoch in range(epochs):
            rng.shuffle(order)
            updates = 0
            clean = 0
            for idx in order:
                tree = trees[idx]
                oracle = GoldOracle(tree, self.table, self.inventory)
                outcome = {"error": False}

                def on_step(state, entries, best, _oracle=oracle, _out=outcome):
                    moves = _oracle.gold_moves(state)
                    if not moves:
                        return False
                    _, i, entry, k = best
                    action = entry.actions[k]
                    if (i, action) in moves:
                        return True
                    _out["error"] = True
                    best_gold = None
                    for gi, gaction in sorted(
                            moves, key=lambda m: (m[0], m[1].sort_key())):
                        gentry = entries[gi]
                        gk = gentry.index_of.get(gaction.key)
                        if gk is None:
                            continue
                        gs = gentry.scores[gk]
                        if best_gold is None or gs > best_gold[0]:
                            best_gold = (gs, gentry.rows[gk])
                    if best_gold is not None:
                        self.store.update(entry.rows[k], best_gold[1])
                    if continue_after_error:
                        # steer back onto the gold path; drop all cached
                        # scores, the update just invalidated them
                        gi, gaction = min(
                            moves, key=lambda m: (m[0], m[1].sort_key()))
                        entries[:] = [None] * len(entries)
                        return ("redirect", gi, gaction)
                    return False

                self._decode(tree.tokens, on_step)
                if outcome["error"]:
                    updates += 1
                else:
                    clean += 1
            epoch_stats = {"epoch": epoch, "updates": updates, "clean": clean}
            stats["epochs"].append(epoch_stats)
            if epoch_hook is not None:
                epoch_hook(epoch, epoch_stats)
        return stats
