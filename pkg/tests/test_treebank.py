import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discoparse import synthdata
from discoparse.treebank import (
    AlignmentError,
    ConstTree,
    DepSentence,
    FormatError,
    Token,
    align,
    block_count,
    discbracket_line,
    read_conll,
    read_discbracket,
    read_export,
    write_conll,
    write_discbracket,
    write_export,
)

EXPORT_V4 = """\
#BOS 1
a\tla\tX\t--\t--\t500
b\tlb\tY\t--\t--\t501
c\tlc\tX\tcase=acc\t--\t500
#500\t--\tVP\t--\t--\t502
#501\t--\tNP\t--\t--\t502
#502\t--\tS\t--\t--\t0
#EOS 1
"""

EXPORT_V3 = """\
#BOS 7
a\tX\t--\t--\t500
b\tY\t--\t--\t501
c\tX\t--\t--\t500
#500\t--\tVP\t--\t500:501\t502
#501\t--\tNP\t--\t--\t502
#502\t--\tS\t--\t--\t0
#EOS 7
"""


def roundtrip_export(trees):
    buf = io.StringIO()
    write_export(trees, buf)
    return read_export(io.StringIO(buf.getvalue()), strict=True)


def roundtrip_discbracket(trees):
    buf = io.StringIO()
    write_discbracket(trees, buf)
    return read_discbracket(io.StringIO(buf.getvalue()), strict=True)


def test_export_discontinuous_yields():
    (tree,) = read_export(io.StringIO(EXPORT_V4), strict=True)
    assert [t.form for t in tree.tokens] == ["a", "b", "c"]
    assert tree.tokens[0].lemma == "la"
    assert tree.tokens[2].morph == "case=acc"
    by_label = {node.label: node for node in tree.internal_nodes()}
    assert by_label["VP"].leaves == frozenset({0, 2})
    assert by_label["S"].leaves == frozenset({0, 1, 2})
    assert tree.block_degree(by_label["VP"].id) == 2


def test_export_v3_detected_by_column_parity():
    # secondary edge on the first #500 line keeps the parity odd
    (tree,) = read_export(io.StringIO(EXPORT_V3), strict=True)
    assert tree.tokens[0].lemma == ""
    by_label = {node.label: node for node in tree.internal_nodes()}
    assert by_label["VP"].leaves == frozenset({0, 2})


def test_export_block_degree_three():
    # a phrase whose material is interrupted twice has three blocks
    tree = synthdata.build_tree(
        [("w%d" % i, "T") for i in range(7)],
        ("S", [("VP", [0, 1, ("NP", [3]), 5]), ("X", [2]), ("Y", [4]), ("Z", [6])]),
    )
    vp = next(n for n in tree.internal_nodes() if n.label == "VP")
    assert tree.block_degree(vp.id) == 3


def test_export_dangling_parent():
    bad = EXPORT_V4.replace("#501\t--\tNP\t--\t--\t502", "#501\t--\tNP\t--\t--\t999")
    with pytest.raises(FormatError, match="dangling"):
        read_export(io.StringIO(bad), strict=True)
    assert read_export(io.StringIO(bad)) == []


def test_export_bos_eos_mismatch():
    bad = EXPORT_V4.replace("#EOS 1", "#EOS 2")
    with pytest.raises(FormatError, match="does not match"):
        read_export(io.StringIO(bad), strict=True)


def test_export_cycle():
    bad = "\n".join([
        "#BOS 1",
        "a\tla\tX\t--\t--\t500",
        "#500\t--\tVP\t--\t--\t501",
        "#501\t--\tNP\t--\t--\t500",
        "#EOS 1",
    ]) + "\n"
    with pytest.raises(FormatError, match="cycle"):
        read_export(io.StringIO(bad), strict=True)


def test_export_multiple_top_items_get_root():
    text = "\n".join([
        "#BOS 1",
        "a\tla\tX\t--\t--\t500",
        "b\tlb\tY\t--\t--\t0",
        "#500\t--\tNP\t--\t--\t0",
        "#EOS 1",
    ]) + "\n"
    (tree,) = read_export(io.StringIO(text), strict=True)
    assert tree.root.label == "VROOT"
    assert tree.root.leaves == frozenset({0, 1})
    (back,) = roundtrip_export([tree])
    assert back == tree


def test_export_roundtrip_random():
    rng = random.Random(101)
    trees = [synthdata.random_tree(rng) for _ in range(100)]
    assert roundtrip_export(trees) == trees


def test_discbracket_basic():
    (tree,) = read_discbracket(io.StringIO("(S (VP 0=x 2=z) (N 1=y))"), strict=True)
    vp = next(n for n in tree.internal_nodes() if n.label == "VP")
    assert vp.leaves == frozenset({0, 2})
    assert tree.block_degree(vp.id) == 2
    # N has a single terminal child, so it is token 1's tag
    assert tree.tokens[1].pos == "N"
    assert {n.label for n in tree.internal_nodes()} == {"S", "VP"}


def test_discbracket_preterminals():
    (tree,) = read_discbracket(io.StringIO("(S (A 0=a) (B 1=b))"), strict=True)
    assert tree.root.leaves == frozenset({0, 1})
    assert [t.pos for t in tree.tokens] == ["A", "B"]
    assert list(tree.nodes) == [tree.root_id]


def test_discbracket_errors():
    for text, what in [
        ("(S (A 0=a) (B 1=b)", "unbalanced"),
        ("(S (A 0=a) (B 3=b))", "missing terminal index"),
        ("(S (A 0=a) (B 0=b))", "duplicate terminal"),
        ("(S (A 0=a) (B b))", "lacks an index"),
    ]:
        with pytest.raises(FormatError, match=what):
            read_discbracket(io.StringIO(text), strict=True)


def test_discbracket_roundtrip_random():
    rng = random.Random(202)
    trees = [synthdata.random_tree(rng, rich_tokens=False) for _ in range(100)]
    assert roundtrip_discbracket(trees) == trees


def test_discbracket_escapes_parens():
    tree = synthdata.build_tree([("(", "$("), ("x", "NN")], ("S", [0, 1]))
    line = discbracket_line(tree)
    assert "-LRB-" in line
    (back,) = read_discbracket(io.StringIO(line), strict=True)
    assert back.tokens[0].form == "("


def test_conll_two_token_example():
    text = "1\ta\t_\tD\tDT\t_\t2\tdet\t_\t_\n2\tb\t_\tN\tNN\t_\t0\troot\t_\t_\n\n"
    (sent,) = read_conll(io.StringIO(text), strict=True)
    assert sent.heads == [2, 0]
    assert sent.tokens[0].pos == "DT"
    assert sent.tokens[0].cpos == "D"
    assert sent.deprels == ["det", "root"]


def test_conll_cycle_rejected():
    text = "1\ta\t_\t_\tX\t_\t2\tdep\t_\t_\n2\tb\t_\t_\tX\t_\t1\tdep\t_\t_\n\n"
    with pytest.raises(FormatError, match="not a tree"):
        read_conll(io.StringIO(text), strict=True)
    assert read_conll(io.StringIO(text)) == []


def test_conll_bad_head_value():
    text = "1\ta\t_\t_\tX\t_\tx\tdep\t_\t_\n\n"
    with pytest.raises(FormatError, match="non-integer head"):
        read_conll(io.StringIO(text), strict=True)


def test_conll_roundtrip_byte_identical_mandatory_columns():
    rng = random.Random(303)
    sentences = [synthdata.random_dep_sentence(rng) for _ in range(10_000)]
    buf = io.StringIO()
    write_conll(sentences, buf)
    first = buf.getvalue()
    back = read_conll(io.StringIO(first), strict=True)
    buf2 = io.StringIO()
    write_conll(back, buf2)
    assert buf2.getvalue() == first
    for line in first.splitlines():
        if line:
            assert len(line.split("\t")) == 10


def test_align_ok_and_mismatch():
    rng = random.Random(404)
    tree, dep = synthdata.toy_sentence(rng, "extra")
    corpus = align([tree], [dep])
    assert len(corpus) == 1
    bad = DepSentence(
        [Token(index=t.index, form=t.form + "x", pos=t.pos) for t in dep.tokens],
        dep.heads, dep.deprels)
    with pytest.raises(AlignmentError, match="sentence 0, token 0"):
        align([tree], [bad])
    with pytest.raises(AlignmentError, match="count mismatch"):
        align([tree], [])
    assert len(align([], [])) == 0


def test_validate_rejects_overlapping_children():
    from discoparse.treebank import Node
    tokens = [Token(index=0, form="a"), Token(index=1, form="b")]
    nodes = {
        500: Node(500, "X", [0, 1], frozenset({0, 1})),
        501: Node(501, "Y", [1], frozenset({1})),
        502: Node(502, "S", [500, 501], frozenset({0, 1})),
    }
    with pytest.raises(FormatError):
        ConstTree(tokens, nodes, 502).validate()


@given(st.sets(st.integers(min_value=0, max_value=60), min_size=1))
def test_block_count_matches_gap_count(indices):
    ordered = sorted(indices)
    gaps = sum(1 for a, b in zip(ordered, ordered[1:]) if b > a + 1)
    assert block_count(indices) == gaps + 1


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_roundtrips_on_arbitrary_seeds(seed):
    rng = random.Random(seed)
    tree = synthdata.random_tree(rng)
    assert roundtrip_export([tree]) == [tree]
    plain = synthdata.random_tree(rng, rich_tokens=False)
    assert roundtrip_discbracket([plain]) == [plain]
