import pytest

from periodic_cubics.kneading import (MoveEdge, all_words, check_word, distinguished, is_terminal,
                                      max_return_time, order_key, path_to_distinguished,
                                      type_a_successors, type_b_successors, verify_move_lemma)


@pytest.mark.parametrize("word, mu", [("000", 1), ("110", 3), ("0100", 2), ("10", 2)])
def test_max_return_time(word, mu):
    assert max_return_time(word) == mu


@pytest.mark.parametrize("word, key", [("000", (0, 0)), ("1010", (2, 2)), ("110", (3, 2))])
def test_order_key(word, key):
    assert order_key(word) == key


@pytest.mark.parametrize("word, want", [("1010", {"0100", "0110"}), ("000", {"100", "110"}), ("110", set())])
def test_type_a(word, want):
    assert type_a_successors(word) == want


def test_type_b():
    assert type_b_successors("0110") == {MoveEdge("0110", "1110", "B", 1)}
    assert type_b_successors("0010") == {MoveEdge("0010", "0110", "B", 2)}
    assert type_b_successors("110") == set()


def test_paths():
    path = path_to_distinguished("0010")
    assert [(e.source, e.target, e.kind) for e in path] == [("0010", "0110", "B"), ("0110", "1110", "B")]
    path = path_to_distinguished("000")
    assert [(e.source, e.target, e.kind) for e in path] == [("000", "110", "A")]
    assert path_to_distinguished("110") == []


@pytest.mark.parametrize("p", range(2, 8))
def test_every_word_reaches_distinguished(p):
    goal = distinguished(p)
    for w in all_words(p):
        path = path_to_distinguished(w)
        node = w
        for e in path:
            assert e.source == node
            assert order_key(e.target) > order_key(e.source)
            node = e.target
        assert node == goal
        assert is_terminal(w) == (w == goal)


def test_move_lemma_small():
    rep = verify_move_lemma(2)
    assert (rep.max_chain, rep.bound, rep.ok) == (1, 6, True)
    rep = verify_move_lemma(3)
    assert rep.ok and rep.max_chain <= 12
    assert verify_move_lemma(4).ok


def test_words_are_checked():
    for bad in ("", "1", "011", "0a0"):
        with pytest.raises(ValueError):
            check_word(bad)
    assert sorted(all_words(3)) == ["000", "010", "100", "110"]
