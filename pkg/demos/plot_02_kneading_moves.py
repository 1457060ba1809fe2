"""
Kneading words and moves
========================

Words in {0,1}^p ending in 0, partially ordered by (b, w), and the two
rewriting moves that climb towards 1^(p-1)0.
"""

from periodic_cubics import kneading

word = "0010"
print("max return time:", kneading.max_return_time(word))
print("order key:", kneading.order_key(word))

# %%
# Every word reaches the distinguished word by a chain of moves.
for edge in kneading.path_to_distinguished(word):
    print(edge)

# %%
# The move lemma, checked exhaustively for small p.
for p in range(2, 9):
    rep = kneading.verify_move_lemma(p)
    print(f"p={p}: {rep.words} words, longest chain {rep.max_chain} moves, bound {rep.bound}, ok={rep.ok}")
