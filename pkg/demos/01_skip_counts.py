"""
How many n-grams does a skip budget admit?
==========================================

Five chords a..e. Contiguous pairs are ab, bc, cd, de; every extra skip
lets more distant pairs in, until all C(5, 2) pairs are counted.
"""
from math import comb

from vltskip import Vlt, VltSequence, count_fixed_closed_form, fixed_skip_ngrams

names = "abcde"
tokens = tuple(Vlt((4, 7), None if j == 0 else 5) for j in range(5))
seq = VltSequence("five", tokens, (None,) * 5)

for t in range(4):
    pairs = ["".join(names[j] for j in tok.indices) for tok in fixed_skip_ngrams(seq, 2, t)]
    print(f"t={t}: {len(pairs):2d} tokens  {' '.join(pairs)}")

# the closed form agrees with enumeration, and the budget saturates at C(k, n)
print()
print(" k   n   t   closed form   C(k,n)")
for k, n, t in [(5, 2, 3), (20, 3, 0), (20, 3, 4), (20, 3, 17), (1000, 4, 4)]:
    print(f"{k:4d} {n:2d} {t:3d} {count_fixed_closed_form(k, n, t):12d} {comb(k, n):9d}")
