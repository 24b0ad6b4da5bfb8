"""
From notes to voice-leading types
=================================

A short chorale-like passage is cut into slices at every onset and each
slice is reduced to its interval classes above the bass plus the bass
motion from the previous slice.
"""
from fractions import Fraction as F

from vltskip import Corpus, NoteEvent, Piece, encode_notes, full_expand

# soprano sustains over a moving bass; the inner voices change on beat 2
notes = [
    NoteEvent(F(0), F(2), 72, 0.00),
    NoteEvent(F(0), F(1), 64, 0.00), NoteEvent(F(0), F(1), 67, 0.02),
    NoteEvent(F(0), F(1), 48, 0.01),
    NoteEvent(F(1), F(1), 65, 0.52), NoteEvent(F(1), F(1), 69, 0.50),
    NoteEvent(F(1), F(1), 53, 0.51),
    NoteEvent(F(2), F(1), 55, 1.03), NoteEvent(F(2), F(1), 67, 1.01),
    NoteEvent(F(2), F(1), 71, 1.00), NoteEvent(F(2), F(1), 74, 1.02),
    NoteEvent(F(2), F(1), 65, 1.02), NoteEvent(F(2), F(1), 69, 1.04),
    NoteEvent(F(3), F(1), 48, 1.55), NoteEvent(F(3), F(1), 64, 1.55),
    NoteEvent(F(3), F(1), 67, 1.54), NoteEvent(F(3), F(1), 72, 1.53),
]
piece = Piece("passage", "anon", tuple(notes))

for sl in full_expand(piece):
    print(f"onset {str(sl.onset_score):>4}  perf {sl.onset_perf:.2f}  pitches {sorted(sl.pitches)}")

# the V9 on beat 3 has four classes above G; the cascade keeps three of them
seq = encode_notes(Corpus((piece,)))[0]
print()
print("tokens:", " ".join(str(t) for t in seq.tokens))
print("replaced slices:", seq.replaced)
