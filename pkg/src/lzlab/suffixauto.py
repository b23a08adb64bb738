"""Suffix automaton over a binary word, used for exact longest-match parsing.

Built once over the whole input; ``first_end[state]`` is the end position
(0-indexed, inclusive) of the first occurrence of every substring in that
state's class, which is what the match-existence test needs.
"""

from __future__ import annotations

from array import array


class SuffixAutomaton:
    __slots__ = ("t0", "t1", "link", "length", "first_end", "last", "_size")

    def __init__(self, text: str):
        cap = 2 * max(1, len(text)) + 4
        self.t0 = array("l", [-1]) * cap
        self.t1 = array("l", [-1]) * cap
        self.link = array("l", [-1]) * cap
        self.length = array("l", [0]) * cap
        self.first_end = array("l", [-1]) * cap
        self._size = 1
        self.last = 0
        for i, ch in enumerate(text):
            self._extend(1 if ch == "1" else 0, i)

    @property
    def size(self) -> int:
        return self._size

    def _new_state(self, length: int, first_end: int) -> int:
        idx = self._size
        self._size += 1
        self.length[idx] = length
        self.first_end[idx] = first_end
        return idx

    def _extend(self, c: int, pos: int) -> None:
        trans = self.t1 if c else self.t0
        link = self.link
        length = self.length
        cur = self._new_state(pos + 1, pos)
        p = self.last
        while p != -1 and trans[p] == -1:
            trans[p] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
        else:
            q = trans[p]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                # clone keeps q's first occurrence: the strings moved into the
                # clone shared q's endpos set before this extension
                clone = self._new_state(length[p] + 1, self.first_end[q])
                self.t0[clone] = self.t0[q]
                self.t1[clone] = self.t1[q]
                link[clone] = link[q]
                link[q] = clone
                link[cur] = clone
                while p != -1 and trans[p] == q:
                    trans[p] = clone
                    p = link[p]
        self.last = cur

    def longest_match_before(self, text: str, i: int, limit: int) -> int:
        """Longest L <= limit with text[i:i+L] occurring at some start < i.

        Overlapping occurrences count: only the occurrence *start* must lie
        strictly before i.
        """
        t0, t1, first_end = self.t0, self.t1, self.first_end
        state = 0
        L = 0
        while L < limit:
            c = text[i + L]
            nxt = t1[state] if c == "1" else t0[state]
            if nxt == -1 or first_end[nxt] > i + L - 1:
                break
            state = nxt
            L += 1
        return L
