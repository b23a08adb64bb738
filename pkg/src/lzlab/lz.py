"""Lempel-Ziv coders over binary words, block realization, and ratio accounting.

Two variants are implemented:

* ``LZ78Coder`` -- incremental parsing into phrases, each the shortest
  extension of a previously seen phrase.  The emitted pointer is the
  dictionary index by default (fixed width, tracking the dictionary size);
  an Elias-coded index and the raw (start, length) coordinate form are kept
  behind flags.
* ``LZWindowCoder`` -- greedy longest match against all previous symbols, or
  against the previous ``window`` symbols; the source start must lie in the
  window but the copy may overlap the current position.  Smallest offset
  wins among longest matches.

Every codeword is self-delimiting, so concatenated codewords decode
unambiguously (the separating property).
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .bitio import (
    MalformedInput,
    decode_int,
    encode_int,
    encode_int_len,
    read_self_delimited,
    self_delimit,
)
from .suffixauto import SuffixAutomaton


@dataclass(frozen=True)
class Phrase:
    """One parsed phrase: referenced dictionary entry plus one new symbol.

    ``ref_index`` is the dictionary index of the longest previously seen
    prefix (0 is the empty phrase); ``ref_start``/``ref_len`` locate that
    prefix's defining occurrence in the raw input; ``sym`` is None only for
    an incomplete final phrase.
    """

    ref_index: int
    ref_start: int
    ref_len: int
    sym: str | None


@dataclass
class PhraseParse:
    phrases: list[Phrase]
    covered_length: int

    def reconstruct(self) -> str:
        out: list[str] = []
        dictionary = [(0, 0)]  # (start, length) per index
        pos = 0
        for ph in self.phrases:
            start, ln = dictionary[ph.ref_index]
            content = "".join(out)[start : start + ln]
            if ph.sym is not None:
                content += ph.sym
                dictionary.append((pos, ln + 1))
            out.append(content)
            pos += len(content)
        return "".join(out)


def lz78_parse(x: str) -> PhraseParse:
    """Greedy leftmost incremental parse; final phrase may be incomplete."""
    index_of: dict[str, int] = {"": 0}
    meta: list[tuple[int, int]] = [(0, 0)]  # (start, length) per index
    phrases: list[Phrase] = []
    current = ""
    cur_idx = 0
    pos = 0
    start_of_phrase = 0
    for ch in x:
        candidate = current + ch
        idx = index_of.get(candidate)
        pos += 1
        if idx is not None:
            current = candidate
            cur_idx = idx
            continue
        ref_start, ref_len = meta[cur_idx]
        phrases.append(Phrase(cur_idx, ref_start, ref_len, ch))
        index_of[candidate] = len(meta)
        meta.append((start_of_phrase, len(candidate)))
        current = ""
        cur_idx = 0
        start_of_phrase = pos
    if current:
        ref_start, ref_len = meta[cur_idx]
        phrases.append(Phrase(cur_idx, ref_start, ref_len, None))
    return PhraseParse(phrases, len(x))


def _fixed_width(k: int) -> int:
    """Index field width for phrase number k (1-based): indices 0..k-1."""
    return (k - 1).bit_length()


class LZ78Coder:
    """Variant-1 coder.  pointer: "index" (default) or "coordinate";
    index_code: "fixed" (default) or "elias"."""

    def __init__(self, pointer: str = "index", index_code: str = "fixed"):
        if pointer not in ("index", "coordinate"):
            raise ValueError("pointer must be 'index' or 'coordinate'")
        if index_code not in ("fixed", "elias"):
            raise ValueError("index_code must be 'fixed' or 'elias'")
        self.pointer = pointer
        self.index_code = index_code
        self.name = "lz78"

    def _phrase_bits(self, ph: Phrase, k: int) -> str:
        if self.pointer == "coordinate":
            out = encode_int(ph.ref_start + 1) + encode_int(ph.ref_len + 1)
        elif self.index_code == "elias":
            out = encode_int(ph.ref_index + 1)
        else:
            w = _fixed_width(k)
            out = format(ph.ref_index, f"0{w}b") if w else ""
        if ph.sym is not None:
            out += ph.sym
        return out

    def encode(self, x: str) -> str:
        parse = lz78_parse(x)
        parts = []
        for k, ph in enumerate(parse.phrases, start=1):
            parts.append(self._phrase_bits(ph, k))
        return self_delimit("".join(parts))

    def decode(self, bits: str, pos: int = 0) -> tuple[str, int]:
        payload, used = read_self_delimited(bits, pos)
        out: list[str] = []
        meta: list[tuple[int, int]] = [(0, 0)]
        text_len = 0
        p = 0
        k = 1
        n = len(payload)
        while p < n:
            if self.pointer == "coordinate":
                start, u = decode_int(payload, p)
                p += u
                ln, u = decode_int(payload, p)
                p += u
                start, ln = start - 1, ln - 1
            else:
                if self.index_code == "elias":
                    idx, u = decode_int(payload, p)
                    p += u
                    idx -= 1
                else:
                    w = _fixed_width(k)
                    if p + w > n:
                        raise MalformedInput("truncated index field")
                    idx = int(payload[p : p + w], 2) if w else 0
                    p += w
                if idx >= k:
                    raise MalformedInput("phrase index out of range")
                start, ln = meta[idx]
            text = "".join(out)
            if start + ln > len(text):
                raise MalformedInput("phrase coordinate out of range")
            content = text[start : start + ln]
            if p < n:
                content += payload[p]
                p += 1
                meta.append((text_len, ln + 1))
                k += 1
            out.append(content)
            text_len += len(content)
        return "".join(out), used

    def prefix_bits(self, x: str, positions: list[int]) -> list[int]:
        """Exact codeword length of every prefix x[:n] in one parse pass."""
        want = sorted(set(positions))
        results: dict[int, int] = {}
        if not want:
            return []
        index_of: dict[str, int] = {"": 0}
        meta: list[tuple[int, int]] = [(0, 0)]
        payload = 0
        current = ""
        cur_idx = 0
        start_of_phrase = 0
        k = 1
        wi = 0

        def pending_cost() -> int:
            if not current:
                return 0
            if self.pointer == "coordinate":
                s, ln = meta[cur_idx]
                return encode_int_len(s + 1) + encode_int_len(ln + 1)
            if self.index_code == "elias":
                return encode_int_len(cur_idx + 1)
            return _fixed_width(k)

        for pos, ch in enumerate(x):
            while wi < len(want) and want[wi] == pos:
                pl = payload + pending_cost()
                results[pos] = encode_int_len(pl + 1) + pl
                wi += 1
            candidate = current + ch
            idx = index_of.get(candidate)
            if idx is not None:
                current = candidate
                cur_idx = idx
                continue
            s, ln = meta[cur_idx]
            if self.pointer == "coordinate":
                payload += encode_int_len(s + 1) + encode_int_len(ln + 1) + 1
            elif self.index_code == "elias":
                payload += encode_int_len(cur_idx + 1) + 1
            else:
                payload += _fixed_width(k) + 1
            index_of[candidate] = len(meta)
            meta.append((start_of_phrase, len(candidate)))
            k += 1
            current = ""
            cur_idx = 0
            start_of_phrase = pos + 1
        while wi < len(want):
            pl = payload + pending_cost()
            results[want[wi]] = encode_int_len(pl + 1) + pl
            wi += 1
        return [results[n] for n in positions]


class LZWindowCoder:
    """Variant-2 coder: (offset, length, next symbol) triples via encode_int."""

    def __init__(self, window: int | None = None):
        if window is not None and window < 1:
            raise ValueError("window must be >= 1 or None for unbounded")
        self.window = window
        self.name = "lzwin" if window is None else f"lzwin{window}"

    def _longest_match(self, x: str, i: int, limit: int, sam) -> tuple[int, int]:
        """Return (L, source) of the longest match, smallest offset on ties."""
        if self.window is None:
            L = sam.longest_match_before(x, i, limit)
            if L == 0:
                return 0, -1
            return L, x.rfind(x[i : i + L], 0, i + L - 1)
        lo = max(0, i - self.window)
        # gallop then binary search: matchability is monotone in L
        ok = 0
        step = 1
        while ok + step <= limit and x.rfind(x[i : i + ok + step], lo, i + ok + step - 1) != -1:
            ok += step
            step *= 2
        lo_L, hi_L = ok, min(limit, ok + step)
        while lo_L < hi_L:
            mid = (lo_L + hi_L + 1) // 2
            if x.rfind(x[i : i + mid], lo, i + mid - 1) != -1:
                lo_L = mid
            else:
                hi_L = mid - 1
        L = lo_L
        if L == 0:
            return 0, -1
        return L, x.rfind(x[i : i + L], lo, i + L - 1)

    def _parse(self, x: str) -> list[tuple[int, int, int, bool]]:
        """List of (start, match_len, source, has_symbol)."""
        n = len(x)
        sam = SuffixAutomaton(x) if self.window is None else None
        phrases = []
        i = 0
        while i < n:
            L, src = self._longest_match(x, i, n - i, sam)
            has_sym = i + L < n
            phrases.append((i, L, src, has_sym))
            i += L + (1 if has_sym else 0)
        return phrases

    @staticmethod
    def _triple_bits(i: int, L: int, src: int, sym: str | None) -> str:
        if L == 0:
            out = encode_int(1) + encode_int(1)
        else:
            out = encode_int(i - src) + encode_int(L + 1)
        if sym is not None:
            out += sym
        return out

    def encode(self, x: str) -> str:
        parts = [
            self._triple_bits(i, L, src, x[i + L] if has_sym else None)
            for i, L, src, has_sym in self._parse(x)
        ]
        return self_delimit("".join(parts))

    def decode(self, bits: str, pos: int = 0) -> tuple[str, int]:
        payload, used = read_self_delimited(bits, pos)
        out: list[str] = []
        p = 0
        n = len(payload)
        while p < n:
            offset, u = decode_int(payload, p)
            p += u
            lenfield, u = decode_int(payload, p)
            p += u
            L = lenfield - 1
            if L > 0:
                srcpos = len(out) - offset
                if srcpos < 0:
                    raise MalformedInput("window offset before stream start")
                for t in range(L):
                    out.append(out[srcpos + t])
            if p < n:
                out.append(payload[p])
                p += 1
        return "".join(out), used

    def prefix_bits(self, x: str, positions: list[int]) -> list[int]:
        """Exact codeword length of every prefix; one parse plus one rfind
        per checkpoint that truncates a phrase."""
        phrases = self._parse(x)
        # cumulative payload bits after each phrase
        cum = [0]
        for i, L, src, has_sym in phrases:
            cum.append(cum[-1] + len(self._triple_bits(i, L, src, "0" if has_sym else None)))
        starts = [ph[0] for ph in phrases]
        results = []
        for n in positions:
            if n == 0:
                pl = 0
            else:
                j = bisect.bisect_right(starts, n - 1) - 1
                i, L, src, has_sym = phrases[j]
                pl = cum[j]
                covered = i + L + (1 if has_sym else 0)
                if n >= covered:
                    pl = cum[j + 1]
                else:
                    Lp = n - i
                    if Lp > 0:
                        lo = 0 if self.window is None else max(0, i - self.window)
                        srcp = x.rfind(x[i : i + Lp], lo, i + Lp - 1)
                        pl += len(self._triple_bits(i, Lp, srcp, None))
            results.append(encode_int_len(pl + 1) + pl)
        return results


class BlockCoder:
    """Block realization: inner coder per full block, final tail raw.

    Framing: each full block is '0' ++ inner codeword; the stream ends with
    '1' ++ self_delimit(tail).  The flag bit makes concatenations decodable.
    """

    def __init__(self, block_len: int, inner=None):
        if block_len < 1:
            raise ValueError("block length must be >= 1")
        self.block_len = block_len
        self.inner = inner if inner is not None else LZ78Coder()
        self.name = f"block{block_len}-{self.inner.name}"

    def encode(self, x: str) -> str:
        N = self.block_len
        parts = []
        full = len(x) // N
        for j in range(full):
            parts.append("0" + self.inner.encode(x[j * N : (j + 1) * N]))
        parts.append("1" + self_delimit(x[full * N :]))
        return "".join(parts)

    def decode(self, bits: str, pos: int = 0) -> tuple[str, int]:
        out = []
        p = pos
        while True:
            if p >= len(bits):
                raise MalformedInput("block stream ended without tail marker")
            flag = bits[p]
            p += 1
            if flag == "0":
                word, used = self.inner.decode(bits, p)
                if len(word) != self.block_len:
                    raise MalformedInput("inner block decoded to wrong length")
                out.append(word)
                p += used
            else:
                tail, used = read_self_delimited(bits, p)
                p += used
                out.append(tail)
                return "".join(out), p - pos

    def prefix_bits(self, x: str, positions: list[int]) -> list[int]:
        N = self.block_len
        total = 0
        cum = [0]
        for j in range(len(x) // N):
            total += 1 + len(self.inner.encode(x[j * N : (j + 1) * N]))
            cum.append(total)
        results = []
        for n in positions:
            full = n // N
            tail = n - full * N
            results.append(cum[full] + 1 + encode_int_len(tail + 1) + tail)
        return results


class VerbatimCoder:
    """Test double: 64-bit length header followed by the word itself."""

    name = "verbatim"

    def encode(self, x: str) -> str:
        return format(len(x), "064b") + x

    def decode(self, bits: str, pos: int = 0) -> tuple[str, int]:
        if pos + 64 > len(bits):
            raise MalformedInput("truncated header")
        n = int(bits[pos : pos + 64], 2)
        if pos + 64 + n > len(bits):
            raise MalformedInput("truncated payload")
        return bits[pos + 64 : pos + 64 + n], 64 + n


@dataclass
class RatioCurve:
    coder: str
    points: list[tuple[int, int, Fraction]] = field(default_factory=list)

    def ratios(self) -> list[Fraction]:
        return [r for _, _, r in self.points]


def compression_ratio(coder, x: str) -> Fraction:
    """Codeword bits over input symbols (log2 alphabet = 1 for binary)."""
    if not x:
        raise ValueError("compression ratio undefined for empty input")
    return Fraction(len(coder.encode(x)), len(x))


def ratio_curve(coder, x: str, stride: int) -> RatioCurve:
    """Ratio of every prefix whose length is a multiple of stride."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    ns = list(range(stride, len(x) + 1, stride))
    curve = RatioCurve(coder=getattr(coder, "name", coder.__class__.__name__))
    if not ns:
        return curve
    if hasattr(coder, "prefix_bits"):
        lens = coder.prefix_bits(x, ns)
    else:
        lens = [len(coder.encode(x[:n])) for n in ns]
    curve.points = [(n, ln, Fraction(ln, n)) for n, ln in zip(ns, lens)]
    return curve


@dataclass
class DecodabilityReport:
    coder: str
    pairs_checked: int
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def decodability_check(coder, pairs: int = 1000, seed: int = 0, max_len: int = 64) -> DecodabilityReport:
    """Separating property: encode(x)++encode(y) must decode to x then y."""
    rng = random.Random(seed)
    report = DecodabilityReport(coder=getattr(coder, "name", "coder"), pairs_checked=0)

    def check(x: str, y: str) -> None:
        report.pairs_checked += 1
        stream = coder.encode(x) + coder.encode(y) + "1011"
        try:
            got_x, used_x = coder.decode(stream)
            got_y, used_y = coder.decode(stream, used_x)
        except MalformedInput as exc:
            report.failures.append((x, y, f"decode error: {exc}"))
            return
        if got_x != x or got_y != y:
            report.failures.append((x, y, "mismatch"))

    for _ in range(pairs):
        nx = rng.randrange(0, max_len + 1)
        ny = rng.randrange(0, max_len + 1)
        x = "".join(rng.choice("01") for _ in range(nx))
        y = "".join(rng.choice("01") for _ in range(ny))
        check(x, y)
    word = "".join(rng.choice("01") for _ in range(max_len))
    check(word, word[: max_len // 2])
    check("", word)
    return report
