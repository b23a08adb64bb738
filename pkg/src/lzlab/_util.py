"""Shared helpers: rational parsing, seed streams, logarithms of fractions."""

from __future__ import annotations

import hashlib
import math
import os
import json
from fractions import Fraction


def parse_rational(text) -> Fraction:
    """Parse "num/den" or plain integer strings into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def format_rational(fr: Fraction) -> str:
    return f"{fr.numerator}/{fr.denominator}"


def stream_seed(master_seed: int, name: str) -> int:
    """Derive a 64-bit seed for a named stream from one master seed.

    Adding a new named stream never perturbs existing ones.
    """
    digest = hashlib.sha256(f"{master_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def log2_fraction(fr: Fraction) -> float:
    """log2 of a positive Fraction, safe for values far outside float range."""
    if fr <= 0:
        raise ValueError("log2 of a non-positive value")
    num, den = fr.numerator, fr.denominator
    shift = num.bit_length() - den.bit_length()
    if shift > 0:
        den <<= shift
    else:
        num <<= -shift
    return shift + math.log2(num / den)


def neg_log2_ceil(fr: Fraction) -> int:
    """Exact ceil(-log2(fr)) for a Fraction in (0, 1]."""
    if fr <= 0:
        raise ValueError("value must be positive")
    num, den = fr.numerator, fr.denominator
    # smallest L with fr >= 2^-L, i.e. num * 2^L >= den
    low = max(0, den.bit_length() - num.bit_length() - 1)
    L = low
    while (num << L) < den:
        L += 1
    return L


def binary_entropy(p: Fraction) -> float:
    """h(p) in bits."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def write_atomic(path: str, data: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_json_atomic(path: str, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
