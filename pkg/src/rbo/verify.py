"""Self-check suites run by ``rbo verify``.

Every suite compares a fast path against a brute-force oracle or checks a
proven bound; each returns a ``SuiteResult``.  ``rev_bits`` is looked up on
the module at call time so a patched implementation is what gets checked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bitrev, nextslot
from .protocol.receiver import ProtocolConfig
from .search import run_reliable_trace
from .simulator import TrialConfig, run_trial

EXHAUSTIVE_CAP = 10
NEXT_SLOT_EXHAUSTIVE_CAP = 6
BOUNDS_EXHAUSTIVE_CAP = 8
FSM_EXHAUSTIVE_CAP = 4


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{mark} {self.name}: {self.checked} checks{extra}"


def _by_definition(k: int, x: int) -> int:
    return sum(((x >> (k - 1 - i)) & 1) << i for i in range(k))


def suite_rev_bits(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    rev = bitrev.rev_bits
    checked = 0
    for k in range(0, min(max_k, EXHAUSTIVE_CAP) + 1):
        n = 1 << k
        image = [rev(k, x) for x in range(n)]
        if sorted(image) != list(range(n)):
            return SuiteResult("rev_bits permutation", False, checked, f"not a bijection at k={k}")
        for x in range(n):
            checked += 1
            if rev(k, image[x]) != x:
                return SuiteResult("rev_bits permutation", False, checked, f"involution k={k} x={x}")
            if image[x] != _by_definition(k, x):
                return SuiteResult("rev_bits permutation", False, checked, f"definition k={k} x={x}")
            if k and image[x] != rev(k - 1, x >> 1) + ((x & 1) << (k - 1)):
                return SuiteResult("rev_bits permutation", False, checked, f"recurrence k={k} x={x}")
    for _ in range(samples):
        k = int(rng.integers(1, max_k + 1))
        x = int(rng.integers(1 << k))
        checked += 1
        if rev(k, x) != _by_definition(k, x) or rev(k, rev(k, x)) != x:
            return SuiteResult("rev_bits permutation", False, checked, f"k={k} x={x}")
    return SuiteResult("rev_bits permutation", True, checked)


def suite_min_max(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    rev = bitrev.rev_bits
    name = "min/max rev_bits oracle"
    checked = 0
    for k in range(0, min(max_k, EXHAUSTIVE_CAP) + 1):
        n = 1 << k
        image = [rev(k, x) for x in range(n)]
        for r1 in range(n):
            lo = hi = image[r1]
            for r2 in range(r1, n):
                lo = min(lo, image[r2])
                hi = max(hi, image[r2])
                checked += 1
                if bitrev.min_rev_bits(k, r1, r2) != lo or bitrev.max_rev_bits(k, r1, r2) != hi:
                    return SuiteResult(name, False, checked, f"k={k} [{r1},{r2}]")
    for _ in range(samples):
        k = int(rng.integers(1, max_k + 1))
        r1, r2 = sorted(int(v) for v in rng.integers(1 << k, size=2))
        if r2 - r1 > 4096:
            r2 = r1 + int(rng.integers(4097))
        image = [rev(k, x) for x in range(r1, r2 + 1)]
        checked += 1
        if bitrev.min_rev_bits(k, r1, r2) != min(image) or bitrev.max_rev_bits(k, r1, r2) != max(image):
            return SuiteResult(name, False, checked, f"k={k} [{r1},{r2}]")
    return SuiteResult(name, True, checked)


def _three_way(k: int, t: int, r1: int, r2: int) -> tuple[int, int, int]:
    return (
        nextslot.next_slot_naive(k, t, r1, r2),
        nextslot.next_slot_reverse(k, t, r1, r2),
        nextslot.next_slot_polylog(k, t, r1, r2),
    )


def _scan(k: int, t: int, r1: int, r2: int) -> int:
    n = 1 << k
    for d in range(1, n + 1):
        if r1 <= bitrev.rev_bits(k, (t + d) % n) <= r2:
            return (t + d) % n
    raise AssertionError("empty interval")


# widths beyond these bounds make naive (~n / w probes) or reverse (~w ranks) slow
WIDTH_SPAN = 1 << 13


def random_interval(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """Random ``[r1, r2]`` with log-uniform width in ``[n / 2**13, 2**13]``."""
    lo = max(1, n // WIDTH_SPAN)
    hi = min(n, WIDTH_SPAN)
    w = int(round(np.exp(rng.uniform(np.log(lo), np.log(hi))))) if hi > lo else lo
    w = min(max(w, lo), hi)
    r1 = int(rng.integers(n - w + 1))
    return r1, r1 + w - 1


def suite_next_slot(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    name = "next-slot naive = reverse = polylog"
    checked = 0
    for k in range(0, min(max_k, NEXT_SLOT_EXHAUSTIVE_CAP) + 1):
        n = 1 << k
        for r1 in range(n):
            for r2 in range(r1, n):
                for t in range(n):
                    checked += 1
                    a, b, c = _three_way(k, t, r1, r2)
                    if not a == b == c == _scan(k, t, r1, r2):
                        return SuiteResult(name, False, checked, f"k={k} t={t} [{r1},{r2}]")
    for _ in range(samples):
        k = int(rng.integers(1, max_k + 1))
        n = 1 << k
        t = int(rng.integers(n))
        r1, r2 = random_interval(n, rng)
        checked += 1
        a, b, c = _three_way(k, t, r1, r2)
        if not a == b == c:
            return SuiteResult(name, False, checked, f"k={k} t={t} [{r1},{r2}]")
        if nextslot.polylog_iterations(k, t, r1, r2) > max(k, 1):
            return SuiteResult(name, False, checked, f"iteration bound k={k} t={t} [{r1},{r2}]")
    return SuiteResult(name, True, checked)


def suite_bounds(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    name = "reception bound 2k+2 and time bound 2^k"
    checked = 0
    for k in range(1, min(max_k, BOUNDS_EXHAUSTIVE_CAP) + 1):
        n = 1 << k
        keys = [2 * r for r in range(n)]
        for gap in range(n + 1):
            for t0 in range(n):
                tr = run_reliable_trace(k, keys, 2 * gap - 1, t0)
                checked += 1
                if tr.receptions > 2 * k + 2 or tr.elapsed > n:
                    return SuiteResult(name, False, checked, f"k={k} t0={t0} gap={gap}")
    return SuiteResult(name, True, checked)


def suite_worst_case(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    name = "worst case needs exactly 2k-1 receptions"
    checked = 0
    for k in range(5, min(max_k, 12) + 1):
        n = 1 << k
        keys = [2 * r for r in range(n)]
        tr = run_reliable_trace(k, keys, 2 * (n // 2) + 1, 1)
        checked += 1
        if tr.receptions != 2 * k - 1:
            return SuiteResult(name, False, checked, f"k={k}: {tr.receptions}")
    return SuiteResult(name, True, checked, "" if checked else "needs max-k >= 5")


def suite_fsm(max_k: int, samples: int, rng: np.random.Generator) -> SuiteResult:
    name = "receiver state machine follows the reliable trace"
    exact = ProtocolConfig.for_slot_length(100, time_margin_ms=0, relative_margin_divisor=None)
    checked = 0
    for k in range(1, min(max_k, FSM_EXHAUSTIVE_CAP) + 1):
        n = 1 << k
        keys = [2 * r for r in range(n)]
        for gap in range(n + 1):
            for t0 in range(n):
                m = run_trial(TrialConfig(k=k, t0=t0, gap=gap, mode="fsm", protocol=exact))
                tr = run_reliable_trace(k, keys, 2 * gap - 1, t0)
                checked += 1
                if list(m.slots) != tr.slots:
                    return SuiteResult(name, False, checked, f"k={k} t0={t0} gap={gap}")
    return SuiteResult(name, True, checked)


SUITES: list[Callable[[int, int, np.random.Generator], SuiteResult]] = [
    suite_rev_bits,
    suite_min_max,
    suite_next_slot,
    suite_bounds,
    suite_worst_case,
    suite_fsm,
]


def run_all(max_k: int, samples: int, seed: int) -> list[SuiteResult]:
    results = []
    for suite in SUITES:
        rng = np.random.default_rng([seed, len(results)])
        try:
            results.append(suite(max_k, samples, rng))
        except Exception as exc:  # a crashing suite is a failing suite
            results.append(SuiteResult(suite.__name__, False, 0, f"{type(exc).__name__}: {exc}"))
    return results
