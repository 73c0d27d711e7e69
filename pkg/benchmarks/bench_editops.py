"""Compare the compiled edit-distance kernel against the pure-Python one.

Runs the same seeded workload through docstruct._editops (if the
extension was built) and docstruct._editops_py, checks they agree on
every pair, and reports throughput. Workload sizes mirror evidence
alignment: short patterns searched inside paragraph-sized text.

Usage: python3 benchmarks/bench_editops.py [--pairs N] [--repeat K]
"""

from __future__ import annotations

import argparse
import random
import string
import time

from docstruct import _editops_py

try:
    from docstruct import _editops
except ImportError:
    _editops = None


def _corpus(rng: random.Random, pairs: int) -> list[tuple[str, str, int]]:
    alphabet = string.ascii_lowercase + "     "
    out = []
    for _ in range(pairs):
        pattern = "".join(rng.choices(alphabet, k=rng.randint(30, 90)))
        text = "".join(rng.choices(alphabet, k=rng.randint(300, 700)))
        # plant a mutated copy in half the texts so hits and misses both occur
        if rng.random() < 0.5:
            mutated = list(pattern)
            for _ in range(rng.randint(0, 6)):
                mutated[rng.randrange(len(mutated))] = rng.choice(alphabet)
            at = rng.randrange(len(text))
            text = text[:at] + "".join(mutated) + text[at:]
        out.append((pattern, text, max(3, len(pattern) // 5)))
    return out


def _time(fn, work, repeat: int) -> tuple[float, list[int]]:
    best = float("inf")
    results: list[int] = []
    for _ in range(repeat):
        started = time.perf_counter()
        results = [fn(p, t, limit) for p, t, limit in work]
        best = min(best, time.perf_counter() - started)
    return best, results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=400)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    work = _corpus(rng, args.pairs)
    # similar-length pairs so the distance table actually runs
    lev_work = []
    for pattern, _, limit in work:
        other = list(pattern)
        for _ in range(rng.randint(0, limit + 3)):
            other[rng.randrange(len(other))] = rng.choice(string.ascii_lowercase)
        lev_work.append((pattern, "".join(other), limit))

    rows = []
    for name, kernel_levenshtein, kernel_substring in (
        ("pure", _editops_py.levenshtein, _editops_py.substring_distance),
        *(
            [("compiled", _editops.levenshtein, _editops.substring_distance)]
            if _editops is not None
            else []
        ),
    ):
        t_lev, r_lev = _time(kernel_levenshtein, lev_work, args.repeat)
        t_sub, r_sub = _time(kernel_substring, work, args.repeat)
        rows.append((name, t_lev, t_sub, r_lev, r_sub))

    if len(rows) == 2:
        assert rows[0][3] == rows[1][3], "levenshtein kernels disagree"
        assert rows[0][4] == rows[1][4], "substring kernels disagree"
    else:
        print("note: compiled extension not built, timing pure kernel only")

    print(f"{args.pairs} pairs, best of {args.repeat}")
    print(f"{'kernel':<10}{'levenshtein':>14}{'substring':>14}")
    for name, t_lev, t_sub, _, _ in rows:
        print(
            f"{name:<10}{args.pairs / t_lev:>11.0f}/s{args.pairs / t_sub:>12.0f}/s"
        )
    if len(rows) == 2:
        print(
            f"speedup   {rows[0][1] / rows[1][1]:>12.1f}x"
            f"{rows[0][2] / rows[1][2]:>13.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
