"""Bundled simulation traces.

Hand-written batches of unit-test-style targets per focal method, in
Python-, Java- and C++-flavoured dialects of the mini grammar. The test
bodies repeat assert-style line structures with varying literals, which
is exactly the shape the pattern engine exploits. A generator of varied
batches is included for distribution-style reports.
"""

from __future__ import annotations

import random

from patmask.sim import Trace, build_trace, tokenize_target

_PY_BODY = """\
def test_candy_crush_{i}():
    solution = Solution()
    assert solution.candy_crush([[{a}, {b}], [{b}, {a}]]) == [[{a}, 0], [0, {a}]]
    assert solution.candy_crush([[{b}, {c}], [{c}, {b}]]) == [[{b}, 0], [0, {b}]]
    assert solution.candy_crush([[{d}, {d}], [{a}, {b}]]) == [[0, 0], [{a}, {b}]]
"""

_JAVA_BODY = """\
public class SolutionTest{i} {{
    @Test
    public void testMaxArea{i}() {{
        Solution solution = new Solution();
        assertEquals({e}, solution.maxArea(new int[]{{{a}, {b}, {c}}}));
        assertEquals({a}, solution.maxArea(new int[]{{{c}, {d}, {a}}}));
        assertEquals({b}, solution.maxArea(new int[]{{{d}, {e}, {b}}}));
    }}
}}
"""

_CPP_BODY = """\
int main() {{
    Solution solution;
    assert(solution.twoSum({{{a}, {b}, {c}}}, {e}) == {k});
    assert(solution.twoSum({{{b}, {c}, {d}}}, {f}) == {k});
    assert(solution.twoSum({{{c}, {d}, {a}}}, {e}) == {k});
    assert(solution.twoSum({{{d}, {a}, {b}}}, {f}) == {k});
    return 0;
}}
"""


def _python_targets(n: int) -> list[str]:
    rng = random.Random(101 + n)
    out = []
    for i in range(1, n + 1):
        nums = rng.sample(range(1, 99), 4)
        out.append(
            _PY_BODY.format(i=i, a=nums[0], b=nums[1], c=nums[2], d=nums[3])
        )
    return out


def _java_targets(n: int) -> list[str]:
    rng = random.Random(202 + n)
    out = []
    for i in range(1, n + 1):
        nums = rng.sample(range(1, 99), 5)
        out.append(
            _JAVA_BODY.format(
                i=i, a=nums[0], b=nums[1], c=nums[2], d=nums[3], e=nums[4]
            )
        )
    return out


def _cpp_targets(n: int) -> list[str]:
    rng = random.Random(303 + n)
    out = []
    for _ in range(n):
        nums = rng.sample(range(2, 99), 6)
        out.append(
            _CPP_BODY.format(
                a=nums[0], b=nums[1], c=nums[2], d=nums[3], e=nums[4],
                f=nums[5], k=rng.randint(1, 3),
            )
        )
    return out


_PAD_BODY = """\
def test_two_sum_{i}():
    solution = Solution()
    assert solution.two_sum([{a}, {b}], {c}) == [0, 1]
    assert solution.two_sum([{b}, {a}], {c}) == [0, 1]
"""


def _pad_targets(n: int) -> list[str]:
    rng = random.Random(404 + n)
    out = []
    for i in range(1, n + 1):
        a, b = rng.sample(range(1, 50), 2)
        out.append(_PAD_BODY.format(i=i, a=a, b=b, c=a + b))
    return out


def bundled_traces(seed: int = 0) -> dict[str, Trace]:
    """The fixed corpus: repetitive batches of 3/5/7 per dialect, plus
    short-target batches whose tails are long pad runs."""
    traces: dict[str, Trace] = {}
    makers = {"py": _python_targets, "java": _java_targets, "cpp": _cpp_targets}
    for lang, maker in makers.items():
        for n in (3, 5, 7):
            name = f"{lang}_n{n}"
            traces[name] = build_trace(name, maker(n), length=128, seed=seed)
    for n in (3, 5):
        name = f"pad_n{n}"
        traces[name] = build_trace(name, _pad_targets(n), length=128, seed=seed)
    return traces


def get_bundled(name: str, seed: int = 0) -> Trace:
    traces = bundled_traces(seed=seed)
    try:
        return traces[name]
    except KeyError:
        raise KeyError(f"no bundled trace {name!r} (known: {', '.join(sorted(traces))})") from None


_FN_NAMES = [
    "min_moves", "max_area", "two_sum", "rotate", "merge", "search",
    "count_bits", "top_k", "is_valid", "longest_run",
]


def generate_varied_traces(
    count: int,
    seed: int = 0,
    length: int = 128,
    confidence_models: tuple[str, ...] = ("seeded-uniform", "locality-biased"),
) -> list[Trace]:
    """Randomized unit-test-style batches for distribution reports: varied
    function names, argument shapes, assert counts and batch sizes."""
    rng = random.Random(seed)
    traces = []
    for t in range(count):
        n = rng.choice([3, 5, 7])
        fn = rng.choice(_FN_NAMES)
        arg_shape = rng.choice(["list", "pair", "nested"])
        assert_count = rng.randint(3, 6)
        targets = []
        for i in range(n):
            targets.append(
                _varied_target(rng, fn, i + 1, arg_shape, assert_count, length)
            )
        traces.append(
            build_trace(
                name=f"varied_{t}",
                targets=targets,
                length=length,
                confidence_model=confidence_models[t % len(confidence_models)],
                seed=rng.randrange(10_000),
            )
        )
    return traces


def _varied_target(
    rng: random.Random, fn: str, index: int, arg_shape: str, assert_count: int, length: int
) -> str:
    lines = [f"def test_{fn}_{index}():", "    solution = Solution()"]
    for _ in range(assert_count):
        if arg_shape == "list":
            args = ", ".join(str(rng.randint(0, 99)) for _ in range(rng.randint(2, 4)))
            call = f"solution.{fn}([{args}], {rng.randint(0, 9)})"
        elif arg_shape == "pair":
            call = f"solution.{fn}({rng.randint(0, 99)}, {rng.randint(0, 99)})"
        else:
            inner = ", ".join(
                f"[{rng.randint(0, 9)}, {rng.randint(0, 9)}]" for _ in range(2)
            )
            call = f"solution.{fn}([{inner}])"
        lines.append(f"    assert {call} == {rng.randint(0, 999)}")
    text = "\n".join(lines) + "\n"
    # keep room for the EOS terminator
    while len(tokenize_target(text)) >= length:
        lines.pop()
        text = "\n".join(lines) + "\n"
    return text
