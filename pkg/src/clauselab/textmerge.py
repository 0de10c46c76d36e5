"""Line-based diffing, patching, and three-way merge.

The edit script is a list of operations over the *source* line list:

    ("=", n)      copy the next n lines unchanged
    ("-", lines)  delete these lines (must match the source)
    ("+", lines)  insert these lines

``apply_script(a, diff_script(a, b)) == b`` for any two texts. The
three-way merge is a classic diff3: regions changed on only one side
are taken as-is; overlapping differing regions produce conflict
markers.
"""

from __future__ import annotations

import difflib


def _lines(text: str) -> list:
    return text.splitlines(keepends=True)


def diff_script(a: str, b: str) -> list:
    if a == b:
        return []
    sa, sb = _lines(a), _lines(b)
    script = []
    matcher = difflib.SequenceMatcher(None, sa, sb, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            script.append(("=", i2 - i1))
        elif tag == "delete":
            script.append(("-", sa[i1:i2]))
        elif tag == "insert":
            script.append(("+", sb[j1:j2]))
        else:  # replace
            script.append(("-", sa[i1:i2]))
            script.append(("+", sb[j1:j2]))
    return script


def apply_script(a: str, script: list) -> str:
    if not script:
        return a
    sa = _lines(a)
    out = []
    pos = 0
    for op, payload in script:
        if op == "=":
            out.extend(sa[pos:pos + payload])
            pos += payload
        elif op == "-":
            if sa[pos:pos + len(payload)] != payload:
                raise ValueError("edit script does not match source")
            pos += len(payload)
        elif op == "+":
            out.extend(payload)
        else:
            raise ValueError(f"unknown edit op {op!r}")
    if pos != len(sa):
        raise ValueError("edit script does not cover source")
    return "".join(out)


def script_as_json(script: list) -> list:
    return [{"op": op, "count": p} if op == "=" else {"op": op, "lines": p}
            for op, p in script]


def unified(a: str, b: str, a_label: str = "a", b_label: str = "b") -> str:
    return "".join(difflib.unified_diff(
        _lines(a), _lines(b), fromfile=a_label, tofile=b_label))


# ---------------------------------------------------------------------------
# three-way merge


def _regions(base: list, other: list) -> list:
    """Changed regions as (base start, base end, replacement lines)."""
    matcher = difflib.SequenceMatcher(None, base, other, autojunk=False)
    out = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag != "equal":
            out.append((i1, i2, other[j1:j2]))
    return out


def _apply_regions(base: list, regions: list, lo: int, hi: int) -> list:
    """One side's text for the base slice [lo, hi)."""
    out = []
    pos = lo
    for r1, r2, repl in regions:
        if r2 < lo or r1 > hi:
            continue
        out.extend(base[pos:max(r1, lo)])
        out.extend(repl)
        pos = min(max(r2, lo), hi)
    out.extend(base[pos:hi])
    return out


def _overlaps(s1: int, e1: int, s2: int, e2: int) -> bool:
    """Whether two changed base ranges belong to the same merge cluster.
    Non-empty ranges must share an actual base line; a pure insertion
    (empty range) clashes with anything touching its anchor point."""
    if s1 == e1 and s2 == e2:
        return s1 == s2
    if s1 == e1:
        return s2 <= s1 <= e2
    if s2 == e2:
        return s1 <= s2 <= e1
    return s1 < e2 and s2 < e1


def merge3(base: str, ours: str, theirs: str,
           labels=("ours", "theirs")) -> tuple:
    """(merged text, had_conflicts). Changes to disjoint base lines are
    combined; clashing changes keep both sides between git-style markers."""
    sb, so, st = _lines(base), _lines(ours), _lines(theirs)
    ro, rt = _regions(sb, so), _regions(sb, st)
    merged = []
    conflicts = False
    pos = 0
    io = it = 0
    while io < len(ro) or it < len(rt):
        clustered = (io < len(ro) and it < len(rt)
                     and _overlaps(ro[io][0], ro[io][1],
                                   rt[it][0], rt[it][1]))
        if not clustered:
            # independent change: apply whichever starts first
            if it >= len(rt) or (io < len(ro)
                                 and ro[io][:2] <= rt[it][:2]):
                r1, r2, repl = ro[io]
                io += 1
            else:
                r1, r2, repl = rt[it]
                it += 1
            merged.extend(sb[pos:r1])
            merged.extend(repl)
            pos = max(pos, r2)
            continue
        # grow the cluster until both sides are clear of its hull
        lo = min(ro[io][0], rt[it][0])
        hi = max(ro[io][1], rt[it][1])
        cluster_o, cluster_t = [], []
        changed = True
        while changed:
            changed = False
            while io < len(ro) and _overlaps(lo, hi, *ro[io][:2]):
                hi = max(hi, ro[io][1])
                cluster_o.append(ro[io])
                io += 1
                changed = True
            while it < len(rt) and _overlaps(lo, hi, *rt[it][:2]):
                hi = max(hi, rt[it][1])
                cluster_t.append(rt[it])
                it += 1
                changed = True
        merged.extend(sb[pos:lo])
        ours_slice = _apply_regions(sb, cluster_o, lo, hi)
        theirs_slice = _apply_regions(sb, cluster_t, lo, hi)
        if ours_slice == theirs_slice:
            merged.extend(ours_slice)
        else:
            conflicts = True
            merged.append(f"<<<<<<< {labels[0]}\n")
            merged.extend(_ensure_nl(ours_slice))
            merged.append("=======\n")
            merged.extend(_ensure_nl(theirs_slice))
            merged.append(f">>>>>>> {labels[1]}\n")
        pos = hi
    merged.extend(sb[pos:])
    return "".join(merged), conflicts


def _ensure_nl(lines: list) -> list:
    if lines and not lines[-1].endswith("\n"):
        return lines[:-1] + [lines[-1] + "\n"]
    return lines
