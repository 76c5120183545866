"""Collects one status line per acceptance criterion for the terminal summary."""

LINES: list[str] = []


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({detail})"
    LINES.append(line)
    print(line)
    return passed
