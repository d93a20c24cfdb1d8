"""Shared record of acceptance outcomes, printed at the end of a pytest run."""

LINES: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] C{number:02d} {title}: {detail}"
    LINES[number] = line
    return line
