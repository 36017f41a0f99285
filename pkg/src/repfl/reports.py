"""CSV/JSON serialisation of round reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

from .simulator import RoundReport

BASE_COLUMNS = ["round", "acc", "asr", "loss", "attack_active"]


def fmt(value: float) -> str:
    return f"{value:.6f}"


def round_header(n_clients: int | None) -> list[str]:
    cols = list(BASE_COLUMNS)
    for i in range(n_clients or 0):
        cols += [f"rep_{i}", f"weight_{i}"]
    return cols


def round_row(report: RoundReport) -> list[str]:
    row = [str(report.round), fmt(report.accuracy), fmt(report.asr), fmt(report.loss), str(int(report.attack_active))]
    for c in report.clients:
        row += [fmt(c.windowed), fmt(c.weight)]
    return row


class RoundWriter:
    """Appends one line per round to ``rounds.csv`` and ``reputation.csv``, flushing each time."""

    def __init__(self, out_dir: Path, n_clients: int | None):
        self.n_clients = n_clients
        self._rounds = open(out_dir / "rounds.csv", "w", newline="", encoding="utf-8")
        self._rounds_csv = csv.writer(self._rounds, lineterminator="\n")
        self._rounds_csv.writerow(round_header(n_clients))
        self._rep = self._rep_csv = None
        if n_clients:
            self._rep = open(out_dir / "reputation.csv", "w", newline="", encoding="utf-8")
            self._rep_csv = csv.writer(self._rep, lineterminator="\n")
            self._rep_csv.writerow(["round"] + [f"client_{i}" for i in range(n_clients)])

    def write(self, report: RoundReport) -> None:
        self._rounds_csv.writerow(round_row(report))
        self._rounds.flush()
        if self._rep_csv is not None:
            self._rep_csv.writerow([str(report.round)] + [fmt(c.windowed) for c in report.clients])
            self._rep.flush()

    def close(self) -> None:
        self._rounds.close()
        if self._rep is not None:
            self._rep.close()

    def __enter__(self) -> "RoundWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def prepare_out_dir(out_dir: str | Path, force: bool = False) -> Path:
    out = Path(out_dir)
    if out.exists():
        if not force:
            raise FileExistsError(f"{out} already exists (use --force to overwrite)")
        if not out.is_dir():
            raise NotADirectoryError(f"{out} is not a directory")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_sidecar(out_dir: Path, config: dict, attackers: Iterable[int], extra: dict | None = None) -> None:
    payload = {"config": config, "attackers": list(attackers)}
    payload.update(extra or {})
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_reports(
    series: list[RoundReport],
    out_dir: str | Path,
    config: dict,
    attackers: Iterable[int] = (),
    force: bool = False,
) -> list[Path]:
    """Write a finished series; returns the paths written."""
    if not series:
        raise ValueError("no reports to write")
    out = prepare_out_dir(out_dir, force)
    n_clients = len(series[0].clients) or None
    with RoundWriter(out, n_clients) as writer:
        for report in series:
            writer.write(report)
    write_sidecar(out, config, attackers)
    paths = [out / "rounds.csv", out / "config.json"]
    if n_clients:
        paths.append(out / "reputation.csv")
    return paths


def read_rounds(path: str | Path) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {k: (int(v) if k in ("round", "attack_active") else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]
