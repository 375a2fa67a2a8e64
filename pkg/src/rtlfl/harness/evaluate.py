"""Top-N scoring of ranked localization results."""

from __future__ import annotations

from dataclasses import dataclass

from rtlfl.blocks import BlockSet


@dataclass(frozen=True)
class EvalRecord:
    bug_id: str
    ground_truth: tuple[tuple[str, int], ...]
    ranked: tuple[str, ...]
    rank: int | None

    def __post_init__(self):
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank starts at 1")

    def to_json(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "ground_truth": [{"file": f, "line": ln} for f, ln in self.ground_truth],
            "ranked": list(self.ranked),
            "rank": self.rank,
        }

    @classmethod
    def from_json(cls, data: dict) -> EvalRecord:
        return cls(
            str(data["bug_id"]),
            tuple((g["file"], int(g["line"])) for g in data.get("ground_truth", [])),
            tuple(data.get("ranked", [])),
            data.get("rank"),
        )


def first_hit(ranked: list[str], ground_truth, blocks: BlockSet) -> int | None:
    """1-based position of the first ranked block that owns a ground-truth line."""
    truth = set(ground_truth)
    for i, block_id in enumerate(ranked):
        b = blocks.by_id.get(block_id)
        if b is not None and b.lines & truth:
            return i + 1
    return None


def make_record(bug_id: str, ground_truth, ranked: list[str], blocks: BlockSet) -> EvalRecord:
    gt = tuple(sorted(ground_truth))
    return EvalRecord(bug_id, gt, tuple(ranked), first_hit(ranked, gt, blocks))


def evaluate_topn(records: list[EvalRecord], n_values=(1, 5, 10)) -> dict[int, int]:
    if not records:
        raise ValueError("no records to evaluate")
    return {n: sum(1 for r in records if r.rank is not None and r.rank <= n) for n in n_values}


def format_table(table: dict[int, int], total: int) -> str:
    rows = ["N\thits\ttotal"]
    rows += [f"Top-{n}\t{hits}\t{total}" for n, hits in sorted(table.items())]
    return "\n".join(rows) + "\n"
