from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    piece: str | None = None
    severity: str = "error"

    def __str__(self):
        where = f"[{self.piece}] " if self.piece is not None else ""
        return f"{self.severity}: {where}{self.code}: {self.message}"

    def to_json(self):
        return {"code": self.code, "message": self.message, "piece": self.piece,
                "severity": self.severity}


def errors(diags):
    return [d for d in diags if d.severity == "error"]
