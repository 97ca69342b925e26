"""Result records shared by the transform modules."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TransformValue:
    """A transform value with an absolute error estimate.

    ``notes`` carries qualifiers such as an unvalidated truncation.
    """

    value: complex
    err_est: float
    notes: tuple = field(default=())

    def __post_init__(self) -> None:
        if not self.err_est >= 0:
            raise ValueError("err_est must be non-negative")


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of checking ``lhs == rhs`` to within ``tol``."""

    name: str
    lhs: complex
    rhs: complex
    abs_err: float
    tol: float
    passed: bool
    notes: tuple = field(default=())

    @classmethod
    def compare(cls, name: str, lhs: complex, rhs: complex, tol: float, notes: tuple = ()) -> "IdentityReport":
        err = abs(complex(lhs) - complex(rhs))
        return cls(name, lhs, rhs, err, float(tol), bool(err <= tol), tuple(notes))

    def as_dict(self) -> dict:
        def enc(z):
            z = complex(z)
            return z.real if z.imag == 0 else {"re": z.real, "im": z.imag}

        return {"name": self.name, "lhs": enc(self.lhs), "rhs": enc(self.rhs), "abs_err": self.abs_err,
                "tol": self.tol, "pass": self.passed, "notes": list(self.notes)}
