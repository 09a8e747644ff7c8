"""Generator sets for the validation ansaetze.

Families
--------
hea
    ``X_i`` and ``Z_i`` on every qubit plus ``Z_i Z_{i+1}`` on an open chain.
spin_glass_hva
    ``sum_i a_i Z_i + sum_{i<j} J_ij Z_i Z_j`` with seeded uniform(-1, 1)
    coefficients, and ``sum_i X_i``.
xxz_hva
    Even- and odd-bond sums of ``XX + YY + delta ZZ`` on a periodic chain.
    ``subspace="zero_magnetization"`` restricts both to the ``n/2``
    excitation sector (dense output).
tfim_hva_open
    ``sum_{i<n-1} Z_i Z_{i+1}`` and ``sum_i X_i``.

Coefficients come from :class:`SplitMix64`, so a ``(family, n, seed)`` triple
always yields the same tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .dense import restrict, to_dense, zero_magnetization_projector
from .errors import InvalidInputError
from .pauli import PauliString, PauliSum

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator.

    ``state += 0x9E3779B97F4A7C15``; output is ``state`` mixed by
    ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
    z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64).
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """Top 53 bits as a double in ``[0, 1)``, mapped onto ``[low, high)``."""
        u = (self.next_u64() >> 11) * 2.0**-53
        return low + (high - low) * u


@dataclass(frozen=True)
class AnsatzSpec:
    family: str
    n: int
    seed: int = 0
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if not isinstance(self.n, int) or self.n < 2:
            raise InvalidInputError(f"qubit count must be an integer >= 2, got {self.n!r}")
        if self.family == "xxz_hva" and self.n % 2:
            raise InvalidInputError("xxz_hva needs an even qubit count")
        unknown = set(self.options) - set(FAMILIES[self.family]["options"])
        if unknown:
            raise InvalidInputError(f"unknown options for {self.family}: {', '.join(sorted(unknown))}")


def _word(n: int, factors: dict[int, str]) -> PauliString:
    chars = ["I"] * n
    for q, p in factors.items():
        chars[q] = p
    return PauliString.from_label("".join(chars))


def _site(n, i, p):
    return _word(n, {i: p})


def _bond(n, i, j, p):
    return _word(n, {i: p, j: p})


def _hea(spec):
    n = spec.n
    ops = [PauliSum.from_string(_site(n, i, "X")) for i in range(n)]
    ops += [PauliSum.from_string(_site(n, i, "Z")) for i in range(n)]
    ops += [PauliSum.from_string(_bond(n, i, i + 1, "Z")) for i in range(n - 1)]
    return ops


def _spin_glass(spec):
    n = spec.n
    rng = SplitMix64(spec.seed)
    terms = {_site(n, i, "Z"): rng.uniform(-1.0, 1.0) for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            terms[_bond(n, i, j, "Z")] = rng.uniform(-1.0, 1.0)
    field_ = {_site(n, i, "X"): 1.0 for i in range(n)}
    return [PauliSum(terms, n=n), PauliSum(field_, n=n)]


def _xxz(spec):
    n = spec.n
    delta = float(spec.options.get("delta", 1.5))
    out = []
    for parity in (0, 1):
        terms = {}
        for i in range(parity, n, 2):
            j = (i + 1) % n
            if i == j or (n == 2 and parity == 1):
                continue
            terms[_bond(n, i, j, "X")] = 1.0
            terms[_bond(n, i, j, "Y")] = 1.0
            terms[_bond(n, i, j, "Z")] = delta
        out.append(PauliSum(terms, n=n))
    subspace = spec.options.get("subspace")
    if subspace in (None, "full"):
        return out
    if subspace != "zero_magnetization":
        raise InvalidInputError(f"unknown subspace {subspace!r}")
    proj = zero_magnetization_projector(n)
    return [restrict(to_dense(op), proj) for op in out]


def _tfim_open(spec):
    n = spec.n
    coupling = {_bond(n, i, i + 1, "Z"): 1.0 for i in range(n - 1)}
    field_ = {_site(n, i, "X"): 1.0 for i in range(n)}
    return [PauliSum(coupling, n=n), PauliSum(field_, n=n)]


FAMILIES = {
    "hea": {
        "build": _hea,
        "options": (),
        "expected": "4^n-1",
        "note": "controllable; per-qubit X, Z and nearest-neighbour ZZ",
    },
    "spin_glass_hva": {
        "build": _spin_glass,
        "options": (),
        "expected": "4^n-1",
        "note": "controllable for generic seeds; coefficients uniform(-1, 1) from SplitMix64",
    },
    "xxz_hva": {
        "build": _xxz,
        "options": ("delta", "subspace"),
        "expected": "d^2-1",
        "note": "d is the dimension of the restricted subspace; periodic chain, delta = 1.5",
    },
    "tfim_hva_open": {
        "build": _tfim_open,
        "options": (),
        "expected": "n^2-1",
        "note": "open chain",
    },
}


def expected_dimension(family: str, n: int, subspace_dim: int | None = None) -> int:
    formula = FAMILIES[family]["expected"]
    if formula == "4^n-1":
        return 4**n - 1
    if formula == "n^2-1":
        return n * n - 1
    if subspace_dim is None:
        raise InvalidInputError("xxz_hva expectation needs the subspace dimension")
    return subspace_dim**2 - 1


def build_generators(spec: AnsatzSpec) -> list:
    """Generator tuple of ``spec``; deterministic in ``(family, n, seed, options)``."""
    return FAMILIES[spec.family]["build"](spec)


def list_families() -> list[dict[str, Any]]:
    return [
        {
            "family": name,
            "min_qubits": 2,
            "even_qubits_only": name == "xxz_hva",
            "seeded": name == "spin_glass_hva",
            "options": list(info["options"]),
            "expected_dimension": info["expected"],
            "note": info["note"],
        }
        for name, info in FAMILIES.items()
    ]
