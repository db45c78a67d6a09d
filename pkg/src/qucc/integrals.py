"""FCIDUMP ingestion and spin-orbital integral access.

Only restricted (spin-free) integrals are supported. Two-electron integrals are
kept in chemists' notation ``(pq|rs)``, stored once per 8-fold symmetry class,
and expanded into a dense ``M**4`` array on first use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

from .determinant import Determinant, occupied


class FcidumpError(ValueError):
    """Malformed FCIDUMP input; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
        self.lineno = lineno
        self.source = source


def pair_index(p: int, q: int) -> int:
    """Compound index of the unordered pair ``{p, q}`` (0-based)."""
    if p < q:
        p, q = q, p
    return p * (p + 1) // 2 + q


@dataclass(frozen=True)
class IntegralSet:
    """One- and two-electron integrals over ``n_spatial`` orthonormal orbitals."""

    n_spatial: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray  # (M, M), symmetric
    two_body_packed: np.ndarray  # length K(K+1)/2, K = M(M+1)/2
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial

    def eri(self, p: int, q: int, r: int, s: int) -> float:
        """Spatial integral ``(pq|rs)`` in chemists' notation."""
        return float(self.two_body_packed[pair_index(pair_index(p, q), pair_index(r, s))])

    @cached_property
    def two_body(self) -> np.ndarray:
        """Dense ``(M, M, M, M)`` chemists'-notation array."""
        m = self.n_spatial
        p, q = np.indices((m, m))
        pq = _pair_array(p, q).reshape(-1)
        full = self.two_body_packed[_pair_array(pq[:, None], pq[None, :])]
        return full.reshape(m, m, m, m)

    @cached_property
    def antisym(self) -> np.ndarray:
        """Dense spin-orbital ``<pq||rs>`` array of shape ``(2M,)*4``."""
        m = self.n_spatial
        spin = np.repeat([0, 1], m)
        sp = np.tile(np.arange(m), 2)
        g = self.two_body[np.ix_(sp, sp, sp, sp)]  # g[p,r,q,s] = (pr|qs) on spatial parts
        # <pq|rs> = (pr|qs) delta(sp, sr) delta(sq, ss)
        phys = g.transpose(0, 2, 1, 3)
        same = spin[:, None] == spin[None, :]
        phys = phys * same[:, None, :, None] * same[None, :, None, :]
        return phys - phys.transpose(0, 1, 3, 2)

    @cached_property
    def one_body_spin(self) -> np.ndarray:
        return np.kron(np.eye(2), self.one_body)

    def antisymmetrized(self, p: int, q: int, r: int, s: int) -> float:
        """``<pq||rs> = <pq|rs> - <pq|sr>`` over spin orbitals."""
        return self._phys(p, q, r, s) - self._phys(p, q, s, r)

    def _phys(self, p: int, q: int, r: int, s: int) -> float:
        m = self.n_spatial
        if (p >= m) != (r >= m) or (q >= m) != (s >= m):
            return 0.0
        return self.eri(p % m, r % m, q % m, s % m)

    def unique_counts(self) -> tuple[int, int]:
        """Number of stored one-body and two-body values (symmetry-unique slots)."""
        m = self.n_spatial
        return m * (m + 1) // 2, len(self.two_body_packed)


def _pair_array(p, q):
    hi, lo = np.maximum(p, q), np.minimum(p, q)
    return hi * (hi + 1) // 2 + lo


def _packed_length(m: int) -> int:
    k = m * (m + 1) // 2
    return k * (k + 1) // 2


_HEADER_END = re.compile(r"(&END|/)\s*$", re.IGNORECASE)
_KEYVAL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_header(text: str, first_line: int, source):
    body = re.sub(r"^\s*&FCI", "", text, flags=re.IGNORECASE)
    body = _HEADER_END.sub("", body.strip())
    values = {}
    for key, raw in _KEYVAL.findall(body.replace("\n", " ")):
        values[key.upper()] = raw.strip().rstrip(",")
    for key in ("NORB", "NELEC"):
        if key not in values:
            raise FcidumpError(f"header missing {key}", first_line, source)
    try:
        norb = int(values["NORB"])
        nelec = int(values["NELEC"])
        ms2 = int(values.get("MS2", "0") or 0)
    except ValueError as exc:
        raise FcidumpError(f"bad header value ({exc})", first_line, source) from None
    if norb <= 0 or nelec < 0 or (nelec + ms2) % 2 or abs(ms2) > nelec:
        raise FcidumpError(f"inconsistent header NORB={norb} NELEC={nelec} MS2={ms2}", first_line, source)
    return norb, nelec, ms2


def parse_fcidump(stream: Union[str, TextIO, Iterable[str]], source: str | None = None,
                  rtol: float = 1e-12) -> IntegralSet:
    """Parse Molpro-style FCIDUMP text (string, file object or line iterable).

    Entries ``v i 0 0 0`` (orbital energies in some writers) are ignored.
    Repeated entries for the same symmetry slot must agree to ``rtol``.
    """
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = list(stream)
    header_lines = []
    lineno = 0
    found_end = False
    for lineno, line in enumerate(lines, 1):
        header_lines.append(line)
        stripped = line.strip()
        if stripped.upper().endswith("&END") or stripped == "/" or stripped.endswith("/"):
            found_end = True
            break
    if not header_lines or "&FCI" not in header_lines[0].upper():
        raise FcidumpError("missing &FCI header", 1, source)
    if not found_end:
        raise FcidumpError("unterminated header (expected &END or /)", lineno, source)
    norb, nelec, ms2 = _parse_header("\n".join(header_lines), 1, source)

    one = np.zeros((norb, norb))
    one_seen = np.zeros((norb, norb), dtype=bool)
    two = np.zeros(_packed_length(norb))
    two_seen = np.zeros(len(two), dtype=bool)
    core = 0.0
    core_seen = False

    def clash(old, new):
        return abs(old - new) > rtol * max(1.0, abs(old), abs(new))

    for n, line in enumerate(lines[lineno:], lineno + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {line.strip()!r}", n, source)
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError:
            raise FcidumpError(f"unparseable entry {line.strip()!r}", n, source) from None
        if min(i, j, k, l) < 0 or max(i, j, k, l) > norb:
            raise FcidumpError(f"orbital index out of range 0..{norb}", n, source)
        if i and j and k and l:
            slot = pair_index(pair_index(i - 1, j - 1), pair_index(k - 1, l - 1))
            if two_seen[slot] and clash(two[slot], value):
                raise FcidumpError(f"inconsistent duplicate for ({i}{j}|{k}{l})", n, source)
            two[slot] = value
            two_seen[slot] = True
        elif i and j and not k and not l:
            p, q = i - 1, j - 1
            if one_seen[p, q] and clash(one[p, q], value):
                raise FcidumpError(f"inconsistent duplicate for h({i},{j})", n, source)
            one[p, q] = one[q, p] = value
            one_seen[p, q] = one_seen[q, p] = True
        elif not (i or j or k or l):
            if core_seen and clash(core, value):
                raise FcidumpError("inconsistent duplicate core energy", n, source)
            core = value
            core_seen = True
        elif i and not (j or k or l):
            continue
        else:
            raise FcidumpError(f"unrecognised index pattern {i} {j} {k} {l}", n, source)
    return IntegralSet(norb, nelec, ms2, core, one, two, extra={"core_in_file": core_seen})


def read_fcidump(path: Union[str, Path]) -> IntegralSet:
    path = Path(path)
    with path.open() as fh:
        return parse_fcidump(fh, source=str(path))


def serialize_fcidump(ints: IntegralSet, tol: float = 0.0) -> str:
    """Write ``ints`` back out; values use ``repr`` so they round-trip exactly."""
    m = ints.n_spatial
    out = [
        f" &FCI NORB={m},NELEC={ints.n_electrons},MS2={ints.ms2},",
        "  ORBSYM=" + ",".join("1" for _ in range(m)) + ",",
        "  ISYM=1,",
        " &END",
    ]
    for p in range(m):
        for q in range(p + 1):
            for r in range(m):
                for s in range(r + 1):
                    if pair_index(r, s) > pair_index(p, q):
                        continue
                    v = ints.eri(p, q, r, s)
                    if abs(v) > tol:
                        out.append(f" {v!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(m):
        for q in range(p + 1):
            v = float(ints.one_body[p, q])
            if abs(v) > tol:
                out.append(f" {v!r} {p + 1} {q + 1} 0 0")
    out.append(f" {float(ints.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def with_core_energy(ints: IntegralSet, nuclear_repulsion: float, atol: float = 1e-10) -> IntegralSet:
    """Fold an externally supplied nuclear repulsion into ``core_energy``.

    If the file already carried a nonzero core entry it must match; it is never
    added twice.
    """
    if ints.extra.get("core_in_file") and ints.core_energy != 0.0:
        if abs(ints.core_energy - nuclear_repulsion) > atol:
            raise FcidumpError(
                f"core energy {ints.core_energy!r} in file disagrees with supplied "
                f"nuclear repulsion {nuclear_repulsion!r}"
            )
        return ints
    return IntegralSet(ints.n_spatial, ints.n_electrons, ints.ms2, float(nuclear_repulsion),
                       ints.one_body, ints.two_body_packed,
                       extra={**ints.extra, "core_in_file": True})


def orbital_energies(ints: IntegralSet, reference: Determinant) -> np.ndarray:
    """Fock diagonal ``h_pp + sum_i <pi||pi>`` for every spin orbital (length 2M)."""
    occ = occupied(reference)
    g = ints.antisym
    diag = np.einsum("pipi->p", g[:, occ][:, :, :, occ]) if occ else 0.0
    return np.diag(ints.one_body_spin) + diag


def hf_energy(ints: IntegralSet, reference: Determinant) -> float:
    occ = occupied(reference)
    h = ints.one_body_spin
    e = ints.core_energy + sum(h[i, i] for i in occ)
    g = ints.antisym
    e += 0.5 * sum(g[i, j, i, j] for i in occ for j in occ)
    return float(e)
