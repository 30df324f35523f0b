"""Interchange-format writers and readers: CBF v3 and sparse SDPA (.dat-s).

CBF keeps the program's native shape — one PSD variable, scalar rows grouped
by cone — so ``parse_cbf(export_cbf(p))`` recovers an equivalent ConicProgram
and re-exporting is byte-identical.  Rotated-cone rows are rewritten as plain
second-order-cone rows on the way out (CBF's QR convention differs by a
factor of two, and an orthogonal rewrite avoids any rescaling ambiguity).

SDPA has a single PSD variable in *dual* position, so the writer emits the
program as the dual: blocks are (W, one lift block per SOC/RSOC/PSD-image
constraint, one diagonal block for nonnegative rows), and every program row
becomes an equality tying a block entry to a linear image of W.  SDPA's
reported optimum is the negative of the internal minimum; the sign convention
is recorded in a comment line of each file.  ``parse_sdpa`` reads any .dat-s
file back as data that ``SdpaProblem.to_standard_form`` turns into a solvable
standard form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import Cone, ConeKind, svec_indices
from .program import ConicProgram, LinearImageConstraint
from .solve import _RSOC_TO_SOC, StandardConicForm

_OFF = 1.0 / math.sqrt(2.0)

_CBF_CONE = {
    ConeKind.ZERO: "L=",
    ConeKind.NONNEG: "L+",
    ConeKind.SOC: "Q",
}
_CONE_FROM_CBF = {"L=": Cone.zero, "L+": Cone.nonneg, "Q": Cone.soc}


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips the double, so identical
    # floats always serialize identically (byte-stable goldens).
    return repr(float(x))


def _lower_entries(M: np.ndarray):
    """Nonzero lower-triangle entries of a symmetric matrix, sorted."""
    d = M.shape[0]
    for k in range(d):
        for l in range(k + 1):
            if M[k, l] != 0.0:
                yield k, l, float(M[k, l])


# ---------------------------------------------------------------------------
# CBF
# ---------------------------------------------------------------------------


def export_cbf(program: ConicProgram) -> str:
    """Serialize a program as Conic Benchmark Format version 3.

    Layout: one PSDVAR of order var_dim; the W[0,0] = 1 normalization is the
    first scalar row (an equality); each constraint follows in builder order.
    PSD-image constraints need auxiliary free scalar variables (CBF cannot
    couple a PSD variable into a PSD constraint directly): variable y_r holds
    the r-th packed entry of the image via an equality row, and the PSDCON
    block rebuilds the matrix from the y's.
    """
    d = program.var_dim
    scalar_groups: list[tuple[str, int]] = [("L=", 1)]
    labels = ["normalization"]
    fcoord: list[tuple[int, int, int, float]] = []
    acoord: list[tuple[int, int, float]] = []
    bcoord: list[tuple[int, float]] = []
    psdcons: list[int] = []
    hcoord: list[tuple[int, int, int, int, float]] = []

    row = 0  # scalar constraint counter
    i0, j0 = program.normalization
    fcoord.append((row, i0, j0, 1.0 if i0 == j0 else 0.5))
    bcoord.append((row, -1.0))
    row += 1

    n_aux = 0
    for ci, con in enumerate(program.constraints):
        labels.append(con.label or f"rows[{ci}]")
        kind = con.cone.kind
        coeffs = con.coeffs
        if kind == ConeKind.RSOC3:
            coeffs = np.einsum("ab,bij->aij", _RSOC_TO_SOC, coeffs)
            kind = ConeKind.SOC
        if kind in _CBF_CONE:
            scalar_groups.append((_CBF_CONE[kind], coeffs.shape[0]))
            for r in range(coeffs.shape[0]):
                for k, l, v in _lower_entries(coeffs[r]):
                    fcoord.append((row, k, l, v))
                row += 1
        elif kind == ConeKind.PSD_IMAGE:
            order = con.cone.order
            pairs = svec_indices(order)
            scalar_groups.append(("L=", len(pairs)))
            pc = len(psdcons)
            psdcons.append(order)
            for r, (i, j) in enumerate(pairs):
                for k, l, v in _lower_entries(coeffs[r]):
                    fcoord.append((row, k, l, v))
                acoord.append((row, n_aux, -1.0))
                # y_r stores the packed (sqrt2-scaled) off-diagonal entry.
                hcoord.append((pc, n_aux, max(i, j), min(i, j), 1.0 if i == j else _OFF))
                n_aux += 1
                row += 1
        else:  # pragma: no cover - the builders only emit the kinds above
            raise ValueError(f"cone {kind} has no CBF encoding")

    out = [f"# {program.name or 'conic program'}", "# groups: " + "; ".join(labels), ""]
    out += ["VER", "3", ""]
    out += ["OBJSENSE", "MIN", ""]
    out += ["PSDVAR", "1", str(d), ""]
    if n_aux:
        out += ["VAR", f"{n_aux} 1", f"F {n_aux}", ""]
    if psdcons:
        out += ["PSDCON", str(len(psdcons))] + [str(p) for p in psdcons] + [""]
    out += ["CON", f"{row} {len(scalar_groups)}"]
    out += [f"{cone} {size}" for cone, size in scalar_groups]
    out.append("")

    obj_entries = list(_lower_entries(program.objective))
    if obj_entries:
        out += ["OBJFCOORD", str(len(obj_entries))]
        out += [f"0 {k} {l} {_fmt(v)}" for k, l, v in obj_entries]
        out.append("")
    out += ["FCOORD", str(len(fcoord))]
    out += [f"{i} 0 {k} {l} {_fmt(v)}" for i, k, l, v in sorted(fcoord)]
    out.append("")
    if acoord:
        out += ["ACOORD", str(len(acoord))]
        out += [f"{i} {j} {_fmt(v)}" for i, j, v in sorted(acoord)]
        out.append("")
    out += ["BCOORD", str(len(bcoord))]
    out += [f"{i} {_fmt(v)}" for i, v in sorted(bcoord)]
    out.append("")
    if hcoord:
        out += ["HCOORD", str(len(hcoord))]
        out += [f"{c} {j} {k} {l} {_fmt(v)}" for c, j, k, l, v in sorted(hcoord)]
        out.append("")
    return "\n".join(out)


class _CbfReader:
    def __init__(self, text: str):
        self.comments = [
            ln[1:].strip() for ln in text.splitlines() if ln.startswith("#")
        ]
        self.lines = [
            ln.strip()
            for ln in text.splitlines()
            if ln.strip() and not ln.startswith("#")
        ]
        self.pos = 0

    def next(self) -> str:
        ln = self.lines[self.pos]
        self.pos += 1
        return ln

    def done(self) -> bool:
        return self.pos >= len(self.lines)


def parse_cbf(text: str) -> ConicProgram:
    """Rebuild a ConicProgram from a file produced by :func:`export_cbf`.

    Only the structure that writer emits is accepted: a single PSD variable,
    optional free scalars carrying PSD-image entries, and the leading
    normalization row.
    """
    rd = _CbfReader(text)
    d = None
    n_aux = 0
    psd_orders: list[int] = []
    groups: list[tuple[str, int]] = []
    n_scalar = 0
    obj: np.ndarray | None = None
    F: dict[int, list[tuple[int, int, float]]] = {}
    A: dict[int, list[tuple[int, float]]] = {}
    b: dict[int, float] = {}
    H: list[str] = []

    while not rd.done():
        key = rd.next()
        if key == "VER":
            ver = rd.next()
            if ver not in {"1", "2", "3", "4"}:
                raise ValueError(f"unsupported CBF version {ver}")
        elif key == "OBJSENSE":
            if rd.next() != "MIN":
                raise ValueError("only minimization files are supported")
        elif key == "PSDVAR":
            if rd.next() != "1":
                raise ValueError("expected exactly one PSD variable")
            d = int(rd.next())
            obj = np.zeros((d, d))
        elif key == "VAR":
            count, ngroups = map(int, rd.next().split())
            n_aux = count
            for _ in range(ngroups):
                cone, size = rd.next().split()
                if cone != "F":
                    raise ValueError("scalar variables must be free")
                del size
        elif key == "PSDCON":
            for _ in range(int(rd.next())):
                psd_orders.append(int(rd.next()))
        elif key == "CON":
            n_scalar, ngroups = map(int, rd.next().split())
            for _ in range(ngroups):
                cone, size = rd.next().split()
                groups.append((cone, int(size)))
        elif key == "OBJFCOORD":
            for _ in range(int(rd.next())):
                j, k, l, v = rd.next().split()
                if j != "0":
                    raise ValueError("unexpected PSD variable index")
                obj[int(k), int(l)] = obj[int(l), int(k)] = float(v)
        elif key == "FCOORD":
            for _ in range(int(rd.next())):
                i, j, k, l, v = rd.next().split()
                F.setdefault(int(i), []).append((int(k), int(l), float(v)))
        elif key == "ACOORD":
            for _ in range(int(rd.next())):
                i, j, v = rd.next().split()
                A.setdefault(int(i), []).append((int(j), float(v)))
        elif key == "BCOORD":
            for _ in range(int(rd.next())):
                i, v = rd.next().split()
                b[int(i)] = float(v)
        elif key == "HCOORD":
            # PSD-image entries are rebuilt positionally from the link rows,
            # so the H coefficients only need to be consumed.
            for _ in range(int(rd.next())):
                H.append(rd.next())
        else:
            raise ValueError(f"unsupported CBF section {key!r}")

    if d is None:
        raise ValueError("missing PSDVAR section")
    del n_aux

    def slice_of(i: int) -> np.ndarray:
        M = np.zeros((d, d))
        for k, l, v in F.get(i, []):
            M[k, l] = M[l, k] = v
        return M

    labels: list[str] = []
    for c in rd.comments:
        if c.startswith("groups:"):
            labels = [s.strip() for s in c[len("groups:") :].split(";")]
    name = rd.comments[0] if rd.comments else ""

    if not groups or groups[0] != ("L=", 1) or b.get(0) != -1.0:
        raise ValueError("first row must be the W[0,0] = 1 normalization")

    constraints: list[LinearImageConstraint] = []
    row = 1
    psd_seen = 0
    for gi, (cone, size) in enumerate(groups[1:], start=1):
        label = labels[gi] if gi < len(labels) else f"rows[{gi - 1}]"
        rows = np.stack([slice_of(row + r) for r in range(size)])
        if any(row + r in A for r in range(size)):
            # aux-linked equality rows: this is a packed PSD image
            order = psd_orders[psd_seen]
            psd_seen += 1
            if cone != "L=" or size != order * (order + 1) // 2:
                raise ValueError("malformed PSD-image link group")
            constraints.append(
                LinearImageConstraint(rows, Cone.psd_image(order), label)
            )
        else:
            constraints.append(LinearImageConstraint(rows, _CONE_FROM_CBF[cone](size), label))
        row += size
    if row != n_scalar:
        raise ValueError(f"scalar row count mismatch: {row} != {n_scalar}")
    return ConicProgram(d, obj, tuple(constraints), name=name)


# ---------------------------------------------------------------------------
# SDPA
# ---------------------------------------------------------------------------


def export_sdpa(program: ConicProgram) -> str:
    """Serialize a program as sparse SDPA, encoding it on the dual side.

    Variable layout: block 1 is W; each SOC row group becomes an arrow block
    (PSD iff the image is in the cone), each rotated-cone row a 2x2 block,
    each PSD image its own block; nonnegative rows share one trailing
    diagonal block.  All program rows become equalities F_k . Y = c_k.  With
    F_0 = diag(-objective, 0, ...), the SDPA optimum equals the negative of
    the internal minimum (stated in the comment line).
    """
    d = program.var_dim
    blocks: list[int] = [d]
    con_block: list[int | None] = []
    n_slack = 0
    for con in program.constraints:
        kind = con.cone.kind
        if kind == ConeKind.SOC:
            blocks.append(con.cone.size)
            con_block.append(len(blocks))
        elif kind == ConeKind.RSOC3:
            blocks.append(2)
            con_block.append(len(blocks))
        elif kind == ConeKind.PSD_IMAGE:
            blocks.append(con.cone.order)
            con_block.append(len(blocks))
        elif kind == ConeKind.NONNEG:
            n_slack += con.coeffs.shape[0]
            con_block.append(None)
        elif kind == ConeKind.ZERO:
            con_block.append(None)
        else:  # pragma: no cover
            raise ValueError(f"cone {kind} has no SDPA encoding")
    slack_block = None
    if n_slack:
        blocks.append(-n_slack)
        slack_block = len(blocks)

    # entries[k] = list of (block, i, j, value), 1-based, i <= j
    entries: list[list[tuple[int, int, int, float]]] = []
    rhs: list[float] = []

    def w_entries(M: np.ndarray, sign: float = 1.0):
        return [(1, l + 1, k + 1, sign * v) for k, l, v in _lower_entries(M)]

    i0, j0 = program.normalization
    entries.append([(1, min(i0, j0) + 1, max(i0, j0) + 1, 1.0 if i0 == j0 else 0.5)])
    rhs.append(1.0)

    slack_at = 0
    for con, blk in zip(program.constraints, con_block):
        kind = con.cone.kind
        rows = con.coeffs
        if kind == ConeKind.ZERO:
            for r in range(rows.shape[0]):
                entries.append(w_entries(rows[r]))
                rhs.append(0.0)
        elif kind == ConeKind.NONNEG:
            for r in range(rows.shape[0]):
                slack_at += 1
                entries.append(
                    w_entries(rows[r]) + [(slack_block, slack_at, slack_at, -1.0)]
                )
                rhs.append(0.0)
        elif kind == ConeKind.SOC:
            k = con.cone.size
            # tie the arrow block to the image of W entry by entry
            entries.append([(blk, 1, 1, 1.0)] + w_entries(rows[0], -1.0))
            rhs.append(0.0)
            for j in range(1, k):
                entries.append([(blk, 1, j + 1, 0.5)] + w_entries(rows[j], -1.0))
                rhs.append(0.0)
            for j in range(1, k):
                entries.append([(blk, 1, 1, -1.0), (blk, j + 1, j + 1, 1.0)])
                rhs.append(0.0)
            for i in range(1, k):
                for j in range(i + 1, k):
                    entries.append([(blk, i + 1, j + 1, 0.5)])
                    rhs.append(0.0)
        elif kind == ConeKind.RSOC3:
            entries.append([(blk, 1, 1, 1.0)] + w_entries(rows[0], -1.0))
            entries.append([(blk, 2, 2, 1.0)] + w_entries(rows[1], -1.0))
            entries.append([(blk, 1, 2, 0.5)] + w_entries(rows[2], -1.0))
            rhs += [0.0, 0.0, 0.0]
        elif kind == ConeKind.PSD_IMAGE:
            for r, (i, j) in enumerate(svec_indices(con.cone.order)):
                if i == j:
                    lead = [(blk, i + 1, i + 1, 1.0)]
                else:
                    # packed rows carry sqrt2 * entry; F.Y doubles (i, j)
                    lead = [(blk, i + 1, j + 1, _OFF)]
                entries.append(lead + w_entries(rows[r], -1.0))
                rhs.append(0.0)

    out = [
        f"* {program.name or 'conic program'}",
        "* internal minimum = -(SDPA optimal value); block 1 is the moment matrix",
        str(len(entries)),
        str(len(blocks)),
        " ".join(str(s) for s in blocks),
        " ".join(_fmt(v) for v in rhs),
    ]
    f0 = [
        f"0 1 {min(k, l) + 1} {max(k, l) + 1} {_fmt(-v)}"
        for k, l, v in _lower_entries(program.objective)
    ]
    out += f0
    for k, ents in enumerate(entries, start=1):
        for blk, i, j, v in sorted(ents):
            out.append(f"{k} {blk} {i} {j} {_fmt(v)}")
    return "\n".join(out) + "\n"


@dataclass
class SdpaProblem:
    """Parsed .dat-s data: min c.x  s.t.  sum_k x_k F_k - F0 psd-blockwise."""

    m: int
    block_struct: list[int]
    c: np.ndarray
    coefficients: dict[int, list[tuple[int, int, int, float]]] = field(
        default_factory=dict
    )
    comments: list[str] = field(default_factory=list)

    def to_standard_form(self) -> StandardConicForm:
        """Express the file's (primal) problem in the internal standard form
        min c.x, Ax + s = b with s in nonneg x PSD blocks."""
        from .cones import svec_dim

        offsets: list[int] = []
        nonneg_rows = 0
        psd_orders = []
        for size in self.block_struct:
            if size < 0:
                offsets.append(nonneg_rows)
                nonneg_rows += -size
            else:
                psd_orders.append(size)
        psd_offsets = []
        at = nonneg_rows
        for p in psd_orders:
            psd_offsets.append(at)
            at += svec_dim(p)
        total = at

        def row_of(blk: int, i: int, j: int) -> tuple[int, float]:
            """Map a block entry to its standard-form row and svec scale."""
            size = self.block_struct[blk - 1]
            if size < 0:
                if i != j:
                    raise ValueError("off-diagonal entry in a diagonal block")
                base = sum(-s for s in self.block_struct[: blk - 1] if s < 0)
                return base + i - 1, 1.0
            pi = sum(1 for s in self.block_struct[: blk - 1] if s > 0)
            base = psd_offsets[pi]
            lo, hi = min(i, j) - 1, max(i, j) - 1
            # svec position of (lo, hi) in column-major upper-triangle order
            pos = hi * (hi + 1) // 2 + lo
            return base + pos, 1.0 if i == j else math.sqrt(2.0)

        A = sp.lil_matrix((total, self.m))
        b = np.zeros(total)
        for k, ents in self.coefficients.items():
            for blk, i, j, v in ents:
                r, scale = row_of(blk, i, j)
                if k == 0:
                    b[r] -= scale * v  # s = svec(sum x F) - svec(F0)
                else:
                    A[r, k - 1] -= scale * v
        # s = b - A x = svec(sum_k x_k F_k - F0), already accumulated above
        return StandardConicForm(
            c=self.c.copy(),
            A=sp.csc_matrix(A),
            b=b,
            n_zero=0,
            n_nonneg=nonneg_rows,
            soc_dims=[],
            psd_orders=psd_orders,
        )


def parse_sdpa(text: str) -> SdpaProblem:
    """Read a sparse SDPA (.dat-s) file."""
    comments = []
    rows = []
    for ln in text.splitlines():
        s = ln.strip()
        if not s:
            continue
        if s[0] in "*\"":
            comments.append(s.lstrip("*\" ").strip())
        else:
            rows.append(s)
    clean = lambda s: s.replace(",", " ").replace("{", " ").replace("}", " ").replace(
        "(", " "
    ).replace(")", " ")
    m = int(clean(rows[0]).split()[0])
    nblock = int(clean(rows[1]).split()[0])
    struct = [int(t) for t in clean(rows[2]).split()]
    if len(struct) != nblock:
        raise ValueError("block structure length mismatch")
    c = np.array([float(t) for t in clean(rows[3]).split()])
    if c.shape[0] != m:
        raise ValueError("objective length mismatch")
    coefficients: dict[int, list[tuple[int, int, int, float]]] = {}
    for s in rows[4:]:
        k, blk, i, j, v = s.split()
        coefficients.setdefault(int(k), []).append(
            (int(blk), int(i), int(j), float(v))
        )
    return SdpaProblem(m, struct, c, coefficients, comments)
