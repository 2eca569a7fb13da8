"""Hyperfine level structure of a four-momentum diatomic level.

The level (v, N) of HD+ carries four angular momenta: electron spin
s_e = 1/2, proton spin I_p = 1/2, deuteron spin I_d = 1 and the
rotation N.  An effective spin Hamiltonian

    H = E1 (N.s_e) + E2 (N.I_p) + E3 (N.I_d) + E4 (I_p.s_e) + E5 (I_d.s_e)
        + E6 T(N, I_p, s_e) + E7 T(N, I_d, s_e) + E8 T(N, I_p, I_d)
        + E9 Q(N, I_d)

with scalar coefficients E_k in kHz describes the hyperfine structure.
Everything here is built from real ladder-operator matrices; no complex
arithmetic is used anywhere in this module.

Coupled quantum numbers: G1 = s_e + I_p, G2 = G1 + I_d, F = G2 + N.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

COEFF_INDICES = tuple(range(1, 10))
ROTATIONAL_COEFFS = (1, 2, 3, 6, 7, 8, 9)
CONTACT_COEFFS = (4, 5)

SLOT_NAMES = ("s_e", "I_p", "I_d", "N")


class ClassificationError(ValueError):
    """A level's expectation values do not round to valid quantum numbers."""


class TrackingError(RuntimeError):
    """A perturbed spectrum could not be matched level-by-level."""


# ---------------------------------------------------------------------------
# single-momentum matrices


@dataclass(frozen=True)
class AngularMomentumSet:
    """Real (J_z, J_+, J_-) matrices for one angular momentum j."""

    j: float
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray

    @property
    def dim(self) -> int:
        return self.jz.shape[0]


def jmatrices(j: float) -> AngularMomentumSet:
    """Ladder-operator matrices in the |j, m> basis, m = j, j-1, ..., -j."""
    twoj = round(2 * j)
    if twoj < 0 or abs(2 * j - twoj) > 1e-12:
        raise ValueError(f"j must be a non-negative half-integer, got {j}")
    j = twoj / 2.0
    dim = twoj + 1
    m = j - np.arange(dim)
    jz = np.diag(m)
    jplus = np.zeros((dim, dim))
    for i in range(1, dim):
        # raises |j, m[i]> to |j, m[i] + 1> = row i-1
        jplus[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    return AngularMomentumSet(j, jz, jplus, jplus.T.copy())


# ---------------------------------------------------------------------------
# product space


Triple = tuple[np.ndarray, np.ndarray, np.ndarray]


class ProductBasis:
    """Product basis s_e (1/2) x I_p (1/2) x I_d (1) x N.

    Basis states are ordered by per-slot index i = j - m (m descending),
    with s_e slowest and N fastest.
    """

    def __init__(self, n_rot: int):
        if n_rot < 0 or n_rot != int(n_rot):
            raise ValueError(f"rotational quantum number must be a non-negative integer, got {n_rot}")
        self.n_rot = int(n_rot)
        self.js = {"s_e": 0.5, "I_p": 0.5, "I_d": 1.0, "N": float(n_rot)}
        self._single = {name: jmatrices(j) for name, j in self.js.items()}
        self.dims = tuple(self._single[name].dim for name in SLOT_NAMES)
        self.dim = int(np.prod(self.dims))
        self._triples: dict[str, Triple] = {}

    def index(self, m_se: float, m_sp: float, m_sd: float, m_n: float) -> int:
        """Bijective map from magnetic quantum numbers to a basis index."""
        idx = 0
        for name, m in zip(SLOT_NAMES, (m_se, m_sp, m_sd, m_n)):
            j = self.js[name]
            i = round(j - m)
            if not (0 <= i < self._single[name].dim) or abs((j - m) - i) > 1e-9:
                raise ValueError(f"invalid m={m} for slot {name} (j={j})")
            idx = idx * self._single[name].dim + i
        return idx

    def embed(self, op: np.ndarray, slot: str) -> np.ndarray:
        """Tensor-embed a single-slot operator, identity elsewhere."""
        pos = SLOT_NAMES.index(slot)
        if op.shape != (self.dims[pos], self.dims[pos]):
            raise ValueError(
                f"operator shape {op.shape} does not match slot {slot} dimension {self.dims[pos]}"
            )
        pre = int(np.prod(self.dims[:pos], initial=1))
        post = int(np.prod(self.dims[pos + 1:], initial=1))
        return np.kron(np.kron(np.eye(pre), op), np.eye(post))

    def triple(self, slot: str) -> Triple:
        """Embedded (J_z, J_+, J_-) for one slot, cached."""
        if slot not in self._triples:
            single = self._single[slot]
            self._triples[slot] = (
                self.embed(single.jz, slot),
                self.embed(single.jplus, slot),
                self.embed(single.jminus, slot),
            )
        return self._triples[slot]

    def combined_triple(self, slots: Sequence[str]) -> Triple:
        """Componentwise sum of slot momenta, e.g. G1 = s_e + I_p."""
        zs, ps, ms = zip(*(self.triple(s) for s in slots))
        return sum(zs), sum(ps), sum(ms)

    def f_z(self) -> np.ndarray:
        return self.combined_triple(SLOT_NAMES)[0]

    def f_squared(self) -> np.ndarray:
        return casimir(self.combined_triple(SLOT_NAMES))


def dot(a: Triple, b: Triple) -> np.ndarray:
    """Scalar product A.B = A_z B_z + (A_+ B_- + A_- B_+)/2."""
    return a[0] @ b[0] + 0.5 * (a[1] @ b[2] + a[2] @ b[1])


def casimir(a: Triple) -> np.ndarray:
    return dot(a, a)


# ---------------------------------------------------------------------------
# Hamiltonian terms

# Each tensor-type term lives behind one constructor carrying its own
# normalization, so an alternative convention is a one-line change.


def _rank2_norm(n_rot: int) -> float:
    return 1.0 / ((2 * n_rot - 1) * (2 * n_rot + 3))


def tensor_coupling(basis: ProductBasis, slot_a: str, slot_b: str, norm: float | None = None) -> np.ndarray:
    """T(N, A, B) = [2 N^2 (A.B) - 3((N.A)(N.B) + (N.B)(N.A))] * norm."""
    if norm is None:
        norm = _rank2_norm(basis.n_rot)
    n, a, b = basis.triple("N"), basis.triple(slot_a), basis.triple(slot_b)
    na, nb = dot(n, a), dot(n, b)
    return norm * (2.0 * casimir(n) @ dot(a, b) - 3.0 * (na @ nb + nb @ na))


def quadrupole_coupling(basis: ProductBasis, norm: float | None = None) -> np.ndarray:
    """Q(N, I_d) = [N^2 I_d^2 - 3/2 (N.I_d) - 3 (N.I_d)^2] * norm.

    Deuteron electric-quadrupole scalar; this form is traceless over the
    product space, so it does not move the spin-averaged origin.
    """
    if norm is None:
        norm = _rank2_norm(basis.n_rot)
    n, d = basis.triple("N"), basis.triple("I_d")
    nd = dot(n, d)
    return norm * (casimir(n) @ casimir(d) - 1.5 * nd - 3.0 * (nd @ nd))


def term_operator(k: int, basis: ProductBasis) -> np.ndarray:
    """The dimensionless operator multiplying coefficient E_k."""
    if k == 1:
        return dot(basis.triple("N"), basis.triple("s_e"))
    if k == 2:
        return dot(basis.triple("N"), basis.triple("I_p"))
    if k == 3:
        return dot(basis.triple("N"), basis.triple("I_d"))
    if k == 4:
        return dot(basis.triple("I_p"), basis.triple("s_e"))
    if k == 5:
        return dot(basis.triple("I_d"), basis.triple("s_e"))
    if k == 6:
        return tensor_coupling(basis, "I_p", "s_e")
    if k == 7:
        return tensor_coupling(basis, "I_d", "s_e")
    if k == 8:
        return tensor_coupling(basis, "I_p", "I_d")
    if k == 9:
        return quadrupole_coupling(basis)
    raise ValueError(f"coefficient index must be 1..9, got {k}")


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class HyperfineCoefficients:
    """E1..E9 in kHz for one level (v, N).

    ``eps_overrides`` holds optional per-coefficient fractional
    uncertainties that replace the defaults of SpinUncertaintyParams.
    """

    v: int
    n_rot: int
    values: dict[int, float]
    eps_overrides: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for k in self.values:
            if k not in COEFF_INDICES:
                raise ValueError(f"coefficient index must be 1..9, got {k}")
        for k, eps in self.eps_overrides.items():
            if k not in COEFF_INDICES or eps <= 0:
                raise ValueError(f"bad fractional-uncertainty override eps_E{k} = {eps}")
        if self.n_rot == 0:
            bad = [k for k in ROTATIONAL_COEFFS if self.values.get(k, 0.0) != 0.0]
            if bad:
                raise ValueError(
                    f"N=0 level admits only E4, E5; got nonzero E{bad[0]}"
                )

    def coefficient(self, k: int) -> float:
        return self.values.get(k, 0.0)


def build_hfs(coeffs: HyperfineCoefficients, basis: ProductBasis) -> np.ndarray:
    """Assemble the effective spin Hamiltonian (kHz) on the product basis."""
    if coeffs.n_rot != basis.n_rot:
        raise ValueError(
            f"coefficient set is for N={coeffs.n_rot}, basis has N={basis.n_rot}"
        )
    h = np.zeros((basis.dim, basis.dim))
    for k in COEFF_INDICES:
        e = coeffs.coefficient(k)
        if e != 0.0:
            h += e * term_operator(k, basis)
    return h


# ---------------------------------------------------------------------------
# levels


@dataclass(frozen=True)
class SpinLevel:
    """One hyperfine level: energy in kHz relative to the level set's origin."""

    energy: float
    degeneracy: int
    g1: int | None
    g2: int | None
    f: int | None
    vectors: np.ndarray
    v: int | None = None
    n_rot: int | None = None

    @property
    def label(self) -> tuple[int, int, int] | None:
        if self.f is None:
            return None
        return (self.g1, self.g2, self.f)


def _round_to_j(x: float, window: float = 0.05) -> float | None:
    """Nearest half-integer j with j(j+1) within `window` of x, else None."""
    if x < -window:
        return None
    j = 0.5 * (-1.0 + math.sqrt(max(0.0, 1.0 + 4.0 * x)))
    jr = round(2.0 * j) / 2.0
    if abs(x - jr * (jr + 1.0)) > window:
        return None
    return jr


def _as_int(j: float) -> int:
    if abs(j - round(j)) > 1e-9:
        raise ClassificationError(f"expected integer quantum number, got {j}")
    return int(round(j))


def eigenlevels(h: np.ndarray, basis: ProductBasis, v: int | None = None) -> list[SpinLevel]:
    """Diagonalize, group degenerate eigenvalues, label by (G1, G2, F).

    Eigenvalues within 1e-6 kHz are grouped into one level.  Labels come
    from rounding the <G1^2>, <G2^2>, <F^2> expectation values of each
    eigenvector to j(j+1) (window 0.05).  A group too large to be a
    single F multiplet (possible only for degenerate corner cases such
    as H = 0) is returned unlabeled instead of raising.
    """
    if not np.array_equal(h, h.T):
        raise ValueError("Hamiltonian must be symmetric")
    fz, f2 = basis.f_z(), basis.f_squared()
    for name, op in (("F_z", fz), ("F^2", f2)):
        comm = np.max(np.abs(h @ op - op @ h))
        if comm > 1e-9:
            raise ValueError(f"Hamiltonian does not commute with {name}: |[H, {name}]| = {comm:.3e} kHz")

    evals, evecs = np.linalg.eigh(h)
    scale = max(np.max(np.abs(evals)), 1.0)
    residual = np.max(np.abs(h @ evecs - evecs * evals))
    if residual > 1e-10 * scale:
        raise RuntimeError(f"eigensolver residual {residual:.3e} exceeds 1e-10 * ||H||")

    groups: list[list[int]] = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[groups[-1][0]] <= 1e-6:
            groups[-1].append(i)
        else:
            groups.append([i])

    casimirs = {
        "g1": casimir(basis.combined_triple(("s_e", "I_p"))),
        "g2": casimir(basis.combined_triple(("s_e", "I_p", "I_d"))),
        "f": f2,
    }
    max_multiplet = 2 * (2 + basis.n_rot) + 1

    levels = []
    for idx in groups:
        vecs = evecs[:, idx]
        if len(idx) > max_multiplet:
            levels.append(SpinLevel(float(np.mean(evals[idx])), len(idx), None, None, None,
                                    vecs, v, basis.n_rot))
            continue
        labels = []
        for col in range(vecs.shape[1]):
            vec = vecs[:, col]
            one = {}
            for name, op in casimirs.items():
                j = _round_to_j(float(vec @ op @ vec))
                if j is None:
                    raise ClassificationError(
                        f"ambiguous {name} label for eigenvector {idx[col]} "
                        f"(<{name}^2> = {float(vec @ op @ vec):.6f})"
                    )
                one[name] = j
            labels.append((one["g1"], one["g2"], one["f"]))
        if len(set(labels)) != 1:
            raise ClassificationError(
                f"eigenvectors {idx} are degenerate but carry mixed labels {sorted(set(labels))}"
            )
        g1, g2, f = labels[0]
        levels.append(SpinLevel(float(np.mean(evals[idx])), len(idx),
                                _as_int(g1), _as_int(g2), _as_int(f), vecs, v, basis.n_rot))
    return levels


def level_structure(coeffs: HyperfineCoefficients, basis: ProductBasis) -> list[SpinLevel]:
    return eigenlevels(build_hfs(coeffs, basis), basis, v=coeffs.v)


def find_level(levels: Iterable[SpinLevel], label: tuple[int, int, int]) -> SpinLevel:
    matches = [lv for lv in levels if lv.label == tuple(label)]
    if len(matches) != 1:
        raise LookupError(f"label {tuple(label)} resolves to {len(matches)} levels")
    return matches[0]


def spin_frequency(
    upper: tuple[HyperfineCoefficients, tuple[int, int, int]],
    lower: tuple[HyperfineCoefficients, tuple[int, int, int]],
) -> float:
    """Hyperfine contribution to a transition frequency, in kHz.

    Each level energy is taken relative to its spin-averaged origin (the
    degeneracy-weighted mean, which vanishes for the traceless default
    constructors but is subtracted anyway so swapped-in tensor forms
    stay consistent).
    """
    energies = []
    for coeffs, label in (upper, lower):
        levels = level_structure(coeffs, ProductBasis(coeffs.n_rot))
        origin = sum(lv.energy * lv.degeneracy for lv in levels) / sum(lv.degeneracy for lv in levels)
        energies.append(find_level(levels, label).energy - origin)
    return energies[0] - energies[1]


# ---------------------------------------------------------------------------
# sensitivities


def sensitivities(
    coeffs: HyperfineCoefficients, basis: ProductBasis, label: tuple[int, int, int]
) -> dict[int, float]:
    """gamma_k = dE_level/dE_k by the Hellmann-Feynman identity.

    For a degenerate multiplet the eigenspace-averaged expectation value
    is used, which equals the derivative of the multiplet mean.
    """
    level = find_level(level_structure(coeffs, basis), label)
    out = {}
    for k in COEFF_INDICES:
        op = term_operator(k, basis)
        out[k] = float(np.trace(level.vectors.T @ op @ level.vectors)) / level.degeneracy
    return out


def sensitivities_fd(
    coeffs: HyperfineCoefficients,
    basis: ProductBasis,
    label: tuple[int, int, int],
    ks: Sequence[int] | None = None,
    step: float = 1e-5,
) -> dict[int, float]:
    """Central-finite-difference cross-check of :func:`sensitivities`.

    The step is `step` times the largest coefficient magnitude, so the
    eigensolver's backward error (eps times the matrix norm) stays well
    below the difference quotient. Levels are re-identified by label
    after each perturbation; a label that fails to resolve (level
    crossing at the perturbed point) raises TrackingError.
    """
    if ks is None:
        ks = CONTACT_COEFFS if basis.n_rot == 0 else COEFF_INDICES
    h = step * max(1.0, max((abs(v) for v in coeffs.values.values()), default=1.0))
    out = {}
    for k in ks:
        energies = []
        for sign in (+1.0, -1.0):
            values = dict(coeffs.values)
            values[k] = values.get(k, 0.0) + sign * h
            perturbed = HyperfineCoefficients(coeffs.v, coeffs.n_rot, values, coeffs.eps_overrides)
            try:
                level = find_level(level_structure(perturbed, basis), label)
            except LookupError as exc:
                raise TrackingError(f"level {label} lost while perturbing E{k}") from exc
            energies.append(level.energy)
        out[k] = (energies[0] - energies[1]) / (2.0 * h)
    return out


# ---------------------------------------------------------------------------
# spin-theory uncertainty model


@dataclass(frozen=True)
class SpinUncertaintyParams:
    """Fractional/absolute theory uncertainties of the coefficient set.

    eps_fermi applies to the Fermi-contact coefficients E4, E5 of both
    levels; eps_bp to the remaining (Breit-Pauli order alpha^2) upper
    coefficients; u1_prime is the absolute uncertainty assigned to the
    upper spin-rotation coefficient E1'.
    """

    eps_fermi: float = 1e-6
    eps_bp: float = 0.0072973525693 ** 2
    u1_prime: float = 0.05

    def __post_init__(self) -> None:
        if min(self.eps_fermi, self.eps_bp, self.u1_prime) <= 0:
            raise ValueError("spin-uncertainty parameters must be strictly positive")


@dataclass(frozen=True)
class TransitionSensitivities:
    """Sensitivity rows gamma (lower level) and gamma' (upper level)."""

    transition: str
    lower: dict[int, float]
    upper: dict[int, float]


@dataclass(frozen=True)
class SensitivityTable:
    """Sensitivities for a set of transitions sharing one level pair."""

    lower_coeffs: HyperfineCoefficients
    upper_coeffs: HyperfineCoefficients
    rows: dict[str, TransitionSensitivities]

    def row(self, transition: str) -> TransitionSensitivities:
        if transition not in self.rows:
            raise KeyError(f"no sensitivity row for transition {transition!r}")
        return self.rows[transition]


def transition_table(
    lower_coeffs: HyperfineCoefficients,
    upper_coeffs: HyperfineCoefficients,
    transitions: Mapping[str, tuple[tuple[int, int, int], tuple[int, int, int]]],
) -> SensitivityTable:
    """Build sensitivity rows for (lower_label, upper_label) pairs."""
    lower_basis, upper_basis = ProductBasis(lower_coeffs.n_rot), ProductBasis(upper_coeffs.n_rot)
    rows = {}
    for name, (lo_label, up_label) in transitions.items():
        rows[name] = TransitionSensitivities(
            name,
            sensitivities(lower_coeffs, lower_basis, lo_label),
            sensitivities(upper_coeffs, upper_basis, up_label),
        )
    return SensitivityTable(lower_coeffs, upper_coeffs, rows)


def _weighted_spin_terms(
    table: SensitivityTable,
    params: SpinUncertaintyParams,
    weights: Mapping[str, float],
) -> float:
    """Shared absolute-sum error model over weighted transitions.

    With a single transition at weight 1 this is the per-line estimate;
    with weights (b, 1-b) it is the composite one.  Sums over transitions
    happen inside each absolute value (coefficient errors are common to
    all transitions), and the k-terms add as absolute values, not in
    quadrature.
    """
    for name in weights:
        table.row(name)
    lower, upper = table.lower_coeffs, table.upper_coeffs

    def wsum(which: str, k: int) -> float:
        return sum(
            w * getattr(table.row(name), which)[k] for name, w in weights.items()
        )

    eps1 = upper.eps_overrides.get(1)
    if eps1 is None:
        u = abs(wsum("upper", 1)) * params.u1_prime
    else:
        u = abs(wsum("upper", 1) * eps1 * upper.coefficient(1))
    for k in (2, 3, 6, 7, 8, 9):
        eps = upper.eps_overrides.get(k, params.eps_bp)
        u += eps * abs(wsum("upper", k) * upper.coefficient(k))
    for k in CONTACT_COEFFS:
        u += upper.eps_overrides.get(k, params.eps_fermi) * abs(wsum("upper", k) * upper.coefficient(k))
        u += lower.eps_overrides.get(k, params.eps_fermi) * abs(wsum("lower", k) * lower.coefficient(k))
    return u


def spin_uncertainty(
    transition: str, table: SensitivityTable, params: SpinUncertaintyParams | None = None
) -> float:
    """Theory uncertainty (kHz) of one transition's spin frequency."""
    params = params or SpinUncertaintyParams()
    return _weighted_spin_terms(table, params, {transition: 1.0})


# ---------------------------------------------------------------------------
# coefficient file


_SECTION_RE = re.compile(r"^\[v=(\d+),\s*N=(\d+)\]$")
_VALUE_KEYS = {f"E{k}": k for k in COEFF_INDICES}
_EPS_KEYS = {f"eps_E{k}": k for k in COEFF_INDICES}


def read_coefficient_file(path: str | Path) -> dict[tuple[int, int], HyperfineCoefficients]:
    """Parse a sectioned key-value coefficient file.

    Sections are headed ``[v=0,N=0]``; keys are ``E1``..``E9`` (kHz) and
    optional ``eps_E1``..``eps_E9`` fractional-uncertainty overrides.
    Unknown keys are rejected.  Each section must define E4 and E5, and
    for N >= 1 the full E1..E9 set.
    """
    sections: dict[tuple[int, int], tuple[dict[int, float], dict[int, float]]] = {}
    current: tuple[int, int] | None = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _SECTION_RE.match(line)
        if header:
            current = (int(header.group(1)), int(header.group(2)))
            if current in sections:
                raise ValueError(f"{path}:{lineno}: duplicate section {line}")
            sections[current] = ({}, {})
            continue
        if current is None:
            raise ValueError(f"{path}:{lineno}: key outside of a [v=..,N=..] section")
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, text = (t.strip() for t in line.partition("="))
        try:
            value = float(text)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad numeric value {text!r}") from exc
        values, eps = sections[current]
        if key in _VALUE_KEYS:
            if _VALUE_KEYS[key] in values:
                raise ValueError(f"{path}:{lineno}: duplicate key {key}")
            values[_VALUE_KEYS[key]] = value
        elif key in _EPS_KEYS:
            if _EPS_KEYS[key] in eps:
                raise ValueError(f"{path}:{lineno}: duplicate key {key}")
            eps[_EPS_KEYS[key]] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")

    out = {}
    for (v, n_rot), (values, eps) in sections.items():
        required = set(CONTACT_COEFFS) if n_rot == 0 else set(COEFF_INDICES)
        missing = sorted(required - set(values))
        if missing:
            raise ValueError(f"{path}: section [v={v},N={n_rot}] missing E{missing[0]}")
        out[(v, n_rot)] = HyperfineCoefficients(v, n_rot, values, eps)
    return out
