"""Epsilon constants of symplectic self-dual rank-two representations induced
from quadratic extensions of Q_p, Gamma-constants, completed epsilon
constants, and the resulting sign partitions of anticyclotomic characters.

All sign values are certified by exact cyclotomic arithmetic: the Gauss-like
sum G is multiplied by the quadratic Gauss sum g and divided exactly by the
integer g^2 = p*, so a claimed sign that is not exactly +-1 is a hard error.

Convention for the square-root choice: the two conjugate symplectic
self-dual characters of conductor one over a ramified K differ by the
unramified quadratic twist; `sqrt_choice = +1` selects the one whose value
at delta is 1/g for g the canonical Gauss sum, `-1` the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .cyclotomic import (
    CyclotomicInt,
    certify_sign_from_gauss_quotient,
    quadratic_gauss_sum,
)
from .errors import InputError, MathCheckError
from .padic import legendre
from .unitgroups import (
    PadicCharacter,
    QuadExtension,
    anticyclotomic_characters,
)

TOOL_VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# Gamma constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HodgeTateProfile:
    """Multiset of Hodge-Tate weights with multiplicities, normalized so the
    cyclotomic character has weight 1; weight w labels the graded piece
    gr^{-w} of the de Rham filtration."""

    weights: tuple  # ((weight, multiplicity), ...)

    @staticmethod
    def of(pairs) -> "HodgeTateProfile":
        agg: dict = {}
        for w, mult in pairs:
            if mult <= 0:
                raise InputError("multiplicities must be positive")
            agg[w] = agg.get(w, 0) + mult
        return HodgeTateProfile(tuple(sorted(agg.items())))

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.weights)

    def multiplicity(self, w: int) -> int:
        return dict(self.weights).get(w, 0)

    def is_symplectic_self_dual(self) -> bool:
        """Weights w and 1 - w occur with equal multiplicity."""
        d = dict(self.weights)
        return all(d.get(1 - w, 0) == m for w, m in self.weights)


def gamma_star(r: int) -> Fraction:
    """(r-1)! for r >= 1 and (-1)^r / (-r)! for r <= 0."""
    if r >= 1:
        return Fraction(factorial(r - 1))
    return Fraction(-1 if r % 2 else 1, factorial(-r))


def gamma_constant(profile: HodgeTateProfile) -> Fraction:
    """prod_w Gamma*(w)^{-multiplicity(w)}; +-1 on symplectic self-dual
    profiles."""
    out = Fraction(1)
    for w, mult in profile.weights:
        out *= gamma_star(w) ** (-mult)
    return out


def gamma_constant_ssd_parity(profile: HodgeTateProfile) -> int:
    """(-1)^{sum_{w<0} |w| * multiplicity(w)} for symplectic self-dual
    profiles; must coincide with ``gamma_constant``."""
    if not profile.is_symplectic_self_dual():
        raise InputError("parity formula needs a symplectic self-dual profile")
    e = sum(-w * m for w, m in profile.weights if w < 0)
    return (-1) ** (e % 2)


def gamma_rank2(k: int) -> int:
    """Gamma-constant (-1)^k of a rank-two self-dual profile with induction
    weights (k+1, -k), k >= 0."""
    if k < 0:
        raise InputError("weight parameter k must be >= 0")
    g = gamma_constant(HodgeTateProfile.of([(k + 1, 1), (-k, 1)]))
    if g != (-1) ** k:
        raise MathCheckError("rank-two Gamma-constant mismatch")
    return (-1) ** k


# ---------------------------------------------------------------------------
# epsilon constants of induced representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InducedSelfDualSpec:
    """An induced rank-two symplectic self-dual spec: the quadratic extension,
    the weight parameter k (induction Hodge-Tate weights (k+1, -k)), the
    square-root choice for the conductor-one character (ramified; ignored
    unramified) and the finite anticyclotomic character chi."""

    K: QuadExtension
    k: int
    sqrt_choice: int
    chi: PadicCharacter

    def __post_init__(self):
        if self.sqrt_choice not in (1, -1):
            raise InputError("sqrt_choice must be +1 or -1")
        if self.k < 0:
            raise InputError("weight parameter k must be >= 0")
        if self.chi.K != self.K:
            raise InputError("character lives over a different extension")


def gauss_like_sum(chi: PadicCharacter) -> CyclotomicInt:
    """G = sum_{a in F_p^x} (a/p) chi(1 + delta^{a(chi)-1})^a, exact in
    Z[zeta_{p^n}]; requires chi ramified over a ramified K."""
    K = chi.K
    if not K.ramified:
        raise InputError("the Gauss-like sum is defined over ramified K")
    if chi.is_trivial():
        raise InputError("the Gauss-like sum needs a ramified character")
    p = K.p
    a_chi = chi.conductor()
    base = chi.evaluate(chi.ug.ok.layer_element(a_chi - 1, 1))
    out = CyclotomicInt.zero(p, chi.n)
    val = CyclotomicInt.integer(1, p, chi.n)
    for a in range(1, p):
        val = val * base  # val = base^a
        out = out + legendre(a, p) * val
    return out


def _certified_quotient_sign(G: CyclotomicInt) -> int:
    """G / g certified in {+1, -1} by exact division (multiply by g, divide
    by p*)."""
    return certify_sign_from_gauss_quotient(G)


def epsilon_induced_unramified(chi: PadicCharacter) -> int:
    """epsilon(Ind phi_K chi) = chi(delta) (-1)^{a(chi)} over unramified K."""
    K = chi.K
    if K.ramified:
        raise InputError("expected the unramified extension")
    chi_delta = chi.value_at_delta().rational_value()
    if chi_delta not in (1, -1):
        raise MathCheckError("chi(delta) is not a sign")
    return chi_delta * (-1) ** chi.conductor()


def epsilon_induced_ramified(spec: InducedSelfDualSpec) -> int:
    """epsilon of the induced Weil-Deligne representation over ramified K
    (weight parameter ignored: the plain epsilon constant sees only the
    conductor-one character phi_K and chi)."""
    K = spec.K
    if not K.ramified:
        raise InputError("expected a ramified extension")
    chi = spec.chi
    w_m2 = K.omega(-2)
    if chi.is_trivial():
        return w_m2
    p = K.p
    G = gauss_like_sum(chi)
    quot = _certified_quotient_sign(G)
    return w_m2 * spec.sqrt_choice * legendre(-1, p) ** (chi.conductor() // 2) * quot


def epsilon_induced(spec: InducedSelfDualSpec) -> int:
    if spec.K.ramified:
        return epsilon_induced_ramified(spec)
    return epsilon_induced_unramified(spec.chi)


def completed_epsilon(spec: InducedSelfDualSpec) -> int:
    """Gamma * epsilon with the weight twist folded into the delta-value.

    Unramified: the Weil-Deligne character of the weight-k twist is
    independent of k, so the completed constant is
    (-1)^k chi(delta) (-1)^{a(chi)}.

    Ramified: the value at delta of the weight-k conductor-one character
    acquires (-1)^k (-1/p)^k, so for ramified chi
      eps-hat = (-1)^k * omega(-2) * (-1/p)^{a(chi)/2}
                * [(-1)^k (-1/p)^k * sqrt_choice * (G / g)]
    and for trivial chi simply (-1)^k * omega(-2).
    """
    K, k, chi = spec.K, spec.k, spec.chi
    gamma = gamma_rank2(k)
    if not K.ramified:
        return gamma * epsilon_induced_unramified(chi)
    p = K.p
    if chi.is_trivial():
        return gamma * K.omega(-2)
    G = gauss_like_sum(chi)
    quot = _certified_quotient_sign(G)
    delta_value_sign = (-1) ** k * legendre(-1, p) ** k * spec.sqrt_choice
    eps = K.omega(-2) * delta_value_sign * legendre(-1, p) ** (chi.conductor() // 2) * quot
    return gamma * eps


def completed_epsilon_reducible(m: int, n: int) -> int:
    """eps-hat of a reducible symplectic self-dual de Rham V whose positive
    Hodge-Tate-weight sub-character is cyc^m omega^n mu chi (mu unramified,
    chi of p-power order): Gamma = (-1)^{m-1} and eps = omega^n(-1), giving
    (-1)^{m+n-1}."""
    return (-1) ** (m + n - 1)


# ---------------------------------------------------------------------------
# sign partition tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignPartitionRow:
    char_id: tuple
    order: int
    conductor: int
    epsilon: int
    epsilon_hat: int
    label: str  # sign of eps-hat of the inverse character


@dataclass(frozen=True)
class SignPartitionTable:
    p: int
    kind: str
    delta_sq: int
    k: int
    sqrt_choice: int
    gamma_generator_note: str
    rows: tuple

    def counts(self):
        """{(order_exponent): {'+': .., '-': ..}} per exact order."""
        out: dict = {}
        for row in self.rows:
            key = row.order
            d = out.setdefault(key, {"+": 0, "-": 0})
            d[row.label] += 1
        return out

    def to_json_dict(self) -> dict:
        return {
            "header": {
                "p": self.p,
                "kind": self.kind,
                "delta_sq": self.delta_sq,
                "weight_k": self.k,
                "sqrt_choice": self.sqrt_choice,
                "tool_version": TOOL_VERSION,
            },
            "rows": [
                {
                    "char_id": list(map(str, r.char_id)),
                    "order": r.order,
                    "conductor": r.conductor,
                    "epsilon": r.epsilon,
                    "epsilon_hat": r.epsilon_hat,
                    "label": r.label,
                }
                for r in self.rows
            ],
            "counts": {str(k): v for k, v in self.counts().items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        lines = [
            f"# p={self.p} kind={self.kind} delta_sq={self.delta_sq} "
            f"k={self.k} sqrt_choice={self.sqrt_choice} version={TOOL_VERSION}",
            "char_id,order,conductor,epsilon,epsilon_hat,label",
        ]
        for r in self.rows:
            cid = "|".join(map(str, r.char_id))
            lines.append(
                f"{cid},{r.order},{r.conductor},{r.epsilon},{r.epsilon_hat},{r.label}"
            )
        return "\n".join(lines) + "\n"


def partition(K: QuadExtension, k: int, sqrt_choice: int, n_max: int) -> SignPartitionTable:
    """Label every anticyclotomic character of order <= p^{n_max} by the sign
    of the completed epsilon constant of its inverse twist."""
    rows = []
    for n in range(n_max + 1):
        for chi in anticyclotomic_characters(K, n):
            spec = InducedSelfDualSpec(K, k, sqrt_choice, chi)
            eps = epsilon_induced(spec)
            eps_hat = completed_epsilon(spec)
            inv_hat = completed_epsilon(InducedSelfDualSpec(K, k, sqrt_choice, chi.inverse()))
            rows.append(
                SignPartitionRow(
                    char_id=chi.char_id(),
                    order=chi.order,
                    conductor=chi.conductor(),
                    epsilon=eps,
                    epsilon_hat=eps_hat,
                    label="+" if inv_hat == 1 else "-",
                )
            )
    rows.sort(key=lambda r: (r.conductor, r.char_id))
    from .padic import smallest_primitive_root_mod_p2

    return SignPartitionTable(
        p=K.p,
        kind=K.kind,
        delta_sq=K.delta_sq,
        k=k,
        sqrt_choice=sqrt_choice,
        gamma_generator_note=f"gamma generator a = {smallest_primitive_root_mod_p2(K.p)}",
        rows=tuple(rows),
    )
