"""Declarative catalog of the 4/3 laws.

Each entry lists triple-product terms ``(transport; factor_a, factor_b)``
with coefficients c_k, so that

    D_eps = sum_k c_k * int grad(phi_eps)(l) . delta(transport) (delta a (.) delta b) dl

and the matching structure combination sum_k sigma_k S_k with sigma_k = -4 c_k.
Coefficients are exact rationals, optionally multiplied by alpha**2.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import ConfigError

SCALAR_SLOTS = ("theta",)
VECTOR_SLOTS = ("v", "b", "omega", "u", "h", "H")
TENSOR_SLOTS = ("tau",)
SLOTS = SCALAR_SLOTS + VECTOR_SLOTS + TENSOR_SLOTS
GRADIENT_PREFIX = "grad:"

SIGNED_PRODUCT_NOTE = (
    "mixed pairings such as (delta v . delta b) are signed products, not absolute values"
)
BOX_AVERAGE_NOTE = "verdicts concern box-averaged quantities, not pointwise distributions"


class Contraction(str, Enum):
    # delta(transport)_i paired with the direction; factors fully contracted
    SCALAR_PAIR = "scalar_pair"
    # direction on the first derivative factor: dir_i du_j d(d_k u_i) d(d_k u_j)
    CLARK_CROSS = "clark_cross"


def expression_slot(expression):
    """Name of the slot an expression such as ``grad:u`` reads."""
    if expression.startswith(GRADIENT_PREFIX):
        return expression[len(GRADIENT_PREFIX):]
    return expression


@dataclass(frozen=True)
class TermSpec:
    transport: str
    factor_a: str
    factor_b: str
    coefficient: Fraction
    alpha_power: int = 0
    contraction: Contraction = Contraction.SCALAR_PAIR

    def __post_init__(self):
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        if self.coefficient == 0:
            raise ConfigError("term coefficients must be nonzero")
        if self.alpha_power not in (0, 2):
            raise ConfigError("alpha enters only as alpha**2")
        for expression in (self.transport, self.factor_a, self.factor_b):
            if expression_slot(expression) not in SLOTS:
                raise ConfigError("unknown field expression {!r}".format(expression))
        if self.contraction is Contraction.CLARK_CROSS and not (
            self.factor_a.startswith(GRADIENT_PREFIX) and self.factor_b.startswith(GRADIENT_PREFIX)
        ):
            raise ConfigError("the cross pattern contracts two gradient factors")

    def value(self, alpha=0.0):
        """Numerical coefficient for a given alpha."""
        return float(self.coefficient) * float(alpha) ** self.alpha_power

    @property
    def s_coefficient(self):
        return -4 * self.coefficient

    @property
    def slots(self):
        return {expression_slot(e) for e in (self.transport, self.factor_a, self.factor_b)}

    def label(self):
        alpha = " a^2" if self.alpha_power else ""
        tag = "" if self.contraction is Contraction.SCALAR_PAIR else " [{}]".format(
            self.contraction.value
        )
        return "{}{} ({}; {},{}){}".format(
            self.coefficient, alpha, self.transport, self.factor_a, self.factor_b, tag
        )


@dataclass(frozen=True)
class FunctionalCatalogEntry:
    id: str
    d_terms: tuple
    s_coefficients: tuple
    description: str = ""
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "d_terms", tuple(self.d_terms))
        object.__setattr__(self, "s_coefficients", tuple(Fraction(s) for s in self.s_coefficients))
        if len(self.s_coefficients) != len(self.d_terms):
            raise ConfigError("{}: one structure coefficient per term".format(self.id))
        for term, sigma in zip(self.d_terms, self.s_coefficients):
            if sigma != -4 * term.coefficient:
                raise ConfigError(
                    "{}: structure coefficient {} breaks sigma = -4 c for {}".format(
                        self.id, sigma, term.label()
                    )
                )

    @property
    def uses_alpha(self):
        return any(term.alpha_power for term in self.d_terms)

    @property
    def required_fields(self):
        slots = set()
        for term in self.d_terms:
            slots |= term.slots
        ordered = tuple(s for s in SLOTS if s in slots)
        return ordered + (("alpha",) if self.uses_alpha else ())

    def notes_for_report(self):
        return (BOX_AVERAGE_NOTE, SIGNED_PRODUCT_NOTE) + tuple(self.notes)


def _entry(id, terms, description, notes=()):
    specs = tuple(TermSpec(*t) if not isinstance(t, TermSpec) else t for t in terms)
    return FunctionalCatalogEntry(
        id, specs, tuple(-4 * t.coefficient for t in specs), description, tuple(notes)
    )


Q = Fraction
_ALPHA_SQUARED = 2

ELSASSER_NOTE = (
    "each Elsasser energy is transported by the opposite Elsasser field, the form its "
    "energy balance produces; the compact form of the law writes the transport on the same field"
)
MOD_LERAY_NOTE = (
    "second structure term uses the fully contracted pattern (d_k u_j, d_k u_j); "
    "the definition elsewhere writes (d_k u_i, d_k u_j)"
)
HELICITY_NOTE = (
    "the helicity law is implemented as stated, without reconciling it with the "
    "older structure-function relation"
)

CATALOG = {
    entry.id: entry
    for entry in (
        _entry("EULER_ENERGY", [("v", "v", "v", Q(-1, 4))], "energy of the Euler equations"),
        _entry("TEMP", [("v", "theta", "theta", Q(-1, 4))], "passive temperature energy"),
        _entry(
            "ELSASSER_PLUS",
            [("h", "u", "u", Q(-1, 4))],
            "energy of u = v + b in Elsasser variables",
            [ELSASSER_NOTE],
        ),
        _entry(
            "ELSASSER_MINUS",
            [("u", "h", "h", Q(-1, 4))],
            "energy of h = v - b in Elsasser variables",
            [ELSASSER_NOTE],
        ),
        _entry(
            "MHD_ENERGY",
            [("v", "v", "v", Q(-1, 4)), ("v", "b", "b", Q(-1, 4)), ("b", "v", "b", Q(1, 2))],
            "total MHD energy in primitive variables",
        ),
        _entry(
            "MHD_CROSS",
            [("v", "v", "b", Q(-1, 2)), ("b", "v", "v", Q(1, 4)), ("b", "b", "b", Q(1, 4))],
            "MHD cross-helicity in primitive variables",
        ),
        _entry(
            "HELICITY",
            [("v", "omega", "v", Q(-1, 2)), ("omega", "v", "v", Q(1, 4))],
            "helicity of the Euler equations",
            [HELICITY_NOTE],
        ),
        _entry(
            "OLDROYD",
            [("v", "v", "v", Q(-1, 4)), ("v", "tau", "tau", Q(-1, 4))],
            "Oldroyd-B energy with Frobenius pairing of the stress",
        ),
        _entry("LERAY_ALPHA", [("u", "v", "v", Q(-1, 4))], "Leray-alpha energy"),
        _entry(
            "EULER_ALPHA",
            [("u", "u", "u", Q(-1, 4)), ("u", "grad:u", "grad:u", Q(-1, 2), _ALPHA_SQUARED)],
            "Euler-alpha energy",
        ),
        _entry(
            "MOD_LERAY_ALPHA",
            [("u", "u", "u", Q(-1, 4)), ("u", "grad:u", "grad:u", Q(-1, 2), _ALPHA_SQUARED)],
            "modified Leray-alpha energy",
            [MOD_LERAY_NOTE],
        ),
        _entry(
            "CLARK_ALPHA",
            [
                ("u", "u", "u", Q(-1, 4)),
                TermSpec("u", "grad:u", "grad:u", Q(-1, 2), _ALPHA_SQUARED, Contraction.CLARK_CROSS),
                ("u", "grad:u", "grad:u", Q(-1, 4), _ALPHA_SQUARED),
            ],
            "Clark-alpha energy",
        ),
        _entry(
            "LERAY_MHD_ENERGY",
            [("u", "v", "v", Q(-1, 4)), ("u", "H", "H", Q(-1, 4)), ("H", "v", "H", Q(1, 2))],
            "Leray-alpha MHD energy",
        ),
        _entry(
            "LERAY_MHD_CROSS",
            [("u", "v", "H", Q(-1, 2)), ("H", "v", "v", Q(1, 4)), ("H", "H", "H", Q(1, 4))],
            "Leray-alpha MHD cross-helicity",
        ),
    )
}


def get_entry(entry_id):
    try:
        return CATALOG[entry_id]
    except KeyError:
        raise ConfigError(
            "unknown catalog entry {!r}; choose from {}".format(entry_id, sorted(CATALOG))
        ) from None
