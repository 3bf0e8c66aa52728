from fractions import Fraction
from unittest import TestCase

from _helpers import ROOT  # noqa: F401

from lib.catalog import (
    BOX_AVERAGE_NOTE,
    CATALOG,
    SIGNED_PRODUCT_NOTE,
    Contraction,
    FunctionalCatalogEntry,
    TermSpec,
    expression_slot,
    get_entry,
)
from lib.errors import ConfigError

ENTRY_IDS = {
    "EULER_ENERGY",
    "TEMP",
    "ELSASSER_PLUS",
    "ELSASSER_MINUS",
    "MHD_ENERGY",
    "MHD_CROSS",
    "HELICITY",
    "OLDROYD",
    "LERAY_ALPHA",
    "EULER_ALPHA",
    "MOD_LERAY_ALPHA",
    "CLARK_ALPHA",
    "LERAY_MHD_ENERGY",
    "LERAY_MHD_CROSS",
}


class TestCatalog(TestCase):

    def test_every_law_is_present(self):
        assert set(CATALOG) == ENTRY_IDS

    def test_structure_coefficients_follow_dissipation(self):
        """Succeed if sigma_k = -4 c_k for every term of every entry."""
        for entry in CATALOG.values():
            for term, sigma in zip(entry.d_terms, entry.s_coefficients):
                assert sigma == -4 * term.coefficient == term.s_coefficient

    def test_single_field_laws(self):
        for entry_id in ("EULER_ENERGY", "TEMP", "ELSASSER_PLUS", "ELSASSER_MINUS"):
            (term,) = get_entry(entry_id).d_terms
            assert term.coefficient == Fraction(-1, 4)
            assert get_entry(entry_id).s_coefficients == (Fraction(1),)

    def test_required_fields(self):
        assert get_entry("TEMP").required_fields == ("theta", "v")
        assert get_entry("MHD_CROSS").required_fields == ("v", "b")
        assert get_entry("EULER_ALPHA").required_fields == ("u", "alpha")
        assert get_entry("LERAY_MHD_ENERGY").required_fields == ("v", "u", "H")
        assert get_entry("OLDROYD").required_fields == ("v", "tau")

    def test_alpha_terms(self):
        entry = get_entry("CLARK_ALPHA")
        assert entry.uses_alpha
        assert not get_entry("LERAY_ALPHA").uses_alpha
        cross = entry.d_terms[1]
        assert cross.contraction is Contraction.CLARK_CROSS
        assert cross.value(0.5) == -0.5 * 0.25
        assert cross.value(0.0) == 0.0
        assert expression_slot(cross.factor_a) == "u"

    def test_notes(self):
        notes = get_entry("ELSASSER_PLUS").notes_for_report()
        assert notes[:2] == (BOX_AVERAGE_NOTE, SIGNED_PRODUCT_NOTE)
        assert len(notes) == 3
        assert len(get_entry("MOD_LERAY_ALPHA").notes_for_report()) == 3
        assert len(get_entry("TEMP").notes_for_report()) == 2

    def test_unknown_entry(self):
        with self.assertRaises(ConfigError):
            get_entry("NAVIER_STOKES")


class TestTermValidation(TestCase):

    def test_zero_coefficient(self):
        with self.assertRaises(ConfigError):
            TermSpec("v", "v", "v", 0)

    def test_alpha_power(self):
        with self.assertRaises(ConfigError):
            TermSpec("u", "u", "u", Fraction(1, 4), 1)

    def test_unknown_expression(self):
        with self.assertRaises(ConfigError):
            TermSpec("p", "v", "v", Fraction(1, 4))

    def test_cross_pattern_needs_gradients(self):
        with self.assertRaises(ConfigError):
            TermSpec("u", "u", "grad:u", Fraction(1, 2), 2, Contraction.CLARK_CROSS)

    def test_entry_checks_sigma(self):
        term = TermSpec("v", "v", "v", Fraction(-1, 4))
        with self.assertRaises(ConfigError):
            FunctionalCatalogEntry("BAD", (term,), (Fraction(-1),))
        with self.assertRaises(ConfigError):
            FunctionalCatalogEntry("BAD", (term,), ())
