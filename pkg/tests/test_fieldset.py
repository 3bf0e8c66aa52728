import numpy as np

from _helpers import FieldTestCase

from lib.catalog import TermSpec, get_entry
from lib.errors import ConfigError
from lib.fieldset import FactorTable, FieldSet, component_triples, contract
from lib.grid import PeriodicGrid, ScalarField, SymTensorField3


class TestFieldSet(FieldTestCase):

    def test_binds_slots(self):
        fields = FieldSet.of(v=self.vector(), theta=self.scalar())
        assert "v" in fields and "b" not in fields
        assert fields.grid == self.grid
        with self.assertRaises(ConfigError):
            fields["b"]

    def test_validation(self):
        with self.assertRaises(ConfigError):
            FieldSet.of(pressure=self.scalar())
        with self.assertRaises(ConfigError):
            FieldSet.of(v=self.scalar())
        with self.assertRaises(ConfigError):
            FieldSet.of(v=self.vector(), theta=self.scalar(grid=PeriodicGrid(8)))
        with self.assertRaises(ConfigError):
            FieldSet.of()
        with self.assertRaises(ConfigError):
            FieldSet.of(alpha=-0.1, v=self.vector())

    def test_require_names_missing_slots(self):
        fields = FieldSet.of(v=self.vector())
        with self.assertRaises(ConfigError) as raised:
            fields.require(get_entry("MHD_ENERGY").d_terms)
        assert "b" in str(raised.exception)

    def test_negated(self):
        v = self.vector()
        flipped = FieldSet.of(alpha=0.2, v=v).negated()
        self.assert_close(flipped["v"], -v)
        assert flipped.alpha == 0.2


class TestFactorTable(FieldTestCase):

    def test_gradient_and_tensor_factors(self):
        tau = SymTensorField3(self.grid, np.ones((6,) + self.grid.shape))
        fields = FieldSet.of(v=self.vector(), u=self.vector(seed=1), tau=tau)
        table = FactorTable(fields, get_entry("OLDROYD").d_terms + get_entry("EULER_ALPHA").d_terms)
        assert table.stacks["grad:u"].shape == (9,) + self.grid.shape
        np.testing.assert_array_equal(table.pair_weights["tau"], [1, 1, 1, 2, 2, 2])
        np.testing.assert_array_equal(table.pair_weights["grad:u"], np.ones(9))

    def test_transport_must_be_vector(self):
        fields = FieldSet.of(theta=self.scalar())
        with self.assertRaises(ConfigError):
            FactorTable(fields, [TermSpec("theta", "theta", "theta", 1)])


class TestContraction(FieldTestCase):

    def test_scalar_pair_pattern(self):
        """Succeed if the TEMP integrand is (direction . dv) (dtheta)^2."""
        term = get_entry("TEMP").d_terms[0]
        rng = np.random.default_rng(0)
        dv = rng.normal(size=(3, 5))
        dtheta = rng.normal(size=(1, 5))
        direction = np.array([0.2, -0.5, 0.1])
        value = contract(term, direction, {"v": dv, "theta": dtheta}, {"theta": np.ones(1)})
        np.testing.assert_allclose(value, (direction @ dv) * dtheta[0] ** 2)

    def test_cross_pattern(self):
        term = get_entry("CLARK_ALPHA").d_terms[1]
        rng = np.random.default_rng(1)
        du = rng.normal(size=(3,))
        ga = rng.normal(size=(9,))
        direction = rng.normal(size=3)
        value = contract(term, direction, {"u": du, "grad:u": ga}, {"grad:u": np.ones(9)})
        assert term.factor_a == term.factor_b
        a = ga.reshape(3, 3)
        expected = sum(
            direction[i] * du[j] * a[k, i] * a[k, j] for i in range(3) for j in range(3) for k in range(3)
        )
        np.testing.assert_allclose(value, expected)

    def test_component_triples_reproduce_contraction(self):
        """Succeed if the scalar triples sum to the contracted integrand."""
        tau = SymTensorField3.from_stacked(
            self.grid, np.stack([self.scalar(seed=s).data for s in range(6)])
        )
        fields = FieldSet.of(v=self.vector(), u=self.vector(seed=3), tau=tau)
        terms = get_entry("OLDROYD").d_terms + get_entry("CLARK_ALPHA").d_terms
        table = FactorTable(fields, terms)
        direction = np.array([0.3, 0.4, -0.2])
        point = (1, 2, 3)
        stacks = {e: s[(slice(None),) + point] for e, s in table.stacks.items()}
        for term in terms:
            total = 0.0
            for i, a, b, c, weight, _ in component_triples(term, table):
                total += weight * direction[i] * stacks[a[0]][a[1]] * stacks[b[0]][b[1]] * stacks[c[0]][c[1]]
            expected = contract(term, direction, stacks, table.pair_weights)
            np.testing.assert_allclose(total, expected, rtol=1e-12)

    def test_scalar_slot_type(self):
        fields = FieldSet.of(theta=ScalarField.constant(self.grid, 1.0))
        assert isinstance(fields["theta"], ScalarField)
