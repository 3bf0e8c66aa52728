import numpy as np

from _helpers import FieldTestCase

from lib.catalog import get_entry
from lib.correlation import CorrelationEngine
from lib.fieldset import FieldSet
from lib.functionals import PointwiseEvaluator
from lib.grid import VectorField3
from lib.mollifier import ball_rule, sphere_nodes, sphere_rule


class TestCorrelationEngine(FieldTestCase):

    def fields(self):
        return FieldSet.of(
            alpha=0.3,
            v=self.vector(),
            b=self.vector(seed=1),
            theta=self.scalar(),
            u=self.vector(seed=2),
        )

    def check_entry(self, entry_id, nodes):
        fields = self.fields()
        terms = get_entry(entry_id).d_terms
        engine = CorrelationEngine(fields, terms)
        evaluator = PointwiseEvaluator(fields, terms)
        expected = np.array([s.mean() for s in evaluator.term_sums(nodes)])
        np.testing.assert_allclose(engine.term_sums(nodes), expected, rtol=1e-9, atol=1e-12)

    def test_means_match_pointwise_evaluation(self):
        """Succeed if the cross-spectral means equal box means of the pointwise integrand."""
        nodes = sphere_nodes(sphere_rule(16), 0.37)
        for entry_id in ("TEMP", "MHD_CROSS", "EULER_ALPHA", "CLARK_ALPHA"):
            self.check_entry(entry_id, nodes)

    def test_ball_nodes(self):
        nodes = ball_rule(6, sphere_rule(8), 0.9).kernel_nodes()
        self.check_entry("MHD_ENERGY", nodes)

    def test_support_is_compact(self):
        fields = self.fields()
        engine = CorrelationEngine(fields, get_entry("TEMP").d_terms)
        assert 0 < engine.mode_count < self.grid.size // 10

    def test_zero_fields_have_no_support(self):
        zero = VectorField3.constant(self.grid, (0.0, 0.0, 0.0))
        engine = CorrelationEngine(FieldSet.of(v=zero), get_entry("EULER_ENERGY").d_terms)
        assert engine.mode_count == 0
        assert np.all(engine.mean_triples(np.ones((4, 3))) == 0.0)
