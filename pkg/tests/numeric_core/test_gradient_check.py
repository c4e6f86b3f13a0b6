import numpy as np
import pytest

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.gradient_check import check_gradient, relative_error
from mvnmt.numeric_core.graph import Graph


class TestGradientCheck:
    @pytest.mark.unittest
    def test_relative_error_of_zero_pair_is_zero(self):
        errors = relative_error(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 1.0]))
        np.testing.assert_allclose(errors, [0.0, 0.0, 0.5])

    @pytest.mark.unittest
    def test_correct_gradient_passes(self):
        parameters = {"w": np.array([[0.5, -1.0], [2.0, 0.1]])}

        report = check_gradient(
            lambda graph, nodes: ops.reduce_sum(ops.tanh(nodes["w"])), parameters
        )

        assert report.passed
        assert report.parameters[0].checked_elements == 4
        assert report.worst.max_relative_error < 1e-6

    @pytest.mark.unittest
    def test_wrong_backward_rule_is_detected(self):
        def doubled_gradient(graph: Graph, nodes):
            x = nodes["x"]
            wrong = graph.record(
                "wrong_square",
                (x,),
                x.value ** 2,
                lambda gradient: (4.0 * x.value * gradient,),
            )
            return ops.reduce_sum(wrong)

        report = check_gradient(doubled_gradient, {"x": np.array([1.0, -2.0])})

        assert not report.passed
        assert report.worst.name == "x"
        assert report.worst.max_relative_error == pytest.approx(0.5)

    @pytest.mark.unittest
    def test_element_cap_limits_checked_entries(self):
        parameters = {
            "big": np.linspace(-1.0, 1.0, 50).reshape(5, 10),
            "small": np.ones(3),
        }

        report = check_gradient(
            lambda graph, nodes: ops.add(
                ops.reduce_sum(ops.exp(nodes["big"])), ops.reduce_sum(nodes["small"])
            ),
            parameters,
            max_elements_per_parameter=7,
        )

        counts = report.to_dataframe().set_index("parameter")["elements"]
        assert counts["big"] == 7
        assert counts["small"] == 3
        assert report.passed

    @pytest.mark.unittest
    def test_parameters_are_left_unchanged(self):
        parameters = {"x": np.array([0.25, 0.5])}
        check_gradient(
            lambda graph, nodes: ops.reduce_sum(ops.exp(nodes["x"])), parameters
        )
        np.testing.assert_array_equal(parameters["x"], [0.25, 0.5])
