from pathlib import Path
from typing import Dict, List

import numpy as np

from mvnmt.numeric_core.gradient_check import check_gradient


class TestUtils:

    _name_local = "test_files"
    _name_output = "test_output"

    @staticmethod
    def get_output_test_data_dir(dir_name: str) -> Path:
        """
        Returns the full path of a directory containing generated
        data from the tests. If it does not exist it creates it.
        """
        directory = TestUtils.get_test_data_dir(dir_name, TestUtils._name_output)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    @staticmethod
    def get_local_test_file(filepath: str) -> Path:
        return Path(__file__).parent / TestUtils._name_local / filepath

    @staticmethod
    def get_test_data_dir(dir_name: str, test_data_name: str) -> Path:
        """
        Returns the desired directory relative to the test data.
        Avoiding extra code on the tests.
        """
        return Path(__file__).parent / test_data_name / dir_name

    @staticmethod
    def gru_shapes(prefix: str, hidden: int, inputs: int) -> Dict[str, tuple]:
        """Shapes of one GRU with biases, named like the model parameters."""
        shapes = {}
        for gate in ("W", "W_r", "W_o"):
            shapes["{}.{}".format(prefix, gate)] = (hidden, inputs)
        for gate in ("U", "U_r", "U_o"):
            shapes["{}.{}".format(prefix, gate)] = (hidden, hidden)
        for gate in ("b", "b_r", "b_o"):
            shapes["{}.{}".format(prefix, gate)] = (hidden,)
        return shapes

    @staticmethod
    def random_parameters(
        shapes: Dict[str, tuple], seed: int = 0
    ) -> Dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        return {name: rng.normal(scale=0.5, size=shape) for name, shape in shapes.items()}

    @staticmethod
    def assert_gradients_match(loss_builder, parameters: Dict[str, np.ndarray], **kwargs):
        """Fails with the worst offending parameter when the gradient check fails."""
        report = check_gradient(loss_builder, parameters, **kwargs)
        worst = report.worst
        assert report.passed, "{} has relative error {:.3e} at {}".format(
            worst.name, worst.max_relative_error, worst.worst_index
        )
        return report

    @staticmethod
    def write_lines(path: Path, lines: List[str]) -> Path:
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path
