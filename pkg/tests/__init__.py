from .utils import TestUtils
