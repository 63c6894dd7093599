"""Exception hierarchy. ``exit_code`` is what the CLI returns for each family."""
from __future__ import annotations


class ProdsearchError(Exception):
    exit_code = 1


class DataError(ProdsearchError):
    exit_code = 2


class NumericError(ProdsearchError, ArithmeticError):
    exit_code = 3


# ingestion
class MalformedRow(DataError):
    def __init__(self, path, line: int, reason: str = ""):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: malformed row{': ' + reason if reason else ''}")


class MissingDescription(DataError):
    def __init__(self, product_uid: int):
        self.product_uid = product_uid
        super().__init__(f"product {product_uid} has no description")


class RelevanceOutOfRange(DataError):
    def __init__(self, instance_id: int, value: float):
        self.instance_id = instance_id
        self.value = value
        super().__init__(f"instance {instance_id}: relevance {value} outside [1, 3]")


class EmptyCorpus(DataError):
    pass


# scoring / learning
class DimensionMismatch(NumericError, ValueError):
    pass


class ZeroProbabilityTerm(NumericError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"term {token!r} has zero probability under the smoothed model")


class EmptyVocabulary(NumericError):
    pass


class AllTokensUnknown(NumericError):
    pass


class ZeroVector(NumericError):
    pass


class EmptyDocument(NumericError):
    pass


class LengthMismatch(NumericError, ValueError):
    pass


class EmptyInput(NumericError, ValueError):
    pass


class ConstantSequence(NumericError):
    pass


class TooFewInstances(NumericError, ValueError):
    pass


class NotADistribution(NumericError, ValueError):
    pass


class SingleClassData(NumericError):
    pass
