class RGatherError(ValueError):
    pass


class DimensionMismatchError(RGatherError):
    pass


class OracleCapError(RGatherError):
    pass


class PartitionError(RGatherError):
    pass


class UnknownPointError(RGatherError):
    pass


class EmptyStructureError(RGatherError):
    pass


class InputFormatError(RGatherError):

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = 'line ' + str(line) + ': ' + message
        super().__init__(message)


# Raised when no probed scale yields a valid clustering.
class InfeasibleError(RuntimeError):
    pass
