"""Exception hierarchy shared by all modules."""


class GammaCostError(Exception):
    pass


class InvalidModel(GammaCostError):
    pass


class DegenerateConductivity(GammaCostError):
    pass


class DomainMismatch(GammaCostError):
    pass


class GridMismatch(GammaCostError):
    pass


class WindowTooSmall(GammaCostError):
    pass


class CflViolation(GammaCostError):
    pass


class NonfiniteValue(GammaCostError):
    pass


class SingularWeight(GammaCostError):
    pass


class SupportViolation(GammaCostError):
    pass


class RankineHugoniotViolation(GammaCostError):
    pass


class SingularConductivity(GammaCostError):
    pass


class SeparationViolated(GammaCostError):
    pass


class CurveCrossing(GammaCostError):
    pass


class ReductionFailed(GammaCostError):
    pass


class DecompositionDefect(GammaCostError):
    pass


class ShootingFailed(GammaCostError):
    pass


class ConfigError(GammaCostError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
