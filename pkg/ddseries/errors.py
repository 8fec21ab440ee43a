class DDSeriesError(Exception):
    pass


#
# Validation errors
#
class DomainError(DDSeriesError):
    pass


class PoleError(DomainError):
    pass


class RegionError(DomainError):
    pass


class FitError(DomainError):
    pass


#
# Numerical outcomes
#
class AccuracyError(DDSeriesError):
    def __init__(self, message: str, bound: float):
        super().__init__(f"{message} (achieved bound {bound:.3e})")
        self.bound = bound


class InconclusiveError(DDSeriesError):
    def __init__(self, message: str, margins: tuple[float, ...] = ()):
        super().__init__(message)
        self.margins = margins
