class MopeError(Exception):
    """
    Mopelab Base Exception
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(msg)
        self.msg = msg
        self.loc = loc

    def __str__(self):
        return self.msg


class ConfigError(MopeError):
    """
    Error caused by an invalid, missing or unknown configuration key
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'ConfigError: {msg}')


class ShapeError(MopeError):
    """
    Error caused by mismatched array dimensions
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'ShapeError: {msg}')


class NumericError(MopeError):
    """
    Error caused by non-finite values where finite ones are required
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'NumericError: {msg}')


class DegenerateDataError(MopeError):
    """
    Error caused by data without any spread
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'DegenerateDataError: {msg}')


class PlanningError(MopeError):
    """
    Error caused by a planning call that produced no valid trajectory
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'PlanningError: {msg}')
        self.reason = msg


class PersistenceError(MopeError):
    """
    Error caused by failures reading or writing run artifacts
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'PersistenceError: {msg}')


class BoundError(MopeError):
    """
    Error caused by a bound evaluated outside its domain
    """

    def __init__(self, loc: str, msg: str):
        super().__init__(loc, f'BoundError: {msg}')
