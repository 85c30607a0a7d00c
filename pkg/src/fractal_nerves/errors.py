class NerveError(ValueError):
    # This equality method exists to make exact tests for exceptions much
    # simpler to write, at least for our own errors.
    def __eq__(self, other):
        return (other.__class__ == self.__class__) and other.args == self.args

    __hash__ = ValueError.__hash__


class InvalidSystemError(NerveError):
    pass


class InvalidWordError(NerveError):
    pass


class HorizonExceededError(NerveError):
    pass


class TupleArityError(NerveError):
    pass


class LevelMismatchError(NerveError):
    pass


class SubcomplexError(NerveError):
    pass


class BudgetExceededError(NerveError):
    def __init__(self, *args):
        super().__init__(*args)
        self.message = args[0]
        self.budget = args[1] if len(args) > 1 else None


class ConfigError(NerveError):
    pass


class VerificationError(NerveError):
    pass
