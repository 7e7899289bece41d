"""Exception hierarchy shared by all indcert modules."""


class IndcertError(Exception):
    """Base class for every error raised by this package."""


# -- input format -----------------------------------------------------------

class SmtSyntaxError(IndcertError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{position[0]}:{position[1]}: {message}"
        super().__init__(message)


class UnsupportedConstruct(IndcertError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        where = f" at {position[0]}:{position[1]}" if position else ""
        super().__init__(f"unsupported construct {name!r}{where}")


# -- fragment restrictions --------------------------------------------------

class FragmentError(IndcertError):
    """The input lies outside the supported fragment."""


class NonUniformCoefficient(FragmentError):
    def __init__(self, fsym, coeffs):
        self.fsym = fsym
        self.coeffs = frozenset(coeffs)
        super().__init__(
            f"function {fsym} is applied with different coefficients of the "
            f"quantified variable: {sorted(self.coeffs)}")


class NestedFunctionArgument(FragmentError):
    def __init__(self, term):
        self.term = term
        super().__init__(f"function application inside an argument: {term}")


class ArityTooHigh(FragmentError, UnsupportedConstruct):
    def __init__(self, fsym, arity, position=None):
        self.fsym = fsym
        self.arity = arity
        self.name = fsym
        self.position = position
        IndcertError.__init__(
            self, f"function {fsym} has arity {arity}; only unary functions are supported")


class VariableOutsideQuantifier(FragmentError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"variable {name} occurs outside its quantifier")


class MultipleQuantifiedConjuncts(FragmentError):
    def __init__(self, count):
        self.count = count
        super().__init__(f"expected at most one quantified conjunct, found {count}")


class MultiVariableQuantifier(FragmentError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(
            f"quantifier over {len(self.names)} variables {self.names}; only one "
            "quantified variable is supported (rewrite by a change of variables first)")


class NestedQuantifier(FragmentError):
    def __init__(self, formula):
        self.formula = formula
        super().__init__("quantifiers must appear only at the top level of one conjunct")


class UnsupportedGuard(FragmentError):
    def __init__(self, guard):
        self.guard = guard
        super().__init__(f"unsupported guard {guard}: bounds must be integer numerals with lo <= hi")


class UndefinedOffset(FragmentError):
    def __init__(self, const):
        self.const = const
        super().__init__(f"argument offset depends on undefined constant {const}")


# -- solver backend ---------------------------------------------------------

class BackendError(IndcertError):
    """The external solver misbehaved."""


class SolverCrashed(BackendError):
    def __init__(self, stderr=""):
        self.stderr = stderr
        super().__init__(f"solver process died: {stderr[-500:]!s}")


class SolverTimeout(BackendError):
    def __init__(self, timeout_ms):
        self.timeout_ms = timeout_ms
        super().__init__(f"solver did not answer within {timeout_ms} ms")


class ProtocolError(BackendError):
    def __init__(self, reply):
        self.reply = reply
        super().__init__(f"unexpected solver reply: {reply!s:.500}")


# -- certificates and models ------------------------------------------------

class MalformedCertificate(IndcertError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class IncompleteModel(IndcertError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"solver model lacks a value for {missing}")


class PropagatorFailed(IndcertError):
    def __init__(self, z, detail=""):
        self.z = z
        super().__init__(f"no propagated values exist for instance x = {z}. {detail}".strip())
