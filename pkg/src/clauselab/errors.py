"""Engine errors as ISO-shaped error terms.

Executions fail with ``EngineError`` carrying an ``error(Formal, Context)``
term; the service layer serializes that term for clients.
"""

from __future__ import annotations

from .terms import Atom, Integer, Struct, Term, Var


class EngineError(Exception):
    """A query-level error; .term is the ISO error term."""

    def __init__(self, term: Term, message: str = ""):
        super().__init__(message or None)
        self.term = term
        self.message = message

    def __str__(self):
        return self.message or repr(self.term)


class ProtocolError(Exception):
    """Caller drove an iterator or engine outside its legal states."""


def _error(formal: Term, context: str) -> Struct:
    return Struct("error", (formal, Atom(context)))


def instantiation_error(context: str = "") -> EngineError:
    return EngineError(_error(Atom("instantiation_error"), context),
                       "arguments are not sufficiently instantiated")


def type_error(expected: str, culprit: Term, context: str = "") -> EngineError:
    formal = Struct("type_error", (Atom(expected), culprit))
    return EngineError(_error(formal, context),
                       f"type error: expected {expected}")


def domain_error(domain: str, culprit: Term, context: str = "") -> EngineError:
    formal = Struct("domain_error", (Atom(domain), culprit))
    return EngineError(_error(formal, context),
                       f"domain error: expected {domain}")


def existence_error(name: str, arity: int, context: str = "") -> EngineError:
    pi = Struct("/", (Atom(name), Integer(arity)))
    formal = Struct("existence_error", (Atom("procedure"), pi))
    return EngineError(_error(formal, context),
                       f"unknown procedure {name}/{arity}")


def permission_error(action: str, kind: str, culprit: Term,
                     context: str = "") -> EngineError:
    formal = Struct("permission_error",
                    (Atom(action), Atom(kind), culprit))
    return EngineError(_error(formal, context),
                       f"no permission to {action} {kind}")


def evaluation_error(what: str, context: str = "") -> EngineError:
    formal = Struct("evaluation_error", (Atom(what),))
    return EngineError(_error(formal, context), f"arithmetic: {what}")


def resource_error(what: str, context: str = "") -> EngineError:
    formal = Struct("resource_error", (Atom(what),))
    return EngineError(_error(formal, context), f"resource limit: {what}")


def aborted_error() -> EngineError:
    return EngineError(_error(Atom("aborted"), "abort"), "execution aborted")


def syntax_error_term(message: str) -> EngineError:
    formal = Struct("syntax_error", (Atom(message),))
    return EngineError(_error(formal, "read"), f"syntax error: {message}")
