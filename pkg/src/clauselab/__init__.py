"""clauselab: a collaborative logic-programming workbench.

Core pieces: a reader/writer for an ISO-style term language, a sandboxed
query engine with tracing, semantic highlight support, git-compatible
versioned storage, a remote-engine protocol with HTTP endpoints, answer
rendering, and notebooks.
"""

__version__ = "0.1.0"

from .terms import Atom, Float, Integer, String, Struct, Term, Var  # noqa: F401
from .syntax import (OperatorTable, ParseError, ParseResult,  # noqa: F401
                     parse_term, standard_operators)
from .writer import write_term, writeq  # noqa: F401
from .engine import (Answer, Limits, Workspace, consult, solve,  # noqa: F401
                     wrap_solutions)
from .sandbox import Verdict, check_directive, safe_goal  # noqa: F401
from .store import Store, StoreError, blob_hash  # noqa: F401
from .service import Service, ServiceError, csv_export, rpc_client  # noqa: F401
