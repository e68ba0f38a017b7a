"""DAG grammars for DRS parsing.

Pipeline: clause files describing discourse representation structures are
converted to rooted DAGs (boxes), a restricted DAG grammar is extracted
from a graph corpus (grammar), graphs are rebuilt or sampled by a
derivation engine (derive), a neural model scores derivation actions
(model), and predicted graphs are compared to gold ones by hill-climbing
triple matching (evaluate).
"""

__version__ = "0.1.0"

from .errors import DagrammarError  # noqa: F401
