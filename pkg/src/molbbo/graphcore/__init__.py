"""Hot graph kernels with a compiled core and a pure-Python fallback.

The Cython extension is preferred when importable; set MOLBBO_GRAPHCORE to
"python" or "compiled" to force a backend (the latter raises if the extension
is missing). Both backends produce byte-identical results.
"""

import os

from . import _pygraph

_forced = os.environ.get("MOLBBO_GRAPHCORE", "").strip().lower()

if _forced == "python":
    _impl = _pygraph
    BACKEND = "python"
else:
    try:
        from . import _cygraph as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise ImportError(
                "MOLBBO_GRAPHCORE=compiled but the molbbo.graphcore._cygraph "
                "extension is not built; reinstall with a C compiler available"
            )
        _impl = _pygraph
        BACKEND = "python"

MAX_ATOM_CODE = _pygraph.MAX_ATOM_CODE
VALENCES = _pygraph.VALENCES
MAX_VERTICES = _pygraph.MAX_VERTICES
OK = _pygraph.OK
ERR_EMPTY = _pygraph.ERR_EMPTY
ERR_BAD_TYPE = _pygraph.ERR_BAD_TYPE
ERR_BAD_ADJ = _pygraph.ERR_BAD_ADJ
ERR_VALENCE = _pygraph.ERR_VALENCE
ERR_DISCONNECTED = _pygraph.ERR_DISCONNECTED
ERR_TOO_MANY = _pygraph.ERR_TOO_MANY
OP_ADD = _pygraph.OP_ADD
OP_REMOVE = _pygraph.OP_REMOVE
OP_BOND = _pygraph.OP_BOND
OP_SUB = _pygraph.OP_SUB

used_valences = _impl.used_valences
is_connected = _impl.is_connected
connected_without_vertex = _impl.connected_without_vertex
connected_without_edge = _impl.connected_without_edge
validity_error = _impl.validity_error
canonical_perm = _impl.canonical_perm
shingle_codes = _impl.shingle_codes
list_mutations = _impl.list_mutations
apply_op = _impl.apply_op
