"""Line-protocol evaluator used by the external-objective tests.

Speaks the wire protocol on stdin/stdout: "EVAL <smiles>" in,
"OK <float>" or "ERR <message>" out.  The default value is the heavy-atom
count (letters in the SMILES).  Modes (argv[1]) exercise failure paths:
  err-on-N   ERR reply whenever the molecule contains nitrogen
  hang       stall one request (timeout path), then behave
  garbage    reply with a malformed line once, then behave
  crash      exit immediately
The hang/garbage modes misbehave only while the sentinel file (argv[2])
does not exist, creating it on the way, so the replacement child a
worker pool starts after the failure behaves normally.
"""

import os
import sys
import time


def value_of(smiles):
    return float(sum(1 for ch in smiles if ch in "CNOF"))


def take_sentinel():
    if len(sys.argv) < 3:
        return True
    path = sys.argv[2]
    if os.path.exists(path):
        return False
    with open(path, "w") as fh:
        fh.write("spent\n")
    return True


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
    if mode == "crash":
        sys.exit(1)
    for line in sys.stdin:
        line = line.strip()
        if not line.startswith("EVAL "):
            sys.stdout.write("ERR bad request\n")
            sys.stdout.flush()
            continue
        smiles = line[5:]
        if mode == "hang" and take_sentinel():
            time.sleep(600)
        if mode == "garbage" and take_sentinel():
            sys.stdout.write("WHAT 1.0\n")
            sys.stdout.flush()
            continue
        if mode == "err-on-N" and "N" in smiles:
            sys.stdout.write("ERR nitrogen unsupported\n")
        else:
            sys.stdout.write("OK %.1f\n" % value_of(smiles))
        sys.stdout.flush()


if __name__ == "__main__":
    main()
