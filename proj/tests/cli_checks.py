"""Exit-code and round-trip contract of the spanner CLI.

usage: cli_checks.py <spanner binary> <work dir>
"""
import json
import os
import subprocess
import sys

cli, work = sys.argv[1], sys.argv[2]
os.makedirs(work, exist_ok=True)
failures = []


def path(name):
    return os.path.join(work, name)


def run(args, expect, needle=None):
    proc = subprocess.run([cli] + args, capture_output=True, text=True)
    ok = proc.returncode == expect
    if needle is not None and needle not in proc.stderr + proc.stdout:
        ok = False
    print(("ok   " if ok else "FAIL ") + f"exit {proc.returncode} (want {expect}): {' '.join(args)}")
    if not ok:
        failures.append(args)
        print(proc.stdout[-2000:], proc.stderr[-2000:])
    return proc


pts = path("pts.txt")
run(["gen", "--kind", "clustered", "--n", "120", "--d", "8", "--seed", "3", "--out", pts], 0)
run(["gen", "--kind", "sphere", "--n", "0", "--d", "8", "--out", path("none.txt")], 3)
run(["gen", "--kind", "nonsense", "--n", "10", "--d", "8", "--out", path("x.txt")], 3)

graph, manifest = path("g.txt"), path("m.json")
run(["build", "--points", pts, "--mode", "undirected", "--eps", "0.5", "--seed", "2",
     "--threads", "1", "--out-graph", graph, "--out-manifest", manifest], 0)
meta = json.load(open(manifest))
for key in ("command", "params", "input", "output", "report"):
    if key not in meta:
        failures.append(["manifest key", key])
run(["audit", "--points", pts, "--graph", graph, "--eps", "0.5", "--out", path("audit.json")], 0)
audit = json.load(open(path("audit.json")))
if audit["shortcut_violations"] != 0:
    failures.append(["audit reported shortcuts on a clean build"])
run(["replay", "--manifest", manifest, "--out-graph", path("g2.txt")], 0)
if open(graph, "rb").read() != open(path("g2.txt"), "rb").read():
    failures.append(["replay graph differs"])

run(["build", "--points", pts, "--eps", "1.5", "--out-graph", path("bad.txt")], 3)
run(["build", "--points", pts, "--eps", "0", "--out-graph", path("bad.txt")], 3)
run(["build", "--points", pts, "--mode", "sideways", "--out-graph", path("bad.txt")], 3)
run(["build", "--points", path("missing.txt"), "--out-graph", path("bad.txt")], 4)
with open(path("malformed.txt"), "w") as f:
    f.write("2 3\n0 0\n1 x\n2 2\n")
run(["build", "--points", path("malformed.txt"), "--out-graph", path("bad.txt")], 4, "line 3")
run(["frobnicate"], 3)

# A planted shortcut edge must make the audit fail with the invariant code.
with open(graph) as f:
    lines = f.readlines()
with open(path("shortcut.txt"), "w") as f:
    f.writelines(lines)
    f.write("data 0 data 119 0.001 0\n")
run(["audit", "--points", pts, "--graph", path("shortcut.txt"), "--eps", "0.5"], 2)

# Tampered manifest: replay must detect the digest mismatch.
meta["output"]["digest"] = "0" * 16
json.dump(meta, open(path("tampered.json"), "w"))
run(["replay", "--manifest", path("tampered.json"), "--out-graph", path("g3.txt")], 2)

a, b = path("a.txt"), path("b.txt")
run(["gen", "--kind", "gaussian", "--n", "32", "--d", "6", "--seed", "4", "--out", a], 0)
run(["gen", "--kind", "gaussian", "--n", "32", "--d", "6", "--seed", "5", "--out", b, "--binary"], 0)
proc = run(["emd", "--a", a, "--b", b, "--exact-check", "--threads", "1", "--out", "-"], 0)
res = json.loads(proc.stdout)
if not (res["exact"] - 1e-9 <= res["spanner"] <= 1.25 * res["exact"]):
    failures.append(["emd sandwich", res["spanner"], res["exact"]])
run(["emd", "--a", a, "--b", path("none.txt")], 4)

csv = path("bench.csv")
run(["bench", "--sizes", "64,128", "--seeds", "1", "--d", "16", "--pair-budget", "2000",
     "--threads", "1", "--out", csv], 0)
rows = open(csv).read().strip().splitlines()
if len(rows) != 3 or not rows[0].startswith("n,eps,mode"):
    failures.append(["bench csv", rows[:1]])

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
