"""End-to-end checks of the activemle command line. Usage: test_cli.py <activemle>"""

import json
import subprocess
import sys
import tempfile
import time
from pathlib import Path

CLI = sys.argv[1]
failures = []


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)


def check(name, cond, detail=""):
    print(("ok   " if cond else "FAIL ") + name + (f" ({detail})" if detail else ""))
    if not cond:
        failures.append(name)


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    (tmp / "three.csv").write_text("1,0\n0,1\n1,1\n")
    r = run("design", "--pool", tmp / "three.csv", "--theta", "0,0", "--m2", 2,
            "--out", tmp / "three.json")
    doc = json.loads((tmp / "three.json").read_text()) if r.returncode == 0 else {}
    weights = doc.get("design", {}).get("weights", [])
    check("design: three-point pool, m2=2", r.returncode == 0 and abs(sum(weights) - 2) <= 1e-9,
          r.stderr.strip())
    check("design: SDP export present", "sdp_form" in doc and len(doc["sdp_form"]["sigma"]) == 2)

    (tmp / "same.csv").write_text("a\n" + "1.5\n" * 6)
    r = run("design", "--pool", tmp / "same.csv", "--header", "--theta", "0.2", "--m2", 3)
    tau = json.loads(r.stdout)["design"]["tau_squared"] if r.returncode == 0 else None
    check("design: identical rows give rate d", tau is not None and abs(tau - 1) < 1e-9, str(tau))

    d = 10
    rows = ["1" + ",0" * (d - 1)] * 910
    for j in range(1, d):
        rows += [",".join("1" if k == j else "0" for k in range(d))] * 10
    (tmp / "e1ej.csv").write_text("\n".join(rows) + "\n")
    r = run("design", "--pool", tmp / "e1ej.csv", "--theta", ",".join(["1"] * d),
            "--m2", 1600, "--uncapped", "--out", tmp / "e1ej.json")
    tau = json.loads((tmp / "e1ej.json").read_text())["design"]["tau_squared"] if r.returncode == 0 else None
    check("design: e1/ej pool d=10 rate <= 4", tau is not None and tau <= 4, str(tau))

    r = run("design", "--pool", tmp / "three.csv", "--theta", "0,0", "--m2", 4)
    check("design: budget above n gives exit 3", r.returncode == 3, r.stderr.strip())
    (tmp / "bad.csv").write_text("1,2\n3\n")
    r = run("design", "--pool", tmp / "bad.csv", "--theta", "0,0", "--m2", 1)
    check("design: ragged CSV gives exit 2", r.returncode == 2, r.stderr.strip())
    r = run("design", "--pool", tmp / "e1ej.csv", "--theta", ",".join(["1"] * d), "--m2", 1600,
            "--uncapped", "--max-iterations", 1, "--tol", 1e-12, "--out", tmp / "partial.json")
    check("design: non-convergence gives exit 4 and writes the iterate",
          r.returncode == 4 and (tmp / "partial.json").exists(), r.stderr.strip())
    r = run("design", "--pool", tmp / "three.csv", "--family", "poisson", "--theta", "0,0", "--m2", 1)
    check("design: unknown family gives exit 2", r.returncode == 2)

    scenario = {
        "family": "logistic",
        "pool": {"generator": "gaussian", "d": 2, "n": 40, "seed": 3},
        "theta_star": [1.0, -0.5],
        "trials": 1,
        "m1": 20,
        "m2": [30],
        "theta_bound": 20,
    }
    (tmp / "smoke.json").write_text(json.dumps(scenario))
    r1 = run("run", "--scenario", tmp / "smoke.json", "--out", tmp / "a", "--seed", 5)
    r2 = run("run", "--scenario", tmp / "smoke.json", "--out", tmp / "b", "--seed", 5)
    files = [tmp / "a" / "report.json", tmp / "a" / "trials.csv"]
    check("run: smoke scenario exits 0 and writes files",
          r1.returncode == 0 and all(f.exists() for f in files), r1.stderr.strip())
    same = all((tmp / "a" / f).read_bytes() == (tmp / "b" / f).read_bytes()
               for f in ("report.json", "trials.csv")) if r2.returncode == 0 else False
    check("run: same seed gives byte-identical outputs", same)
    r3 = run("run", "--scenario", tmp / "smoke.json", "--out", tmp / "c", "--seed", 6)
    differs = r3.returncode == 0 and (tmp / "c" / "report.json").read_bytes() != files[0].read_bytes()
    check("run: --seed changes the outcome", differs)

    scenario["pool"] = {"generator": "identical", "d": 2, "n": 10}
    (tmp / "flat.json").write_text(json.dumps(scenario))
    r = run("run", "--scenario", tmp / "flat.json", "--out", tmp / "flat")
    check("run: rank-deficient pool gives exit 5", r.returncode == 5, r.stderr.strip())
    (tmp / "broken.json").write_text("{")
    r = run("run", "--scenario", tmp / "broken.json", "--out", tmp / "x")
    check("run: malformed scenario gives exit 2", r.returncode == 2)

    r = run("select", "--pool", tmp / "three.csv", "--theta-star", "1,2", "--m2", 3,
            "--uncapped", "--seed", 4)
    out = json.loads(r.stdout) if r.returncode == 0 else {}
    check("select: linear run skips stage 1 and spends m2 labels",
          out.get("labels_used") == 3 and out.get("stage1_skipped") is True, r.stderr.strip())
    (tmp / "labels.csv").write_text("0,1.0\n1,2.0\n")
    r = run("select", "--pool", tmp / "three.csv", "--labels", tmp / "labels.csv", "--m2", 3,
            "--uncapped")
    check("select: exhausted replay labels fail", r.returncode == 1 and "index" in r.stderr)

    r = run("verify", "--level", "bogus")
    check("verify: unknown level gives exit 2", r.returncode == 2)
    start = time.monotonic()
    r = run("verify", "--level", "fast")
    elapsed = time.monotonic() - start
    check("verify: fast level passes in under 60 s", r.returncode == 0 and elapsed < 60,
          f"{elapsed:.1f} s")
    r = run()
    check("no subcommand gives exit 2", r.returncode == 2)

sys.exit(1 if failures else 0)
