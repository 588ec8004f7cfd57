"""Market files and the command line.

Markets are JSON files; the same data drives every subcommand of the
``contractmatch`` command. Reports are deterministic, so they can be diffed.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from contractmatch.io import dumps, load_spec, spec_to_dict, theorem2_spec

spec = theorem2_spec()
print(json.dumps(spec_to_dict(spec), sort_keys=True))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "market.json"
    path.write_text(dumps(spec_to_dict(spec)))
    assert load_spec(path).market == spec.market

    def cli(*args):
        done = subprocess.run([sys.executable, "-m", "contractmatch.cli", *args], capture_output=True, text=True)
        print(f"$ contractmatch {' '.join(args)}  [exit {done.returncode}]")
        print(done.stdout or done.stderr)

    cli("validate", str(path), "--axioms", "subs,lad", "--format", "text")
    cli("da", str(path), "--profile", "main", "--side", "hospitals", "--trace", "--format", "text")
    cli("audit", str(path), "--rule", "hospital-optimal", "--format", "text")
    cli("reproduce", "theorem4", "--k", "5", "--q", "2/5", "--format", "text")
    cli("audit", str(path), "--rule", "doctor-optimal", "--budget", "3")

    data = json.loads(path.read_text())
    data["hospital_prefs"]["h1"]["ranking"].remove([])
    path.write_text(json.dumps(data))
    cli("stable", str(path), "--profile", "main")
