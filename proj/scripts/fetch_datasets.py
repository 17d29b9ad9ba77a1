# Copyright 2026 The MMFDL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Downloads benchmark CSVs into data/.

The MoleculeNet copies are used as published. Column names for the CLI:

  delaney  --smiles-col smiles --target-col "measured log solubility in mols per litre" --id-col "Compound ID"
  sampl    --smiles-col smiles --target-col expt --id-col iupac
  lipo     --smiles-col smiles --target-col exp --id-col CMPD_CHEMBLID
"""

import argparse
import shutil
import sys
import urllib.request
from pathlib import Path

BASE = "https://deepchemdata.s3-us-west-1.amazonaws.com/datasets/"
SOURCES = {
    "delaney": BASE + "delaney-processed.csv",
    "sampl": BASE + "SAMPL.csv",
    "lipo": BASE + "Lipophilicity.csv",
}


def fetch(name, out_dir, force):
    target = out_dir / f"{name}.csv"
    if target.exists() and not force:
        print(f"{target} exists")
        return
    tmp = target.with_suffix(".part")
    with urllib.request.urlopen(SOURCES[name], timeout=60) as response, open(tmp, "wb") as out:
        shutil.copyfileobj(response, out)
    tmp.replace(target)
    print(f"wrote {target}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", default=["delaney"], help=", ".join(SOURCES))
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    parser.add_argument("--force", action="store_true", help="overwrite existing files")
    args = parser.parse_args()
    unknown = sorted(set(args.names) - SOURCES.keys())
    if unknown:
        parser.error("unknown dataset: " + ", ".join(unknown))
    args.out.mkdir(parents=True, exist_ok=True)
    failed = False
    for name in args.names:
        try:
            fetch(name, args.out, args.force)
        except OSError as e:
            print(f"{name}: {e}", file=sys.stderr)
            failed = True
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
