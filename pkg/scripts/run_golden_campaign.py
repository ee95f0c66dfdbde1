#!/usr/bin/env python3
"""Run a small campaign against the committed golden fixtures.

Touches no trained models, so it works without torch installed and
finishes in a couple of seconds.  Useful as a smoke check and as a
minimal example of driving the engine from Python.
"""

import argparse
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nnfuzz.orchestrator import CampaignConfig, run_campaign

GOLDEN = os.path.normpath(
    os.path.join(os.path.dirname(__file__), "..", "fixtures", "golden")
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None,
                        help="work directory (default: a fresh temp dir)")
    args = parser.parse_args()

    out = args.out or tempfile.mkdtemp(prefix="golden-campaign-")
    config = CampaignConfig(
        classifier=os.path.join(GOLDEN, "classifier.json"),
        extractor=os.path.join(GOLDEN, "extractor.json"),
        gen_forward=os.path.join(GOLDEN, "gen_identity_fwd.json"),
        gen_backward=os.path.join(GOLDEN, "gen_identity_bwd.json"),
        dataset=os.path.join(GOLDEN, "dataset"),
        corpus=os.path.join(out, "corpus"),
        report=os.path.join(out, "report.json"),
        iterations=args.iterations,
        seed=args.seed,
    )
    report = run_campaign(config)

    initial, final = report["initial"], report["final"]
    print(f"iterations: {report['iterations_run']}")
    print(f"pool:       {initial['pool_size']} -> {final['pool_size']}")
    print(f"coverage:   {initial['nc_ratio']:.4f} -> {final['nc_ratio']:.4f}")
    print(f"findings:   {final['findings']}")
    print(f"artifacts:  {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
