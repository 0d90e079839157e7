#!/usr/bin/env python3
"""End-to-end demo: export the built-in fixtures as OBJ files, write a
pipeline config, and run the full dataset -> cluster -> evaluate -> plan
pipeline into an output directory.

Usage: python scripts/run_fixture_pipeline.py [workdir]
"""

import json
import subprocess
import sys
from pathlib import Path

from stableplace.fixtures import standard_fixtures
from stableplace.mesh import save_obj


def main():
    workdir = Path(sys.argv[1] if len(sys.argv) > 1 else "pipeline_demo")
    workdir.mkdir(parents=True, exist_ok=True)
    mesh_paths = []
    for name, mesh in standard_fixtures().items():
        path = workdir / f"{name}.obj"
        save_obj(mesh, path)
        mesh_paths.append(str(path))

    config = {
        "mesh_paths": mesh_paths,
        "seed": 7,
        "drops_per_object": 100,
        "bandwidth_deg": 15.0,
        "score_threshold": 0.92,
        "output_dir": str(workdir / "out"),
        "plan_object": "cube",
        "plan_start": 0,
        "plan_goal": 1,
        "gripper": {"max_width_cm": 120.0},
    }
    config_path = workdir / "config.json"
    config_path.write_text(json.dumps(config, indent=2))

    subprocess.run(
        [sys.executable, "-m", "stableplace.cli", "pipeline", str(config_path)],
        check=True,
    )
    print(f"\noutputs in {workdir / 'out'}:")
    for p in sorted((workdir / "out").iterdir()):
        print(f"  {p.name}  ({p.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
