#!/usr/bin/env python3
"""
Run the entangled dimer scattering command-line tool
"""

import logging

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from src.cli import main  # noqa: E402
from src.config import LOG_LEVEL  # noqa: E402

if __name__ == "__main__":
    logging.basicConfig(
        level=LOG_LEVEL,
        format="%(asctime)s %(levelname)s::%(name)s::%(message)s",
    )
    print("🚀 Entangled Dimer Scattering")
    print("📖 Commands: pw-response, dcs-grid, polarization, oracle-check, flux-calib, two-fermion-check")
    print("\n" + "=" * 60 + "\n")

    raise SystemExit(main())
