from __future__ import annotations

from smio.cli.application import main

if __name__ == "__main__":
    main()
