"""Regenerate the golden instance fixtures (one per benchmark row).

Run from the repository root:  python3 tools/make_fixtures.py
"""

from pathlib import Path

from ccmckp.instances import SCALE_IDS, generate_instance, write_instance

GOLDEN_SEED = 42

def main() -> None:
    out = Path(__file__).resolve().parent.parent / "fixtures"
    out.mkdir(exist_ok=True)
    for family in ("lab", "app"):
        for scale in SCALE_IDS:
            instance = generate_instance(family, scale, GOLDEN_SEED)
            path = out / f"{family}_{scale}_seed{GOLDEN_SEED}.json"
            write_instance(instance, path)
            print(f"wrote {path}")

if __name__ == "__main__":
    main()
