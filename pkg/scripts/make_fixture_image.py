"""Write the deterministic synthetic test frame as a PNG."""
import argparse

from semcast.imaging import save_png, synthetic_frame


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--width", type=int, default=512)
    parser.add_argument("--height", type=int, default=512)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="fixture_frame.png")
    args = parser.parse_args()
    save_png(synthetic_frame(args.width, args.height, seed=args.seed), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
