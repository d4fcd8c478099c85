"""Convert one data frame from an R .rda file to CSV."""

import argparse

import rdata


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("rda")
    parser.add_argument("name", help="object name inside the .rda file")
    parser.add_argument("csv")
    args = parser.parse_args()

    converted = rdata.read_rda(args.rda)
    frame = converted[args.name]
    # full precision so the predictions survive the round trip
    frame.to_csv(args.csv, index=False, float_format="%.17g")
    print(f"{args.name}: {len(frame)} rows, columns {list(frame.columns)}")


if __name__ == "__main__":
    main()
