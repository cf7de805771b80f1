#!/usr/bin/env python3
"""Convert the Welch-Goyal predictor workbook into CSV files for `ltls`.

The workbook is distributed from Amit Goyal's website and is not bundled
here. Download it by hand, then run

    python3 scripts/prepare_goyal.py PredictorData.xlsx data/

to write data/monthly.csv (yyyymm,Index,E12) and data/quarterly.csv
(yyyyq,Index,E12). Rows with a missing index level or earnings figure are
dropped. Requires pandas and openpyxl.
"""

import sys
from pathlib import Path

import pandas as pd


def export(book: Path, sheet: str, date_col: str, dest: Path) -> None:
    df = pd.read_excel(book, sheet_name=sheet)
    df = df[[date_col, "Index", "E12"]].dropna()
    df[date_col] = df[date_col].astype(int)
    df.to_csv(dest, index=False)
    print(f"{dest}: {len(df)} rows, {df[date_col].iloc[0]} .. {df[date_col].iloc[-1]}")


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__)
        return 2
    book, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    export(book, "Monthly", "yyyymm", out / "monthly.csv")
    export(book, "Quarterly", "yyyyq", out / "quarterly.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
