#!/usr/bin/env python3
"""Convert the UCI Statlog `german.data` file into the 10-column CSV used by potlab.

Usage: convert_statlog.py german.data > data/german_credit.csv

Column mapping (attribute numbers follow the UCI documentation):

  age              <- A13 (age in years)
  sex              <- A9: A92, A95 -> female; A91, A93, A94 -> male
  job              <- A17: A171..A174 -> 0..3
  housing          <- A15: A151 rent, A152 own, A153 free
  saving_account   <- A6: A61 little, A62 moderate, A63 quite rich, A64 rich, A65 unknown
  checking_account <- A1: A11 little, A12 moderate, A13 rich, A14 unknown
  credit_amount    <- A5
  duration         <- A2 (months)
  purpose          <- A4: A40/A41 car, A42 furniture/equipment, A43 radio/TV,
                      A44 domestic appliances, A45 repairs, A46/A48 education,
                      A49 business, A47/A410 vacation/others
  label            <- class: 1 repaid, 2 default
"""

import csv
import sys

SEX = {"A91": "male", "A92": "female", "A93": "male", "A94": "male", "A95": "female"}
JOB = {"A171": "0", "A172": "1", "A173": "2", "A174": "3"}
HOUSING = {"A151": "rent", "A152": "own", "A153": "free"}
SAVING = {"A61": "little", "A62": "moderate", "A63": "quite rich", "A64": "rich", "A65": "unknown"}
CHECKING = {"A11": "little", "A12": "moderate", "A13": "rich", "A14": "unknown"}
PURPOSE = {
    "A40": "car", "A41": "car", "A42": "furniture/equipment", "A43": "radio/TV",
    "A44": "domestic appliances", "A45": "repairs", "A46": "education",
    "A47": "vacation/others", "A48": "education", "A49": "business", "A410": "vacation/others",
}
LABEL = {"1": "repaid", "2": "default"}


def main(path):
    out = csv.writer(sys.stdout, lineterminator="\n", quoting=csv.QUOTE_NONNUMERIC)
    sys.stdout.write("age,sex,job,housing,saving_account,checking_account,"
                     "credit_amount,duration,purpose,label\n")
    with open(path) as fh:
        for line in fh:
            f = line.split()
            if not f:
                continue
            out.writerow([
                int(f[12]), SEX[f[8]], int(JOB[f[16]]), HOUSING[f[14]], SAVING[f[5]],
                CHECKING[f[0]], int(f[4]), int(f[1]), PURPOSE[f[3]], LABEL[f[20]],
            ])


if __name__ == "__main__":
    main(sys.argv[1])
