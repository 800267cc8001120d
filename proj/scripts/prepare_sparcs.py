#!/usr/bin/env python3
"""Prepare the public SPARCS 2022 inpatient discharge CSV for fedglm.

Recodes the analysis variables to numeric/dummy columns, drops incomplete
or invalid rows, and writes one CSV per facility so that each hospital
acts as an independent data provider:

    facility_id, los, total_charges, gender_male, covid_positive, emergency_yes

Source: Hospital Inpatient Discharges (SPARCS De-Identified) 2022,
https://health.data.ny.gov/ (dataset id 5dtw-tffi). Download the full CSV
export before running this script.
"""

import argparse
import csv
import os
import sys
from collections import defaultdict

COLUMNS = {
    "facility": "Permanent Facility Id",
    "los": "Length of Stay",
    "charges": "Total Charges",
    "gender": "Gender",
    "covid": "COVID-19 Indicator",
    "emergency": "Emergency Department Indicator",
}


def parse_row(row):
    los_text = row[COLUMNS["los"]].strip()
    if not los_text or los_text.startswith("120"):  # "120 +" is censored
        return None
    try:
        los = float(los_text)
        charges = float(row[COLUMNS["charges"]].replace("$", "").replace(",", ""))
    except ValueError:
        return None
    if los <= 0 or charges <= 0:
        return None

    gender = row[COLUMNS["gender"]].strip().upper()
    if gender not in ("M", "F"):
        return None
    covid = row[COLUMNS["covid"]].strip().upper()
    emergency = row[COLUMNS["emergency"]].strip().upper()
    facility = row[COLUMNS["facility"]].strip()
    if not facility:
        return None
    return {
        "facility_id": facility,
        "los": los_text,
        "total_charges": charges,
        "gender_male": 1 if gender == "M" else 0,
        "covid_positive": 1 if covid in ("Y", "YES", "POSITIVE") else 0,
        "emergency_yes": 1 if emergency in ("Y", "YES") else 0,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv_path", help="downloaded SPARCS 2022 CSV")
    ap.add_argument("out_dir", help="directory for per-facility CSVs")
    args = ap.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    per_facility = defaultdict(list)
    dropped = 0
    with open(args.csv_path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in COLUMNS.values() if c not in reader.fieldnames]
        if missing:
            sys.exit(f"missing expected columns: {missing}; "
                     f"adjust COLUMNS for this data vintage")
        for row in reader:
            parsed = parse_row(row)
            if parsed is None:
                dropped += 1
                continue
            per_facility[parsed["facility_id"]].append(parsed)

    fields = ["los", "total_charges", "gender_male", "covid_positive",
              "emergency_yes"]
    kept = 0
    for facility, rows in sorted(per_facility.items()):
        if len(rows) < 2:
            dropped += len(rows)
            continue
        path = os.path.join(args.out_dir, f"facility_{facility}.csv")
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        kept += len(rows)
    print(f"wrote {len(per_facility)} facility files, {kept} rows "
          f"({dropped} dropped)")


if __name__ == "__main__":
    main()
