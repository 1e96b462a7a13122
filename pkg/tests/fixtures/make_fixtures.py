"""Regenerate the bundled synthetic fixtures.

Every file here is produced by ``logperiod synth`` from the parameter files
below with a fixed seed, so the fixtures can be rebuilt bit-for-bit:

    python tests/fixtures/make_fixtures.py
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from logperiod.cli import main
from logperiod.io import dumps

HERE = Path(__file__).resolve().parent

BUBBLE = {
    "t_c": 2009.833, "lambda": 2.0, "alpha": 0.45, "phi": 1.0,
    "A": 7.0, "B": -0.8, "C": 0.08, "shape": "cosine", "rise_fraction": 0.3,
    "orientation": "bubble",
}
# long decelerating structure that predates the series
STAGE_A = {
    "t_c": 2000.6, "lambda": 2.0, "alpha": 0.5, "phi": 2.0,
    "A": 6.5, "B": 0.3, "C": 0.05, "shape": "cosine", "rise_fraction": 0.3,
    "orientation": "antibubble",
}
STAGE_B = {
    "t_c": 2007.4, "lambda": 2.0, "alpha": 0.4, "phi": 3.5,
    "A": 0.0, "B": -0.25, "C": 0.03, "shape": "cosine", "rise_fraction": 0.3,
    "orientation": "bubble",
}
FORECAST = {
    "t_c": 2010.0, "lambda": 2.0, "alpha": 0.0, "phi": 0.0,
    "A": 0.0, "B": 0.0, "C": 1.0, "shape": "cosine", "rise_fraction": 0.3,
    "orientation": "bubble",
}


def _write(name, obj):
    (HERE / name).write_text(dumps(obj), encoding="utf-8")


def _omega(d):
    return dict(d, omega=2 * math.pi / math.log(d["lambda"]))


def build():
    _write("bubble_truth.json", _omega(BUBBLE))
    main(["synth", "--params", str(HERE / "bubble_truth.json"), "--from", "2002-01-01", "--to", "2007-02-23",
          "--n", "1000", "--noise", "0.002", "--seed", "11", "--output", str(HERE / "bubble.csv")])

    _write("stage_a.json", _omega(STAGE_A))
    two = {"component_a": _omega(STAGE_A), "component_b": _omega(STAGE_B), "t_lo": 2002.0, "t_hi": 2007.0}
    _write("two_component_truth.json", two)
    main(["synth", "--params", str(HERE / "two_component_truth.json"), "--from", "2002-01-01",
          "--to", "2007-01-01", "--n", "1000", "--noise", "0.001", "--seed", "12",
          "--output", str(HERE / "two_component.csv")])

    _write("forecast_params.json", _omega(FORECAST))

    (HERE / "five.csv").write_text(
        "date,value\n2020-01-01,10\n2020-01-02,11\n2020-01-03,12.5\n2020-01-06,12\n2020-01-07,13\n",
        encoding="utf-8")


if __name__ == "__main__":
    build()
    print(json.dumps(sorted(p.name for p in HERE.iterdir() if p.suffix in (".csv", ".json"))))
