"""Negotiations transcribed from the figures, shipped as NGT files."""
from __future__ import annotations

from importlib import resources

FILES = {
    "FIG1L": "fig1l.ngt",
    "FIG1M": "fig1m.ngt",
    "FIG1R": "fig1r.ngt",
    "FIG1R-MOD": "fig1r_mod.ngt",
    "FIG1L-MOD": "fig1l_mod.ngt",
    "NODOM": "nodom.ngt",
    "ANTI-F": "anti_f.ngt",
    "ANTI-C": "anti_c.ngt",
    "DATA1": "data1.ngt",
    "DATA1-ACYC": "data1_acyc.ngt",
}


def text(name: str) -> str:
    return resources.files(__package__).joinpath(FILES[name]).read_text()


def path(name: str):
    return resources.files(__package__).joinpath(FILES[name])


def load(name: str):
    from ..ngt import parse_ngt
    return parse_ngt(text(name))
