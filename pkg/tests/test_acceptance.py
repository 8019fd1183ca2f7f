"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line with the measured quantity and its pinned tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see the report lines, or
via the CLI as `cliquedyn suite --seed 0`.
"""

import pytest

from cliquedyn.acceptance import run_criterion


def _check(name):
    result = run_criterion(name)
    print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: "
          f"{result.detail} [{result.wall_s:.1f}s]")
    assert result.passed, f"{result.name}: {result.detail}"
    return result


def test_med_stationarity():
    _check("med-stationarity")


def test_med_balance():
    _check("med-balance")


def test_per_graph_law():
    _check("per-graph-law")


def test_fk_duality():
    _check("fk-duality")


def test_coupling_invariant():
    _check("coupling-invariant")


def test_spectrum_commutation():
    _check("spectrum-commutation")


def test_entropy_separation():
    _check("entropy-separation")


def test_med_gem_convergence():
    _check("med-gem-convergence")


def test_generator_convergence():
    _check("generator-convergence")


def test_martingale_property():
    _check("martingale-property")


def test_gem_stationarity():
    _check("gem-stationarity")
