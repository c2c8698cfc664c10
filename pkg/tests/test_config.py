"""Run-configuration parsing and validation."""

from __future__ import annotations

import json

import pytest

from charterseg.config import (
    CONFIG_ENV_VAR,
    RunConfig,
    default_subsamples,
    load_config,
    parse_config,
)
from charterseg.errors import ConfigError
from charterseg.panel import Countries, FullSample, SizeHalf, YearRange
from charterseg.rescale import DEFAULT_PROXY_SPECS


def test_empty_document_gives_defaults():
    cfg = parse_config({})
    assert cfg == RunConfig()
    assert cfg.proxies == DEFAULT_PROXY_SPECS
    assert cfg.tree.min_leaf == 30
    assert cfg.tree.prune_rule == "min_cv"
    assert cfg.forest.n_trees == 2000
    assert cfg.selection.mode == "rf"
    assert cfg.rescale_scope == "subsample"
    assert cfg.seed == 0
    assert cfg.out == "study_out"


def test_default_subsamples_cover_nine_slices():
    subs = default_subsamples()
    assert [s.name for s in subs] == [
        "eurozone", "2005-2007", "2008-2009", "2010-2013", "2014-2016",
        "non_pigs", "pigs", "small", "large",
    ]
    assert subs[0].criterion == FullSample()
    assert subs[1].criterion == YearRange(2005, 2007)
    assert subs[6].criterion == Countries.pigs()
    assert subs[8].criterion == SizeHalf("large")


def test_full_document_round_trip():
    doc = {
        "data": {"path": "panel.csv", "columns": {"mve": "MarketCap"},
                 "window": [2005, 2016]},
        "proxies": [{"name": "C", "group": "C", "raw_field": "capital_ratio",
                     "direction": "decreasing", "mode": "quantile",
                     "threshold": None}],
        "rescale_scope": "full",
        "subsamples": [
            {"name": "all", "criterion": {"kind": "all"}},
            {"name": "crisis", "criterion": {"kind": "years", "start": 2008,
                                             "end": 2009}, "min_leaf": 15},
            {"name": "south", "criterion": {"kind": "countries",
                                            "codes": ["ES", "PT"]}},
            {"name": "big", "criterion": {"kind": "size", "half": "large"}},
        ],
        "tree": {"min_leaf": 25, "max_depth": 6, "cv_folds": 5,
                 "prune_rule": "one_se"},
        "forest": {"n_trees": 500, "mtry": 3, "min_leaf": 10},
        "selection": {"mode": "fixed", "fixed": ["C"], "forest_scope": "per_group"},
        "seed": 99,
        "out": "run1",
    }
    cfg = parse_config(doc)
    assert cfg.data.path == "panel.csv"
    assert cfg.data.columns == {"mve": "MarketCap"}
    assert cfg.data.window == (2005, 2016)
    assert len(cfg.proxies) == 1 and cfg.proxies[0].raw_field == "capital_ratio"
    assert cfg.rescale_scope == "full"
    assert [s.name for s in cfg.subsamples] == ["all", "crisis", "south", "big"]
    assert cfg.subsamples[1].criterion == YearRange(2008, 2009)
    assert cfg.subsamples[1].min_leaf == 15
    assert cfg.subsamples[2].criterion == Countries(("ES", "PT"))
    assert cfg.tree.max_depth == 6
    assert cfg.tree.prune_rule == "one_se"
    assert cfg.forest.mtry == 3
    assert cfg.selection.fixed == ("C",)
    assert cfg.seed == 99
    assert cfg.out == "run1"


def test_country_group_criteria():
    cfg = parse_config({"subsamples": [
        {"name": "p", "criterion": {"kind": "countries", "group": "pigs"}},
        {"name": "np", "criterion": {"kind": "countries", "group": "non_pigs"}},
    ]})
    assert cfg.subsamples[0].criterion == Countries.pigs()
    assert cfg.subsamples[1].criterion == Countries.non_pigs()


@pytest.mark.parametrize("doc, fragment", [
    ({"bogus": 1}, "unknown keys"),
    ({"data": {"path": "x", "oops": 2}}, "unknown keys"),
    ({"data": {"window": [2005]}}, "window"),
    ({"data": {"columns": ["a"]}}, "columns"),
    ({"proxies": []}, "non-empty"),
    ({"proxies": ["Capt"]}, "object"),
    ({"proxies": [{"name": "X"}]}, "missing key"),
    ({"rescale_scope": "banana"}, "rescale_scope"),
    ({"subsamples": []}, "non-empty"),
    ({"subsamples": [{"criterion": {"kind": "all"}}]}, "name"),
    ({"subsamples": [{"name": "a", "criterion": {"kind": "monthly"}}]}, "kind"),
    ({"subsamples": [{"name": "a", "criterion": {"kind": "years"}}]}, "years"),
    ({"subsamples": [{"name": "a", "criterion": {"kind": "countries"}}]}, "codes"),
    ({"subsamples": [{"name": "a", "criterion":
      {"kind": "countries", "group": "brics"}}]}, "pigs"),
    ({"subsamples": [{"name": "a", "criterion":
      {"kind": "size", "half": "medium"}}]}, "small or large"),
    ({"subsamples": [{"name": "a", "criterion": {"kind": "all"}},
                     {"name": "a", "criterion": {"kind": "all"}}]}, "duplicate"),
    ({"tree": {"prune_rule": "best"}}, "prune_rule"),
    ({"tree": {"cv_folds": 1}}, "cv_folds"),
    ({"selection": {"mode": "manual"}}, "mode"),
    ({"selection": {"forest_scope": "global"}}, "forest_scope"),
    ({"seed": -1}, "seed"),
    ({"seed": 2 ** 64}, "seed"),
])
def test_bad_documents_are_config_errors(doc, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(doc)


def test_non_object_root_rejected():
    with pytest.raises(ConfigError):
        parse_config(["not", "a", "config"])


def test_load_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 7, "out": "x"}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.seed == 7 and cfg.out == "x"

    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)


def test_env_var_name_is_stable():
    assert CONFIG_ENV_VAR == "CHARTERSEG_CONFIG"
