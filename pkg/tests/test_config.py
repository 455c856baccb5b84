import math

import pytest
from pydantic import ValidationError

from ffade.config import PRESETS, HyperParams, OptimizerConfig, load_config_file, resolve_params, suggest_params
from ffade.errors import ConfigError


class TestHyperParams:
    def test_defaults(self):
        hp = HyperParams(t_setup=100)
        assert hp.alpha == 0.999
        assert hp.mem_limit == 200
        assert hp.dim == 100
        assert hp.f_th_init == pytest.approx(16.7e-3)
        assert hp.optimizer.epochs_for("global") == hp.optimizer.epochs

    @pytest.mark.parametrize("raw", ["inf", "Unbounded", "none", math.inf, None])
    def test_unbounded_mem_limit(self, raw):
        assert HyperParams(t_setup=1, mem_limit=raw).mem_limit is None

    @pytest.mark.parametrize(
        "kw",
        [{"alpha": 1.0}, {"alpha": -0.1}, {"mem_limit": 0}, {"dim": 0}, {"w_upd": 0}, {"f_th_init": math.inf}],
    )
    def test_rejects_out_of_range(self, kw):
        with pytest.raises(ValidationError):
            HyperParams(t_setup=1, **kw)

    def test_frozen_and_strict_keys(self):
        hp = HyperParams(t_setup=1)
        with pytest.raises(ValidationError):
            hp.alpha = 0.5
        with pytest.raises(ValidationError):
            HyperParams(t_setup=1, beta=0.5)

    def test_setup_epochs(self):
        cfg = OptimizerConfig(epochs=3, setup_epochs=50)
        assert cfg.epochs_for("global") == 50
        assert cfg.epochs_for("local") == 3

    def test_header_items(self):
        items = dict(HyperParams(t_setup=5, mem_limit=None).header_items())
        assert items["mem_limit"] == "inf"
        assert items["t_setup"] == "5"
        assert items["undirected"] == "false"
        assert "step_size" in items


class TestResolveParams:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "run.env"
        cfg.write_text("alpha=0.95\ndim=16\nepochs=4\n", encoding="utf-8")
        hp = resolve_params(preset="darpa", config_path=cfg, overrides={"dim": 8, "alpha": None}, t_setup=50)
        assert hp.alpha == 0.95
        assert hp.dim == 8
        assert hp.mem_limit == 200
        assert hp.optimizer.epochs == 4
        assert hp.t_setup == 50

    def test_preset_t_setup_beats_fallback(self):
        hp = resolve_params(preset="enron", t_setup=5)
        assert hp.t_setup == 692000
        assert hp.w_upd == 10080
        assert hp.mem_limit is None

    def test_dblp_is_undirected(self):
        assert resolve_params(preset="dblp").undirected is True

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            resolve_params(preset="nope", t_setup=1)

    def test_missing_t_setup(self):
        with pytest.raises(ConfigError):
            resolve_params()

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("FFADE_SEED", "17")
        assert resolve_params(t_setup=1).seed == 17
        assert resolve_params(t_setup=1, overrides={"seed": 3}).seed == 3

    def test_every_preset_validates(self):
        for name in PRESETS:
            hp = resolve_params(preset=name, t_setup=10)
            assert hp.alpha == 0.999


class TestConfigFile:
    def test_unknown_key(self, tmp_path):
        p = tmp_path / "bad.env"
        p.write_text("gamma=1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="gamma"):
            load_config_file(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "none.env")

    def test_inf_mem_limit_and_bools(self, tmp_path):
        p = tmp_path / "run.env"
        p.write_text("# comment\nmem_limit=inf\nundirected=true\nt_setup=30\n", encoding="utf-8")
        hp = resolve_params(config_path=p)
        assert hp.mem_limit is None
        assert hp.undirected is True
        assert hp.t_setup == 30

    def test_bad_value_surfaces_as_validation_error(self, tmp_path):
        p = tmp_path / "run.env"
        p.write_text("alpha=2\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            resolve_params(config_path=p, t_setup=1)


class TestSuggestParams:
    def test_rule_of_thumb(self):
        s = suggest_params(100, 0.99)
        assert s["f_th_init"] == pytest.approx(0.01 * 0.99**100)
        assert s["mem_limit"] == 100

    def test_long_setup_capped_by_horizon(self):
        s = suggest_params(10_000, 0.99)
        assert s["mem_limit"] == int(math.log(0.01) / math.log(0.99))

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            suggest_params(10, 1.0)
