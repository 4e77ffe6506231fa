import json

import pytest

from mvlayout.config import ScenarioConfig, load_config, parse_config, with_overrides
from mvlayout.errors import ConfigError


class TestParse:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg == ScenarioConfig()

    def test_round_trip(self):
        obj = {
            "seed": 4, "rooms": 2, "views": 5, "width": 128,
            "room": {"corners": [4, 6], "extent": [3, 6], "manhattan": False, "height": [2.7, 3.0]},
            "noise": {"multiplicativeSigma": 0.05, "occlusionArcs": [{"start": 0.1, "length": 0.2}],
                      "occludedViews": "half", "ratioSigma": 0.01},
            "consensus": {"strategy": "mean_after_mad", "iterations": 2, "visibilityGate": None},
            "costVolume": {"planes": 32, "dMax": 12.0, "alpha": "confidence", "planeMode": "strict-z"},
        }
        cfg = parse_config(obj)
        assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize("obj,path", [
        ({"bogus": 1}, "bogus"),
        ({"room": {"corner": [4, 4]}}, "room.corner"),
        ({"noise": {"occlusionArcs": [{"start": 0.1, "span": 0.2}]}}, "noise.occlusionArcs[0].span"),
        ({"consensus": {"strategy": "mode"}}, "consensus.strategy"),
        ({"costVolume": {"planes": 1}}, "costVolume.planes"),
        ({"views": "eight"}, "views"),
        ({"seed": 1.5}, "seed"),
        ({"costVolume": {"alpha": 2}}, "costVolume.alpha"),
        ({"room": {"manhattan": "yes"}}, "room.manhattan"),
        ({"cameraHeight": [1.6, 3.0]}, "cameraHeight"),
    ])
    def test_errors_carry_key_path(self, obj, path):
        with pytest.raises(ConfigError) as exc:
            parse_config(obj)
        assert exc.value.path == path
        assert str(exc.value).startswith(path)

    def test_half_occlusion(self):
        cfg = parse_config({"noise": {"occlusionArcs": [{"start": 0.0, "length": 0.2}], "occludedViews": "half"}})
        assert len(cfg.noise.for_view(0, 8).occlusion_arcs) == 1
        assert len(cfg.noise.for_view(4, 8).occlusion_arcs) == 0

    def test_load_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"seed": 3}')
        assert load_config(p).seed == 3
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_overrides(self):
        cfg = with_overrides(ScenarioConfig(), seed=9, outputs="x")
        assert cfg.seed == 9 and cfg.outputs == "x"
