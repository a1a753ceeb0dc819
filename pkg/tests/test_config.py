import dataclasses

import pytest

from ciotrl.config import (ConfigError, SimConfig, dumps_config, load_config,
                           loads_config, make_config, parse_overrides,
                           reference_table, validate, with_updates)

EXPECTED_DEFAULTS = {
    "sigma2": 1e-3, "alpha": 4.0, "d_sp": 1.8, "d_ps": 1.8, "d_ss": 1.5,
    "T": 30, "tau": 1.0, "L": 18, "P_p": 0.2, "I_th": 0.01, "P_max": 0.1,
    "B0": 0.0, "B_max": 0.5, "E_max": 0.1, "mu": 0.9,
    "M": 30, "N": 30, "C_s": 20, "zeta_p": 0.8, "zeta_s": 0.6,
    "lambda_p": 15, "lambda_s": 15, "k": 2.0, "u": 1.0, "R_bs": 1.0,
    "w1": 0.4, "w2": 0.3, "w3": 0.3, "phi": 1.0,
    "episodes": 2000, "buffer_size": 10000, "batch_size": 256,
    "hidden_size": 256, "lr": 3e-4, "gamma_disc": 0.99, "polyak": 0.005,
    "alpha_ee": 0.2, "delta": 0.01,
    "eps_start": 1.0, "eps_end": 0.05, "eps_decay_episodes": 500,
    "td3_policy_delay": 2, "td3_noise_std": 0.2, "td3_noise_clip": 0.5,
    "explore_noise_std": 0.1,
    "pu_pattern_mode": "random-per-episode", "quantize_actions": False,
    "invert_pathloss": False, "seed": 0,
}


def test_defaults_match_reference_scenario():
    cfg = SimConfig()
    for key, expected in EXPECTED_DEFAULTS.items():
        assert getattr(cfg, key) == expected, key
    # the table above must be exhaustive so new fields get pinned too
    assert set(EXPECTED_DEFAULTS) == {f.name for f in dataclasses.fields(SimConfig)}


def test_defaults_validate():
    validate(SimConfig())


def test_empty_file_gives_defaults():
    assert loads_config("") == SimConfig()


def test_single_key_override():
    cfg = loads_config("T = 20\n")
    assert cfg.T == 20
    assert cfg.L == SimConfig().L


def test_parse_ignores_comments_sections_blanks():
    text = "\n".join(["# comment", "; also comment", "", "[slot structure]",
                      "T = 12", "  L =  6 ", ""])
    cfg = loads_config(text)
    assert (cfg.T, cfg.L) == (12, 6)


def test_typed_parsing():
    cfg = loads_config("tau = 1.5\nquantize_actions = true\n"
                       "pu_pattern_mode = fixed\nT = 25\n")
    assert cfg.tau == 1.5 and cfg.tau != 1  # float, not string
    assert cfg.quantize_actions is True
    assert cfg.pu_pattern_mode == "fixed"
    assert cfg.T == 25


@pytest.mark.parametrize("raw,expected", [
    ("true", True), ("1", True), ("yes", True), ("on", True),
    ("false", False), ("0", False), ("no", False), ("off", False),
    ("TRUE", True), ("False", False),
])
def test_bool_spellings(raw, expected):
    assert loads_config(f"quantize_actions = {raw}\n").quantize_actions is expected


@pytest.mark.parametrize("text,fragment", [
    ("nosuchkey = 1\n", "unknown key"),
    ("T = 10\nT = 20\n", "duplicate key"),
    ("T 20\n", "expected 'key = value'"),
    ("T = notanumber\n", "bad value"),
    ("quantize_actions = maybe\n", "not a boolean"),
])
def test_parse_errors_carry_line_info(text, fragment):
    with pytest.raises(ConfigError) as err:
        loads_config(text)
    assert "line" in str(err.value)
    assert fragment in str(err.value)


def test_round_trip_equality_and_bytes(tmp_path):
    cfg = make_config(T=22, L=9, tau=0.75, quantize_actions=True,
                      pu_pattern_mode="fixed", lr=1e-3)
    text = dumps_config(cfg)
    again = loads_config(text)
    assert again == cfg
    assert dumps_config(again) == text
    path = tmp_path / "conf.txt"
    path.write_text(text, encoding="utf-8")
    assert load_config(path) == cfg


def test_parse_overrides_typed():
    got = parse_overrides(["L=12", "tau=1.5", "quantize_actions=on"])
    assert got == {"L": 12, "tau": 1.5, "quantize_actions": True}


@pytest.mark.parametrize("pairs,fragment", [
    (["L"], "expected key=value"),
    (["bogus=1"], "unknown key"),
    (["L=1", "L=2"], "duplicate key"),
    (["T=abc"], "invalid literal"),
])
def test_parse_overrides_errors(pairs, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_overrides(pairs)


@pytest.mark.parametrize("overrides,field", [
    (dict(mu=1.5), "mu"),
    (dict(mu=-0.1), "mu"),
    (dict(L=40), "L"),                       # L > T
    (dict(T=10), "L"),                       # default L=18 > 10
    (dict(w1=0.5), "w1"),                    # weights no longer sum to 1
    (dict(B0=0.6), "B0"),                    # above capacity
    (dict(C_s=100), "C_s"),
    (dict(lambda_p=31), "lambda_p"),
    (dict(lambda_s=31), "lambda_s"),
    (dict(k=0.5), "k"),
    (dict(sigma2=0.0), "sigma2"),
    (dict(sigma2=-1.0), "sigma2"),
    (dict(tau=0.0), "tau"),
    (dict(gamma_disc=1.0), "gamma_disc"),
    (dict(gamma_disc=0.0), "gamma_disc"),
    (dict(polyak=0.0), "polyak"),
    (dict(delta=0.0), "delta"),
    (dict(delta=1.5), "delta"),
    (dict(eps_start=0.5, eps_end=0.9), "eps_start"),
    (dict(alpha_ee=-0.1), "alpha_ee"),
    (dict(phi=-1.0), "phi"),
    (dict(batch_size=64, buffer_size=32), "batch_size"),
    (dict(pu_pattern_mode="sometimes"), "pu_pattern_mode"),
    (dict(seed=-1), "seed"),
    (dict(E_max=-0.1), "E_max"),
    (dict(T=0), "T"),
    (dict(episodes=0), "episodes"),
    (dict(td3_noise_std=-0.1), "td3_noise_std"),
])
def test_validation_names_offending_field(overrides, field):
    with pytest.raises(ConfigError) as err:
        make_config(**overrides)
    assert str(err.value).startswith(field + ":")


def test_boundary_values_accepted():
    make_config(mu=0.0)
    make_config(mu=1.0)
    make_config(E_max=0.0)
    make_config(L=0)
    make_config(T=18)          # L == T
    make_config(C_s=0)
    make_config(B0=0.5)        # == B_max
    make_config(delta=1.0)
    make_config(polyak=1.0)
    make_config(eps_start=0.0, eps_end=0.0)


def test_with_updates_validates():
    cfg = SimConfig()
    assert with_updates(cfg, T=20, L=10).T == 20
    with pytest.raises(ConfigError):
        with_updates(cfg, T=5)  # L=18 > 5


def test_reference_table_documents_every_field():
    table = reference_table()
    for f in dataclasses.fields(SimConfig):
        assert f"`{f.name}`" in table
    assert "<class" not in table  # field types rendered as plain names
