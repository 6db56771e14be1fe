import pytest
from hypothesis import given
from hypothesis import strategies as st

from caucus.config import ConfigError, SimConfig, dump_config, parse_config, parse_config_text, with_overrides
from caucus.records import RecordError, canonical, dumps, loads, read_records, write_records


def test_minimal_config_defaults():
    c = parse_config_text("# nothing set\n")
    assert c == SimConfig()
    assert (c.join_delay, c.mode, c.group) == (5, "caucus", "strong")
    assert c.t == 5 and c.chain_length == c.rounds + 6


def test_full_config(tmp_path):
    p = tmp_path / "x.cfg"
    p.write_text("n = 7\nadversaries = 2  # the last two\nstrategy = grinder(500)\nceremony = false\nseed = 0x10\n")
    c = parse_config(p)
    assert (c.n, c.adversaries, c.strategy, c.grind_trials, c.ceremony, c.seed) == (7, 2, "grinder", 500, False, 16)
    assert c.honest == [0, 1, 2, 3, 4] and c.adversarial == [5, 6]


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("n = 3\nadversaries = 3\n", "adversaries", 2),
        ("advesaries = 1\n", "advesaries", 1),
        ("n = 3\nn = 4\n", "n", 2),
        ("\n\nrounds = many\n", "rounds", 3),
        ("ceremony = maybe\n", "ceremony", 1),
        ("mode = fast\n", "mode", 1),
        ("seed = -1\n", "seed", 1),
    ],
)
def test_config_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.key == key and info.value.line == line
    assert repr(key) in str(info.value)


def test_config_line_without_equals():
    with pytest.raises(ConfigError) as info:
        parse_config_text("n 3\n")
    assert info.value.line == 1


def test_dump_roundtrip():
    c = SimConfig(n=4, adversaries=1, strategy="offline", ceremony=False, group="toy")
    assert parse_config_text(dump_config(c)) == c
    assert with_overrides(c, seed=9, group=None).seed == 9


@given(st.lists(st.fixed_dictionaries({"kind": st.sampled_from(["a", "b"]),
                                       "x": st.integers(), "s": st.text(), "f": st.booleans()}), max_size=5))
def test_records_roundtrip(recs):
    assert loads(dumps(recs)) == recs


def test_records_canonical_and_errors(tmp_path):
    assert canonical({"b": 1, "a": "x", "kind": "k"}) == b'{"a":"x","b":1,"kind":"k"}'
    with pytest.raises(RecordError):
        dumps([{"kind": "k", "nested": [1]}])
    with pytest.raises(RecordError) as info:
        loads('{"kind":"a"}\n{not json\n')
    assert info.value.line == 2
    with pytest.raises(RecordError):
        loads('{"nokind":1}\n')
    p = tmp_path / "r.jsonl"
    write_records(p, [{"kind": "a", "v": 1}])
    assert read_records(p) == [{"kind": "a", "v": 1}]
