import json

import pytest

from xlk import build_parser, run


def test_quotient_claim_holds(capsys):
    assert run(["quotient-claim", "--braid", "s1 S2 s1 S2 s1"]) == 0
    assert "claim holds" in capsys.readouterr().out


def test_quotient_claim_fails(capsys):
    assert run(["quotient-claim", "--braid", "s1 s2 s1 s2 s1"]) == 2
    assert "claim fails" in capsys.readouterr().out


def test_quotient_claim_json(capsys):
    assert run(["quotient-claim", "--name", "10_99", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["holds"] is True
    assert payload["seed"] == 42


def test_riley(capsys):
    assert run(["riley", "--two-bridge", "3/1"]) == 0
    assert capsys.readouterr().out.strip() == "u + m^2 - 1 + m^-2"


def test_trace_action(capsys):
    assert run(["trace-action", "--braid", "s1"]) == 0
    out = capsys.readouterr().out
    assert "Trace action of" in out
    assert "False" not in out


def test_turks_head(capsys):
    assert run(["turks-head", "3", "5"]) == 0
    assert "half: s1 S2 s1 S2 s1" in capsys.readouterr().out


def test_turks_head_link_is_negative():
    # Th(3, 3) closes up to the Borromean rings
    assert run(["turks-head", "3", "3"]) == 2


def test_domain_error_exits_with_1(capsys):
    assert run(["turks-head", "4", "3"]) == 1
    assert "Error" in capsys.readouterr().err


def test_unknown_named_braid(capsys):
    assert run(["quotient-claim", "--name", "no_such_knot"]) == 1


def test_bad_subcommand():
    with pytest.raises(SystemExit) as info:
        run(["untie"])
    assert info.value.code == 1


def test_bad_configuration(capsys):
    assert run(["riley", "--two-bridge", "3/1", "--count", "0"]) == 1
    assert "Invalid configuration" in capsys.readouterr().err


def test_report_to_file(tmp_path, capsys):
    target = tmp_path / "riley.json"
    assert run(["riley", "--two-bridge", "5/2", "--json", "-o", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["two_bridge"] == "5/2"


def test_every_command_is_registered():
    parser = build_parser()
    names = set(parser._subparsers._group_actions[0].choices)
    assert {
        "trace-action", "quotient-claim", "u-points", "riley", "construct1", "parabolic",
        "construct2", "turks-head", "certify-10-98", "certify-10-99", "certify-10-123", "verify",
    } <= names
