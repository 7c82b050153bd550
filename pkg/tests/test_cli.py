import csv
import io
import json
import subprocess
import sys

import pytest
from gmpy2 import mpq

from e2pi import __version__, products
from e2pi.cli import CliConfig, CliError, load_config, run

ENVELOPE_KEYS = {"command", "parameters", "results", "timing", "tool_version"}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    monkeypatch.delenv("E2PI_CONFIG", raising=False)


COMMAND_ARGS = {
    "pi": ["pi", "--terms", "64", "--digits", "12"],
    "e": ["e", "--n", "100", "--digits", "12"],
    "verify": ["verify", "--steps", "S2,S4,S5", "--exact-max", "8", "--limit-start", "64",
               "--limit-count", "3"],
    "convergence": ["convergence", "--target", "pi", "--start", "16", "--count", "4"],
    "bench": ["bench", "--n", "50", "--repeats", "1"],
}


def _strings_only(v):
    if isinstance(v, dict):
        return all(_strings_only(x) for x in v.values())
    if isinstance(v, list):
        return all(_strings_only(x) for x in v)
    return v is None or isinstance(v, (str, bool))


# ---------------------------------------------------------------------------
# flag matrix

@pytest.mark.parametrize("cmd", sorted(COMMAND_ARGS))
@pytest.mark.parametrize("fmt", ["json", "csv", "text"])
def test_every_command_in_every_format(cmd, fmt):
    code, out, err = call(*COMMAND_ARGS[cmd], "--format", fmt)
    assert code == 0, err
    assert out.endswith("\n")
    if fmt == "json":
        env = json.loads(out)
        assert set(env) == ENVELOPE_KEYS
        assert env["command"] == cmd
        assert env["tool_version"] == __version__
        assert _strings_only(env)
        # round trip is byte-identical
        assert json.dumps(env, sort_keys=True, indent=2, ensure_ascii=True) + "\n" == out
    elif fmt == "csv":
        rows = list(csv.reader(io.StringIO(out)))
        assert len(rows) >= 2 and all(len(r) == len(rows[0]) for r in rows)
    else:
        assert out.startswith(f"e2pi {cmd}")


@pytest.mark.parametrize("cmd", sorted(COMMAND_ARGS))
def test_text_and_json_carry_the_same_numbers(cmd):
    _, js, _ = call(*COMMAND_ARGS[cmd], "--format", "json")
    _, txt, _ = call(*COMMAND_ARGS[cmd], "--format", "text")
    res = json.loads(js)["results"]
    for k, v in res.items():
        if isinstance(v, str) and k not in ("machine",) and v:
            assert f"{k}: {v}" in txt
    for row in res.get("rows", []):
        for cell in row:
            if cell and cell != res.get("machine"):
                if cmd == "bench" and row.index(cell) == 3:
                    continue  # wall times differ between runs
                assert cell in txt


@pytest.mark.parametrize("cmd", ["pi", "e", "convergence"])
def test_json_is_deterministic_apart_from_timing(cmd):
    a = json.loads(call(*COMMAND_ARGS[cmd], "--format", "json")[1])
    b = json.loads(call(*COMMAND_ARGS[cmd], "--format", "json")[1])
    a.pop("timing"), b.pop("timing")
    assert a == b


# ---------------------------------------------------------------------------
# command behaviour

def _json(*argv):
    code, out, err = call(*argv, "--format", "json")
    return code, (json.loads(out) if out else None), err


def test_pi_one_term():
    code, env, _ = _json("pi", "--terms", "1", "--digits", "10")
    assert code == 0
    assert env["results"]["estimate"] == "2.666666667"
    assert float(env["results"]["abs_error"]) == pytest.approx(0.4749, abs=1e-4)


def test_pi_accelerated():
    code, env, _ = _json("pi", "--accelerate", "--levels", "3", "--terms", "4096", "--precision-bits", "192")
    assert code == 0
    assert float(env["results"]["abs_error"]) <= 1e-10
    assert float(env["results"]["raw_abs_error"]) > 1e-5


def test_pi_auto_cap():
    code, env, err = _json("pi", "--terms", "auto", "--digits", "12")
    assert code == 2 and env is None
    assert "--accelerate" in err
    code, env, _ = _json("pi", "--terms", "auto", "--digits", "3")
    assert code == 0 and int(env["results"]["terms"]) == 786


def test_pi_auto_accelerated():
    code, env, _ = _json("pi", "--terms", "auto", "--digits", "12", "--accelerate")
    assert code == 0
    assert float(env["results"]["abs_error"]) < 1e-11


@pytest.mark.parametrize("strategy", ["naive-rational", "naive-float", "pairwise-float",
                                      "binsplit-rational", "binsplit-parallel"])
def test_pi_strategies_agree(strategy):
    code, env, _ = _json("pi", "--terms", "300", "--digits", "15", "--strategy", strategy, "--workers", "2")
    assert code == 0
    # frozen from an mpmath running product at 50 digits
    assert env["results"]["estimate"] == "3.13898010388213"


@pytest.mark.parametrize("n, value, error", [(1, "2", 0.71828), (2, "2.25", 0.46828)])
def test_e_examples(n, value, error):
    code, env, _ = _json("e", "--n", str(n))
    assert code == 0
    assert env["results"]["value"] == value
    assert float(env["results"]["abs_error"]) == pytest.approx(error, abs=1e-5)


def test_e_at_a_million():
    code, env, _ = _json("e", "--n", "1000000")
    assert float(env["results"]["abs_error"]) == pytest.approx(1.359e-6, rel=1e-3)
    assert float(env["results"]["local_order"]) == pytest.approx(1, abs=0.01)


def test_verify_all_passes():
    code, env, _ = _json("verify", "--steps", "all")
    assert code == 0
    steps = env["results"]["steps"]
    assert [s["step"] for s in steps] == ["S1", "S2", "S3", "S4", "S5", "S6"]
    assert all(s["verdict"] == "pass" for s in steps)


def test_verify_s5_csv():
    code, out, _ = call("verify", "--steps", "S5", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 64
    assert all(r["residual"] == "0" and r["step"] == "S5" for r in rows)


def test_verify_failure_exit_code():
    code, env, _ = _json("verify", "--steps", "S4", "--limit-start", "1", "--limit-count", "1")
    assert code == 1
    assert "insufficient samples" in env["results"]["steps"][0]["notes"]


def test_convergence_tables():
    code, env, _ = _json("convergence", "--target", "pi", "--start", "128", "--count", "6")
    assert code == 0
    rows = env["results"]["rows"]
    assert len(rows) == 6 and rows[0][3] == ""
    assert all(float(r[3]) == pytest.approx(1, abs=0.02) for r in rows[1:])

    code, env, _ = _json("convergence", "--target", "e", "--start", "1", "--count", "1")
    assert code == 0
    assert len(env["results"]["rows"]) == 1
    assert env["results"]["rows"][0][3] == ""
    assert env["results"]["fitted_order"] is None

    code, env, _ = _json("convergence", "--target", "eq6", "--start", "128", "--count", "6")
    for r in env["results"]["rows"]:
        assert float(r[2]) == pytest.approx(1 / (4 * int(r[0])), rel=0.01)


def test_bench_rows_and_digests():
    code, env, _ = _json("bench", "--spec", "wallis", "--n", "2000",
                         "--strategies", "naive-rational,binsplit-rational", "--repeats", "1")
    assert code == 0
    rows = env["results"]["rows"]
    assert len(rows) == 2 and rows[0][5] == rows[1][5]
    assert env["results"]["digests_consistent"] is True
    assert env["results"]["machine"]


def test_bench_n1():
    code, env, _ = _json("bench", "--n", "1", "--repeats", "1",
                         "--strategies", "naive-rational,naive-float,pairwise-float,binsplit-rational")
    assert code == 0 and len(env["results"]["rows"]) == 4


def test_bench_digest_mismatch_exits_1(monkeypatch):
    real = products.partial_product

    def broken(spec, n, strategy="binsplit_rational", *a, **kw):
        v = real(spec, n, strategy, *a, **kw)
        kind = strategy.kind if hasattr(strategy, "kind") else strategy
        return v + 1 if kind == "naive_rational" else v

    monkeypatch.setattr(products, "partial_product", broken)
    code, out, err = call("bench", "--n", "10", "--repeats", "1")
    assert code == 1
    assert "digest mismatch" in err


# ---------------------------------------------------------------------------
# usage errors

@pytest.mark.parametrize("argv", [
    ["verify", "--steps", "S9"],
    ["verify", "--steps", ""],
    ["pi", "--terms", "0"],
    ["pi", "--terms", "many"],
    ["pi", "--strategy", "magic"],
    ["pi", "--terms", "100", "--accelerate", "--levels", "3"],
    ["e", "--n", "0"],
    ["bench", "--strategies", "magic"],
    ["bench", "--spec", "nope"],
    ["bench", "--repeats", "0"],
    ["bench", "--n", "x"],
    ["convergence", "--target", "tau"],
    ["convergence", "--target", "pi", "--count", "0"],
    ["pi", "--format", "xml"],
    ["pi", "--workers", "0"],
    ["pi", "--precision-bits", "8"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(argv):
    code, out, err = call(*argv)
    assert code == 2
    assert out == ""


def test_unknown_step_message():
    code, _, err = call("verify", "--steps", "S9")
    assert "unknown step" in err


def test_version_and_help():
    assert call("--version")[0] == 0
    assert call("pi", "--help")[0] == 0


# ---------------------------------------------------------------------------
# configuration

def test_config_file_sets_defaults(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("# defaults\noutput_format = json\ndefault_digits = 8\ndefault_strategy = naive-rational\n")
    code, out, _ = call("pi", "--terms", "10", "--config", str(cfg))
    env = json.loads(out)
    assert env["parameters"]["digits"] == "8"
    assert env["parameters"]["strategy"] == "naive_rational"
    # flags beat the file
    code, out, _ = call("pi", "--terms", "10", "--config", str(cfg), "--format", "text", "--digits", "9")
    assert out.startswith("e2pi pi") and "digits = 9" in out


def test_config_from_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("output_format=csv\n")
    monkeypatch.setenv("E2PI_CONFIG", str(cfg))
    code, out, _ = call("e", "--n", "3")
    assert code == 0 and out.splitlines()[0] == "abs_error,local_order,reference,value"


def test_config_default_location(tmp_path):
    path = tmp_path / "xdg" / "e2pi" / "config"
    path.parent.mkdir(parents=True)
    path.write_text("output_format = json\n")
    assert load_config() == CliConfig(output_format="json")
    assert json.loads(call("e", "--n", "3")[1])["command"] == "e"


@pytest.mark.parametrize("text", ["nonsense\n", "workers = many\n", "default_digits = 3\n",
                                  "output_format = yaml\n", "colour = red\n"])
def test_bad_config_exits_2(tmp_path, text):
    cfg = tmp_path / "bad"
    cfg.write_text(text)
    code, out, err = call("e", "--config", str(cfg))
    assert code == 2 and out == "" and "error" in err


def test_missing_explicit_config(tmp_path):
    code, _, err = call("e", "--config", str(tmp_path / "absent"))
    assert code == 2 and "not found" in err
    with pytest.raises(CliError):
        load_config(tmp_path / "absent")


# ---------------------------------------------------------------------------
# mutation smoke test

def _perturbed(spec_id, j_bad):
    spec = products.PRODUCTS[spec_id]

    def terms(j):
        a, b = spec.terms(j)
        return (a + 1, b) if j == j_bad else (a, b)

    return products.ProductSpec(spec.id, terms, spec.closed_form)


@pytest.mark.parametrize("spec_id", sorted(products.PRODUCTS))
@pytest.mark.parametrize("j", [1, 2, 17, 64])
def test_mutated_factor_fails_verify(monkeypatch, spec_id, j):
    monkeypatch.setitem(products.PRODUCTS, spec_id, _perturbed(spec_id, j))
    code, out, _ = call("verify", "--steps", "all", "--format", "json")
    assert code == 1
    failed = [s["step"] for s in json.loads(out)["results"]["steps"] if s["verdict"] == "fail"]
    assert failed


def test_mutated_deep_wallis_factor_fails_verify(monkeypatch):
    monkeypatch.setitem(products.PRODUCTS, "wallis", _perturbed("wallis", 5000))
    assert call("verify", "--steps", "all")[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "e2pi", "pi", "--terms", "1", "--format", "json"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["estimate"].startswith("2.6666")
