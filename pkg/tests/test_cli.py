import json
import subprocess
import sys

import pytest

from megt.cli import main
from megt.manifest import load_manifest, sha256_file

BASE_CONFIG = """
node_count = 20
layers = 2
topology = er
edge_probability = 0.2
homophily_sigma = 1.0
game = sd
max_rounds = 40
steady_window = 20
seed = 7
"""


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("MEGT_SEED", raising=False)


def write_config(tmp_path, extra="", name="run.cfg"):
    path = tmp_path / name
    path.write_text(BASE_CONFIG + extra)
    return str(path)


def run_cli(*argv):
    return main(list(argv))


# ---------------------------------------------------------------------------
# parser-level behaviour
# ---------------------------------------------------------------------------

def test_no_subcommand_exits_2(capsys):
    assert run_cli() == 2
    assert "usage" in capsys.readouterr().out


def test_print_defaults_lists_keys(capsys):
    assert run_cli("--print-defaults") == 0
    out = capsys.readouterr().out
    for key in ("node_count", "homophily_sigma", "budget", "mechanism"):
        assert key in out


def test_version_subprocess():
    proc = subprocess.run([sys.executable, "-m", "megt.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "megt" in proc.stdout


# ---------------------------------------------------------------------------
# configuration errors (exit 2, message names the key)
# ---------------------------------------------------------------------------

def test_unknown_config_key_names_it(tmp_path, capsys):
    cfg = write_config(tmp_path, "no_such_knob = 3\n")
    assert run_cli("generate", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 2
    assert "no_such_knob" in capsys.readouterr().err


def test_bad_config_value_names_the_key(tmp_path, capsys):
    cfg = write_config(tmp_path, "node_count = many\n")
    assert run_cli("generate", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 2
    err = capsys.readouterr().err
    assert "node_count" in err and "many" in err


def test_missing_config_file(tmp_path, capsys):
    assert run_cli("generate", "--config", str(tmp_path / "absent.cfg"),
                   "--outdir", str(tmp_path / "out")) == 2
    assert "absent.cfg" in capsys.readouterr().err


def test_topology_layer_mismatch(tmp_path, capsys):
    cfg = write_config(tmp_path, "topology = er,er,er\n")
    assert run_cli("generate", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 2
    assert "topology" in capsys.readouterr().err


def test_invalid_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MEGT_SEED", "not-a-number")
    cfg = write_config(tmp_path)
    assert run_cli("generate", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 2
    assert "MEGT_SEED" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def test_generate_writes_network_and_manifest(tmp_path):
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("generate", "--config", cfg, "--outdir", str(outdir)) == 0
    net = outdir / "net.mplex"
    assert net.is_file()
    manifest = load_manifest(outdir / "manifest.json")
    assert manifest.command == "generate"
    assert manifest.seed == 7
    assert manifest.outputs["net.mplex"] == sha256_file(net)
    assert manifest.config["node_count"] == 20


def test_generate_is_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    for name in ("a", "b"):
        assert run_cli("generate", "--config", cfg,
                       "--outdir", str(tmp_path / name)) == 0
    assert (tmp_path / "a/net.mplex").read_bytes() == \
        (tmp_path / "b/net.mplex").read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)  # config seed = 7

    def generate(outname, *extra):
        assert run_cli("generate", "--config", cfg,
                       "--outdir", str(tmp_path / outname), *extra) == 0
        return (tmp_path / outname / "net.mplex").read_bytes()

    from_config = generate("cfg_seed")
    monkeypatch.setenv("MEGT_SEED", "8")
    from_env = generate("env_seed")
    assert from_env != from_config
    # explicit flag outranks the environment
    from_flag = generate("flag_seed", "--seed", "7")
    assert from_flag == from_config
    manifest = load_manifest(tmp_path / "env_seed" / "manifest.json")
    assert manifest.seed == 8


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def test_evolve_single_replica_outputs(tmp_path):
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("evolve", "--config", cfg, "--outdir", str(outdir)) == 0
    for name in ("rho.csv", "state.txt", "metrics.csv", "manifest.json"):
        assert (outdir / name).is_file()
    rho_lines = (outdir / "rho.csv").read_text().splitlines()
    assert rho_lines[0] == "round,rho"
    manifest = load_manifest(outdir / "manifest.json")
    assert len(manifest.extra["steady_rho"]) == 1
    assert set(manifest.outputs) == {"rho.csv", "state.txt", "metrics.csv"}


def test_evolve_replica_file_census(tmp_path):
    cfg = write_config(tmp_path, "replicas = 3\n")
    outdir = tmp_path / "out"
    assert run_cli("evolve", "--config", cfg, "--outdir", str(outdir)) == 0
    manifest = load_manifest(outdir / "manifest.json")
    expected = {"rho.csv"}
    for r in range(3):
        expected |= {f"rho_rep{r:02d}.csv", f"state_rep{r:02d}.txt",
                     f"metrics_rep{r:02d}.csv"}
    assert set(manifest.outputs) == expected
    assert len(manifest.extra["steady_rho"]) == 3


def test_evolve_jobs_flag_does_not_change_results(tmp_path):
    cfg = write_config(tmp_path, "replicas = 2\n")
    for name, jobs in (("seq", "1"), ("par", "2")):
        assert run_cli("evolve", "--config", cfg,
                       "--outdir", str(tmp_path / name), "--jobs", jobs) == 0
    for filename in ("rho.csv", "rho_rep00.csv", "rho_rep01.csv"):
        assert (tmp_path / "seq" / filename).read_bytes() == \
            (tmp_path / "par" / filename).read_bytes()


def test_evolve_from_network_file(tmp_path):
    cfg = write_config(tmp_path)
    netdir = tmp_path / "net"
    assert run_cli("generate", "--config", cfg, "--outdir", str(netdir)) == 0
    net_path = netdir / "net.mplex"
    cfg2 = write_config(tmp_path, f"network_file = {net_path}\n",
                        name="fixed.cfg")
    outdir = tmp_path / "out"
    assert run_cli("evolve", "--config", cfg2, "--outdir", str(outdir)) == 0
    manifest = load_manifest(outdir / "manifest.json")
    assert str(net_path) in manifest.inputs
    assert manifest.inputs[str(net_path)] == sha256_file(net_path)


def test_evolve_corrupt_network_file_is_a_data_error(tmp_path, capsys):
    bad = tmp_path / "net.mplex"
    bad.write_text("multiplex v1 2 1\ngarbage\n")
    cfg = write_config(tmp_path, f"network_file = {bad}\n")
    assert run_cli("evolve", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 3
    assert "line 2" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep / nash
# ---------------------------------------------------------------------------

def test_sweep_grid_rows(tmp_path):
    cfg = write_config(tmp_path, "t_steps = 3\ns_steps = 3\n"
                                 "max_rounds = 30\nsteady_window = 15\n")
    outdir = tmp_path / "out"
    assert run_cli("sweep", "--config", cfg, "--outdir", str(outdir)) == 0
    lines = (outdir / "grid.csv").read_text().splitlines()
    assert lines[0] == "T,S,rho_mean,rho_std,replicas"
    assert len(lines) == 1 + 9
    first = lines[1].split(",")
    assert (float(first[0]), float(first[1])) == (0.0, -1.0)


def test_nash_outputs(tmp_path):
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("nash", "--config", cfg, "--outdir", str(outdir)) == 0
    alpha_lines = (outdir / "alpha.csv").read_text().splitlines()
    assert alpha_lines[0] == "round,alpha,weak_fraction"
    assert len(alpha_lines) >= 2
    rho_lines = (outdir / "rho.csv").read_text().splitlines()
    # one alpha row per trajectory row (round 0 onward)
    assert len(alpha_lines) == len(rho_lines)


def test_nash_rejects_unknown_projection(tmp_path, capsys):
    cfg = write_config(tmp_path, "projection = all_of_them\n")
    assert run_cli("nash", "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 2
    assert "projection" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# synth / score
# ---------------------------------------------------------------------------

def synth_corpus_file(tmp_path, extra=""):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = write_config(tmp_path, "users = 30\ndays = 3\n" + extra,
                       name="synth.cfg")
    outdir = tmp_path / "corpus"
    assert run_cli("synth", "--config", cfg, "--outdir", str(outdir)) == 0
    return outdir / "reports.csv"


def test_synth_is_deterministic(tmp_path):
    first = synth_corpus_file(tmp_path / "one")
    second = synth_corpus_file(tmp_path / "two")
    assert first.read_bytes() == second.read_bytes()
    header = first.read_text().splitlines()[0]
    assert header == ("object_id,generation_date,day_time,street,"
                      "incident_type,uuid,report_rating")


def test_score_outputs_all_mechanisms(tmp_path):
    reports = synth_corpus_file(tmp_path)
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(outdir)) == 0
    ledger_lines = (outdir / "ledger.csv").read_text().splitlines()
    assert ledger_lines[0] == ("user_id,rs_raw,rs_norm,gamma_emp,"
                               "incentive_A,incentive_B,incentive_C")
    assert len(ledger_lines) == 1 + 30
    assert all(line.count(",") == 6 for line in ledger_lines[1:])
    assert all("" not in line.split(",")[1:] for line in ledger_lines[1:])
    decisions = (outdir / "decisions.csv").read_text().splitlines()
    assert decisions[0] == "date,segment,street,event_type,confidence,decision"
    manifest = load_manifest(outdir / "manifest.json")
    assert manifest.extra["mechanisms"] == ["A", "B", "C"]
    assert str(reports) in manifest.inputs


def test_score_single_mechanism_flag(tmp_path):
    reports = synth_corpus_file(tmp_path)
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(outdir), "--mechanism", "B") == 0
    row = (outdir / "ledger.csv").read_text().splitlines()[1].split(",")
    incentive_a, incentive_b, incentive_c = row[4], row[5], row[6]
    assert incentive_a == "" and incentive_c == ""
    assert incentive_b != ""
    manifest = load_manifest(outdir / "manifest.json")
    assert manifest.extra["mechanisms"] == ["B"]


def test_score_missing_reports_file(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert run_cli("score", "--reports", str(tmp_path / "nope.csv"),
                   "--config", cfg, "--outdir", str(tmp_path / "out")) == 3
    assert "nope.csv" in capsys.readouterr().err


def test_score_malformed_row_names_it(tmp_path, capsys):
    reports = tmp_path / "reports.csv"
    reports.write_text(
        "object_id,generation_date,day_time,street,incident_type,uuid,"
        "report_rating\n"
        "r1,2019-10-07,09:00,Main,jam,u1,4.0\n"
        "r2,2019-99-99,09:00,Main,jam,u1,4.0\n")
    cfg = write_config(tmp_path)
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 3
    assert "row 3" in capsys.readouterr().err


def test_score_bad_header_is_a_data_error(tmp_path, capsys):
    reports = tmp_path / "reports.csv"
    reports.write_text("a,b\n1,2\n")
    cfg = write_config(tmp_path)
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 3
    assert "row 1" in capsys.readouterr().err


def test_score_nothing_usable(tmp_path, capsys):
    reports = tmp_path / "reports.csv"
    reports.write_text(
        "object_id,generation_date,day_time,street,incident_type,uuid,"
        "report_rating\n"
        "r1,2019-10-07,09:00,Main,jam,u1,0.0\n")
    cfg = write_config(tmp_path)
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(tmp_path / "out")) == 3
    assert "no usable reports" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def test_replay_generate_is_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("generate", "--config", cfg, "--outdir", str(outdir)) == 0
    replay_dir = tmp_path / "replayed"
    assert run_cli("replay", str(outdir / "manifest.json"),
                   "--outdir", str(replay_dir)) == 0
    assert "replay ok" in capsys.readouterr().out
    assert (replay_dir / "net.mplex").read_bytes() == \
        (outdir / "net.mplex").read_bytes()


def test_replay_detects_tampered_manifest(tmp_path, capsys):
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("generate", "--config", cfg, "--outdir", str(outdir)) == 0
    payload = json.loads((outdir / "manifest.json").read_text())
    payload["outputs"]["net.mplex"] = "0" * 64
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(payload))
    assert run_cli("replay", str(tampered),
                   "--outdir", str(tmp_path / "replayed")) == 3
    assert "net.mplex" in capsys.readouterr().err


def test_replay_score_reuses_input_corpus(tmp_path, capsys):
    reports = synth_corpus_file(tmp_path)
    cfg = write_config(tmp_path)
    outdir = tmp_path / "out"
    assert run_cli("score", "--reports", str(reports), "--config", cfg,
                   "--outdir", str(outdir), "--mechanism", "C") == 0
    replay_dir = tmp_path / "replayed"
    assert run_cli("replay", str(outdir / "manifest.json"),
                   "--outdir", str(replay_dir)) == 0
    assert "replay ok" in capsys.readouterr().out
    assert (replay_dir / "ledger.csv").read_bytes() == \
        (outdir / "ledger.csv").read_bytes()


def test_replay_missing_manifest(tmp_path, capsys):
    assert run_cli("replay", str(tmp_path / "missing.json"),
                   "--outdir", str(tmp_path / "out")) == 3
    assert "missing.json" in capsys.readouterr().err
