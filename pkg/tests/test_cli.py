import pytest

from radsched.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    load_config,
    main,
    parse_policy,
    policy_slug,
)
from radsched.instance_io import DataError, load_instance


GEN_ARGS = ["generate", "--instances", "1", "--seed", "7"]
SMALL_CONFIG = "span_months=2\nwarmup_months=1\nmean_weekday_arrivals=3\n"


@pytest.fixture()
def instance_file(tmp_path):
    config = tmp_path / "gen.cfg"
    config.write_text(SMALL_CONFIG)
    out = tmp_path / "instances"
    code = main(GEN_ARGS + ["--config", str(config), "--out", str(out)])
    assert code == EXIT_OK
    files = sorted(out.glob("*.inst"))
    assert len(files) == 1
    return files[0]


class TestParsing:
    def test_policy_string(self):
        policy = parse_policy("scd=2,1 mnda=7,inf")
        assert policy.label() == "scd=2,1 mnda=7,inf"
        assert policy_slug(policy) == "scd2-1_mnda7-inf"

    def test_policy_defaults(self):
        assert parse_policy("scd=3,3").label() == "scd=3,3 mnda=inf,inf"

    def test_bad_policy(self):
        from radsched.cli import UsageError

        for text in ("scd=9,5", "mnda=6,6", "scd=5", "nonsense"):
            with pytest.raises(UsageError):
                parse_policy(text)

    def test_config_file(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text("# comment\ninstances=3\nmean_weekday_arrivals=2.5\n")
        config = load_config(str(path))
        assert config.instances == 3
        assert config.mean_weekday_arrivals == 2.5

    def test_config_unknown_key(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text("bogus=1\n")
        with pytest.raises(DataError):
            load_config(str(path))

    def test_config_default(self):
        assert load_config(None).instances == 33


class TestGenerate:
    def test_writes_instances_and_manifest(self, tmp_path):
        config = tmp_path / "gen.cfg"
        config.write_text(SMALL_CONFIG)
        out = tmp_path / "out"
        code = main(["generate", "--config", str(config), "--instances", "2",
                     "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        assert len(list(out.glob("*.inst"))) == 2
        manifest = (out / "manifest.txt").read_text()
        assert "command=generate" in manifest
        assert "seed=1" in manifest

    def test_rerun_identical_bytes(self, tmp_path):
        config = tmp_path / "gen.cfg"
        config.write_text(SMALL_CONFIG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["generate", "--config", str(config),
                         "--instances", "1", "--seed", "5",
                         "--out", str(out)]) == EXIT_OK
        assert (out1 / "inst00.inst").read_bytes() \
            == (out2 / "inst00.inst").read_bytes()


class TestSimulateAndCompare:
    def test_pipeline(self, tmp_path, instance_file):
        sim_out = tmp_path / "sim"
        code = main(["simulate", str(instance_file), "--out", str(sim_out),
                     "--policy", "scd=5,5 mnda=inf,inf",
                     "--policy", "scd=2,1 mnda=inf,inf",
                     "--node-budget", "200", "--budget-secs", "30"])
        assert code == EXIT_OK
        dirs = sorted(d for d in sim_out.iterdir() if d.is_dir())
        assert [d.name for d in dirs] == ["scd2-1_mndainf-inf",
                                          "scd5-5_mndainf-inf"]
        for d in dirs:
            assert len(list(d.glob("*.outcome"))) == 1

        report_out = tmp_path / "cmp"
        code = main(["compare", str(dirs[0]), str(dirs[1]),
                     "--replications", "50", "--out", str(report_out)])
        assert code == EXIT_OK
        report = (report_out / "report.tsv").read_text()
        assert report.startswith("config\tcriterion\tmean\tbest\t")
        table = (report_out / "table.txt").read_text()
        assert "Breach (%)" in table

    def test_identical_dirs_all_marked(self, tmp_path, instance_file, capsys):
        sim_out = tmp_path / "sim"
        assert main(["simulate", str(instance_file), "--out", str(sim_out),
                     "--node-budget", "200"]) == EXIT_OK
        d = sim_out / "scd5-5_mndainf-inf"
        copy = tmp_path / "copy"
        copy.mkdir()
        for f in d.glob("*.outcome"):
            (copy / f.name).write_bytes(f.read_bytes())
        assert main(["compare", str(d), str(copy),
                     "--replications", "20"]) == EXIT_OK
        table = capsys.readouterr().out
        marked_rows = [line for line in table.splitlines() if "*" in line]
        assert len(marked_rows) == 2

    def test_malformed_instance(self, tmp_path):
        bad = tmp_path / "bad.inst"
        bad.write_text("radsched-instance\t1\tx\t0\t60\t30\npatient\toops\n")
        code = main(["simulate", str(bad), "--out", str(tmp_path / "o")])
        assert code == EXIT_DATA


class TestExportLp:
    def test_export(self, tmp_path, instance_file):
        out = tmp_path / "day.lp"
        code = main(["export-lp", str(instance_file), "--day", "1",
                     "--objective", "4", "--out", str(out)])
        assert code == EXIT_OK
        text = out.read_text()
        assert text.startswith("Minimize")
        assert text.endswith("End\n")

    def test_objectives_differ_only_in_objective(self, tmp_path, instance_file):
        texts = []
        for m in ("1", "4"):
            out = tmp_path / f"o{m}.lp"
            assert main(["export-lp", str(instance_file), "--day", "2",
                         "--objective", m, "--out", str(out)]) == EXIT_OK
            texts.append(out.read_text())
        assert texts[0].split("Subject To")[1] == texts[1].split("Subject To")[1]

    def test_deterministic(self, tmp_path, instance_file):
        outs = []
        for name in ("a.lp", "b.lp"):
            out = tmp_path / name
            assert main(["export-lp", str(instance_file), "--day", "3",
                         "--out", str(out)]) == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert main(["simulate"]) == EXIT_USAGE
        assert "radsched:" in capsys.readouterr().err

    def test_missing_instance_is_data_error(self, tmp_path, capsys):
        code = main(["simulate", str(tmp_path / "missing.inst"),
                     "--out", str(tmp_path / "o")])
        assert code in (EXIT_DATA, 3)

    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EXIT_USAGE
