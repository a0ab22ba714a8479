import json
from pathlib import Path

import pytest

from privagg import LambdaGrid, MomentSource, q_threshold
from privagg.cli import account_obj, aggregate_votes, main
from privagg.formats import (
    FileFormatError,
    dump_json,
    read_ledger,
    read_votes,
    write_ledger,
)

DATA = Path(__file__).parent / "data"
GRID = LambdaGrid.default()


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


class TestReadVotes:
    def test_counts_and_labels_forms_mix(self, tmp_path):
        path = write(tmp_path / "votes.jsonl", "\n".join([
            '{"query_id": "a", "counts": [3, 1]}',
            '{"query_id": "b", "labels": [0, 1, 1], "num_classes": 2}',
            "",
        ]))
        records = read_votes(path)
        assert [(r.query_id, r.histogram.counts) for r in records] == [
            ("a", (3, 1)), ("b", (1, 2))]

    def test_empty_file(self, tmp_path):
        assert read_votes(write(tmp_path / "votes.jsonl", "")) == []

    def test_invalid_json_names_line(self, tmp_path):
        path = write(tmp_path / "votes.jsonl",
                     '{"query_id": "a", "counts": [3, 1]}\n{oops\n')
        with pytest.raises(FileFormatError, match=r"votes\.jsonl:2"):
            read_votes(path)

    def test_label_out_of_range_names_line(self, tmp_path):
        path = write(tmp_path / "votes.jsonl",
                     '{"query_id": "a", "labels": [0, 5], "num_classes": 3}\n')
        with pytest.raises(FileFormatError, match=r":1.*out of range"):
            read_votes(path)

    def test_mixed_class_count_rejected(self, tmp_path):
        path = write(tmp_path / "votes.jsonl", "\n".join([
            '{"query_id": "a", "counts": [3, 1]}',
            '{"query_id": "b", "counts": [3, 1, 0]}',
        ]))
        with pytest.raises(FileFormatError, match=":2.*classes"):
            read_votes(path)

    @pytest.mark.parametrize("line", [
        '{"counts": [3, 1]}',
        '{"query_id": "a"}',
        '{"query_id": "a", "counts": [3, 1], "labels": [0]}',
        '{"query_id": "a", "labels": [0, 1]}',
        '[1, 2]',
    ])
    def test_malformed_records(self, tmp_path, line):
        with pytest.raises(FileFormatError, match=":1"):
            read_votes(write(tmp_path / "votes.jsonl", line + "\n"))


class TestLedgerRoundTrip:
    def test_write_then_read(self, tmp_path):
        records = read_votes(DATA / "votes_100.jsonl")[:10]
        _, ledger = aggregate_votes(records, 0.05, 0, GRID)
        path = tmp_path / "ledger.jsonl"
        write_ledger(path, ledger)
        loaded = read_ledger(path)
        assert loaded.gamma == ledger.gamma
        assert loaded.lambda_grid == ledger.lambda_grid
        assert list(loaded) == list(ledger)

    def test_corrupted_entry_names_line(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        _, ledger = aggregate_votes(read_votes(DATA / "votes_100.jsonl")[:2], 0.05, 0, GRID)
        write_ledger(path, ledger)
        lines = path.read_text().splitlines()
        lines[2] = lines[2].replace('"q_bound"', '"qqq"')
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(FileFormatError, match=":3"):
            read_ledger(path)

    def test_missing_header(self, tmp_path):
        with pytest.raises(FileFormatError, match="header"):
            read_ledger(write(tmp_path / "ledger.jsonl", ""))


class TestAggregate:
    def test_unanimous_queries_get_their_class(self, tmp_path):
        lines = [json.dumps({"query_id": f"u{j}", "counts": [0] * j + [250] + [0] * (9 - j)})
                 for j in range(3)]
        path = write(tmp_path / "votes.jsonl", "\n".join(lines) + "\n")
        records = read_votes(path)
        labels, ledger = aggregate_votes(records, 0.05, 0, GRID)
        assert [label for _, label in labels] == [0, 1, 2]
        assert len(ledger) == 3
        for moment in ledger:
            assert moment.q_bound < q_threshold(0.05)
            assert all(e.source is MomentSource.DATA_DEPENDENT for e in moment.entries)

    def test_deterministic_in_seed(self):
        records = read_votes(DATA / "votes_100.jsonl")
        a_labels, a_ledger = aggregate_votes(records, 0.05, 7, GRID)
        b_labels, b_ledger = aggregate_votes(records, 0.05, 7, GRID)
        assert a_labels == b_labels
        assert list(a_ledger) == list(b_ledger)
        c_labels, _ = aggregate_votes(records, 0.05, 8, GRID)
        assert c_labels != a_labels


class TestCliAggregateAccount:
    def run(self, *argv):
        return main([str(a) for a in argv])

    def test_end_to_end(self, tmp_path, capsys):
        labels = tmp_path / "labels.jsonl"
        ledger = tmp_path / "ledger.jsonl"
        assert self.run("aggregate", DATA / "votes_100.jsonl", "--gamma", "0.05",
                        "--seed", "0", "--labels-out", labels,
                        "--ledger-out", ledger) == 0
        assert len(labels.read_text().splitlines()) == 101  # header + 100
        out = tmp_path / "guarantee.json"
        assert self.run("account", ledger, "--delta", "1e-5", "--output", out) == 0
        obj = json.loads(out.read_text())
        assert obj["moments"]["epsilon"] < obj["strong_composition"]["epsilon"]
        assert obj["format_version"] == 1
        assert obj["seed"] == 0 and obj["gamma"] == 0.05

    def test_matches_frozen_baseline(self, tmp_path):
        labels = tmp_path / "labels.jsonl"
        ledger = tmp_path / "ledger.jsonl"
        out = tmp_path / "guarantee.json"
        self.run("aggregate", DATA / "votes_100.jsonl", "--gamma", "0.05",
                 "--seed", "0", "--labels-out", labels, "--ledger-out", ledger)
        self.run("account", ledger, "--delta", "1e-5", "--output", out)
        assert out.read_bytes() == (DATA / "expected_guarantee.json").read_bytes()

    def test_cli_equals_in_process_pipeline(self, tmp_path):
        labels = tmp_path / "labels.jsonl"
        ledger_path = tmp_path / "ledger.jsonl"
        out = tmp_path / "guarantee.json"
        self.run("aggregate", DATA / "votes_100.jsonl", "--gamma", "0.05",
                 "--seed", "0", "--labels-out", labels, "--ledger-out", ledger_path)
        self.run("account", ledger_path, "--delta", "1e-5", "--output", out)
        _, ledger = aggregate_votes(read_votes(DATA / "votes_100.jsonl"), 0.05, 0, GRID)
        assert dump_json(account_obj(ledger, 1e-5)).encode() == out.read_bytes()

    def test_empty_votes_warns_and_succeeds(self, tmp_path, capsys):
        votes = write(tmp_path / "votes.jsonl", "")
        assert self.run("aggregate", votes, "--gamma", "0.05",
                        "--labels-out", tmp_path / "l.jsonl",
                        "--ledger-out", tmp_path / "g.jsonl") == 0
        assert "no vote records" in capsys.readouterr().err
        assert len((tmp_path / "l.jsonl").read_text().splitlines()) == 1

    def test_bad_record_exits_one(self, tmp_path, capsys):
        votes = write(tmp_path / "votes.jsonl",
                      '{"query_id": "a", "labels": [9], "num_classes": 3}\n')
        assert self.run("aggregate", votes, "--gamma", "0.05",
                        "--labels-out", tmp_path / "l.jsonl",
                        "--ledger-out", tmp_path / "g.jsonl") == 1
        assert ":1" in capsys.readouterr().err

    def test_delta_zero_exits_one(self, tmp_path, capsys):
        ledger = tmp_path / "ledger.jsonl"
        self.run("aggregate", DATA / "votes_100.jsonl", "--gamma", "0.05",
                 "--labels-out", tmp_path / "l.jsonl", "--ledger-out", ledger)
        assert self.run("account", ledger, "--delta", "0") == 1


class TestCliSimulate:
    def test_budget_json(self, tmp_path):
        out = tmp_path / "budget.json"
        assert main(["simulate", "--mode", "budget", "--queries", "20",
                     "--gamma", "0.05", "--delta", "1e-5", "--seed", "1",
                     "--output", str(out)]) == 0
        obj = json.loads(out.read_text())
        assert obj["moments"]["epsilon"] <= obj["strong_composition"]["epsilon"]
        assert obj["ensemble"]["n"] == 250
        assert len(obj["alpha_totals"]) == 8

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["simulate", "--mode", "sweep", "--queries", "50",
                     "--n", "50", "--gammas", "0.01,0.1,1.0", "--seed", "2",
                     "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# provenance ")
        assert lines[1] == "gamma,accuracy,mean_gap,mean_normalized_gap"
        assert len(lines) == 5

    def test_sweep_without_gammas_exits_one(self, tmp_path):
        assert main(["simulate", "--mode", "sweep",
                     "--output", str(tmp_path / "s.csv")]) == 1


class TestCliVerify:
    def test_small_run_passes(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["verify", "--cases", "15", "--trials", "2000",
                     "--mc-cases", "3", "--seed", "0", "--output", str(out)])
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["failures"] == 0
        assert obj["cases"] == 15
        assert obj["mc_cases"] == 3
        assert set(obj["checks"]) == {"miss_probability", "moment_bound",
                                      "pure_dp", "mc_agreement"}

    def test_zero_trials_is_quadrature_only(self, capsys):
        assert main(["verify", "--cases", "5", "--trials", "0", "--seed", "1"]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["mc_cases"] == 0
        assert "mc_agreement" not in obj["checks"]

    def test_seed_variation(self):
        for seed in range(4):
            assert main(["verify", "--cases", "5", "--trials", "0",
                         "--seed", str(seed)]) == 0

    def test_bound_violation_exits_two(self, monkeypatch, capsys):
        import privagg.cli as cli
        from privagg.verification import CheckStats, VerificationReport

        def broken(**kwargs):
            report = VerificationReport(cases=1, mc_cases=0)
            report.stats["miss_probability"] = CheckStats(
                checks=1, failures=1, max_violation=0.25)
            return report

        monkeypatch.setattr(cli, "run_verification", broken)
        assert main(["verify", "--cases", "1", "--trials", "0"]) == 2
        assert "FAILED" in capsys.readouterr().err


class TestCliReport:
    def test_guarantee_table(self, capsys):
        assert main(["report", str(DATA / "expected_guarantee.json")]) == 0
        out = capsys.readouterr().out
        assert "Moments" in out and "StrongComposition" in out
        assert "noise scale" in out

    def test_sweep_table(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        main(["simulate", "--mode", "sweep", "--queries", "20", "--n", "20",
              "--gammas", "0.1,1.0", "--seed", "3", "--output", str(out)])
        capsys.readouterr()
        assert main(["report", str(out)]) == 0
        assert "gamma" in capsys.readouterr().out

    def test_unrecognized_json_exits_one(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"foo": 1}')
        assert main(["report", str(path)]) == 1
