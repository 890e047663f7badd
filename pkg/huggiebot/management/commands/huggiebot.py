import json
import os

from django.core.management.base import BaseCommand, CommandError

from huggiebot import conf
from huggiebot.config import dump_config, load_config
from huggiebot.scenarios import (format_grid_table, read_scenario_file,
                                 run_condition_grid, run_scenario)
from huggiebot.traces import (diff_traces, replay_trace, trace_control_rate,
                              validate_trace, write_trace)

SCENARIO_ERROR = 1
TRACE_VIOLATION = 2
TRACES_DIFFER = 1


class Command(BaseCommand):
    help = ("Run hug scenarios against the simulated robot, run the condition "
            "grid, and check or compare trace files.")

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)

        run = subparsers.add_parser("run", help="Run one scenario file.")
        run.add_argument("scenario")
        run.add_argument("--seed", type=int, default=None,
                         help="Override the scenario seed.")
        run.add_argument("--trace", default=None,
                         help="Write the per-tick trace to this path.")
        run.add_argument("--summary", default=None,
                         help="Write the run summary as JSON to this path.")

        grid = subparsers.add_parser(
            "grid", help="Run a scenario under all 8 mode combinations.")
        grid.add_argument("scenario")
        grid.add_argument("--out", required=True,
                          help="Directory for the traces and summaries.")
        grid.add_argument("--workers", type=int, default=None)

        replay = subparsers.add_parser(
            "replay", help="Check a trace file and print it back.")
        replay.add_argument("trace")
        replay.add_argument(
            "--control-rate", type=float, default=None,
            help="Expected tick rate in Hz. By default it is read off the "
                 "spacing of the first two records.")

        diff = subparsers.add_parser(
            "diff", help="Report the first divergence of two trace files.")
        diff.add_argument("left")
        diff.add_argument("right")

        validate = subparsers.add_parser(
            "validate", help="Check a controller config file.")
        validate.add_argument("config")

    def handle(self, *args, **options):
        action = options["action"]
        try:
            return getattr(self, f"handle_{action}")(**options)
        except CommandError:
            raise
        except (OSError, ValueError) as e:
            raise CommandError(f"{type(e).__name__}: {e}",
                               returncode=SCENARIO_ERROR)

    def _load(self, path, seed=None):
        scenario = read_scenario_file(path)
        if seed is not None:
            scenario = scenario.replace(seed=seed)
        return scenario

    def _check_records(self, records, control_rate):
        violations = validate_trace(records, control_rate)
        if violations:
            for violation in violations:
                self.stderr.write(violation)
            raise CommandError(
                f"{len(violations)} trace invariant violation(s)",
                returncode=TRACE_VIOLATION)

    def handle_run(self, scenario, seed=None, trace=None, summary=None,
                   **options):
        loaded = self._load(scenario, seed)
        result = run_scenario(loaded)
        if trace:
            with open(trace, "w") as fp:
                write_trace(result.records, fp)
        summary_json = json.dumps(result.summary.to_dict(), indent=2)
        if summary:
            with open(summary, "w") as fp:
                fp.write(summary_json + "\n")
        self.stdout.write(summary_json)
        self._check_records(result.records, loaded.config.control_rate)

    def handle_grid(self, scenario, out, workers=None, **options):
        base = self._load(scenario)
        results = run_condition_grid(base, workers=workers or conf.GRID_WORKERS)
        os.makedirs(out, exist_ok=True)
        for result in results:
            name = result.summary.name
            with open(os.path.join(out, f"{name}.trace.jsonl"), "w") as fp:
                write_trace(result.records, fp)
            with open(os.path.join(out, f"{name}.summary.json"), "w") as fp:
                json.dump(result.summary.to_dict(), fp, indent=2)
                fp.write("\n")
        self.stdout.write(format_grid_table([r.summary for r in results]),
                          ending="")
        for result in results:
            self._check_records(result.records, base.config.control_rate)

    def handle_replay(self, trace, control_rate=None, **options):
        records = replay_trace(trace)
        control_rate = (control_rate or trace_control_rate(records)
                        or conf.get_site_config().control_rate)
        self._check_records(records, control_rate)
        for record in records:
            self.stdout.write(record.to_json())

    def handle_diff(self, left, right, **options):
        divergence = diff_traces(replay_trace(left), replay_trace(right))
        if divergence is not None:
            raise CommandError(str(divergence), returncode=TRACES_DIFFER)
        self.stdout.write("traces are identical")

    def handle_validate(self, config, **options):
        with open(config) as fp:
            cfg = load_config(fp.read(), base=conf.get_site_config())
        self.stdout.write(dump_config(cfg), ending="")
