"""A small distance-versus-coupling sweep, written to CSV.

The same run is available from the command line:

    meanforce sweep --config <this config as JSON> --out runs/demo

Grid policy "converge" refines the environment grid per coupling value until
the reported distance stops moving.
"""

from pathlib import Path

from meanforce.sweep import parse_config, run_sweep, write_report_json, write_sweep_csv

config = parse_config(
    {
        "family": "GCL2",
        "system": "paper-default",
        "beta": 5.0,
        "potential": {"a6": 1.0},
        "coupling_values": {"log_start": 0.5, "log_stop": 8.0, "count": 8},
        "grid": {"policy": "converge", "n_points": 64, "tol": 1e-4},
    }
)

rows, report = run_sweep(config)
out = Path("runs/demo_sextic")
out.mkdir(parents=True, exist_ok=True)
write_sweep_csv(rows, out / "sweep.csv")
write_report_json(report, out / "report.json")

print(f"{'c':>8} {'distance':>12} {'N':>6} {'box':>18} {'converged':>10}")
for r in rows:
    print(
        f"{r.c:8.3f} {r.trace_distance:12.6f} {r.n_points:6d} "
        f"[{r.q_min:7.2f},{r.q_max:6.2f}] {str(r.converged):>10}"
    )
print(f"\nwrote {out/'sweep.csv'} and {out/'report.json'}")
