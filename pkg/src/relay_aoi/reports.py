"""CSV rendering and atomic file output."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from relay_aoi.sim import RunSummary, Trajectory

SUMMARY_COLUMNS = ("policy", "t", "mean_weighted_sum_h", "mean_weighted_sum_g", "n_runs", "seed")
VALUES_COLUMNS = ("policy", "n_runs", "seed", "V_mean", "V_std", "half_width_95")
TRAJECTORY_COLUMNS = ("run", "t", "k", "g_k", "h_k", "sampled", "updated", "sample_outage", "update_outage")


def write_atomic(path: str | os.PathLike, text: str) -> Path:
    """Write via a temporary sibling and rename, so ``path`` never holds partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_csv(summaries: Sequence[RunSummary]) -> str:
    rows = []
    for s in summaries:
        for i, (mh, mg) in enumerate(zip(s.mean_weighted_h, s.mean_weighted_g), start=1):
            rows.append((s.policy, i, float(mh), float(mg), s.n_runs, s.seed))
    return render_csv(SUMMARY_COLUMNS, rows)


def values_csv(summaries: Sequence[RunSummary]) -> str:
    return render_csv(
        VALUES_COLUMNS,
        ((s.policy, s.n_runs, s.seed, s.V_mean, s.V_std, s.half_width) for s in summaries),
    )


def trajectory_csv(trajectories: Sequence[Trajectory]) -> str:
    rows = []
    for traj in trajectories:
        for rec in traj.records:
            s_out = dict(zip(rec.action.sample, rec.outage.sample_outage))
            u_out = dict(zip(rec.action.update, rec.outage.update_outage))
            for k in range(traj.cfg.K):
                rows.append(
                    (
                        traj.run,
                        rec.t,
                        k,
                        rec.state.g[k],
                        rec.state.h[k],
                        int(k in s_out),
                        int(k in u_out),
                        int(s_out.get(k, False)),
                        int(u_out.get(k, False)),
                    )
                )
    return render_csv(TRAJECTORY_COLUMNS, rows)


def metadata_json(meta: dict) -> str:
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"
