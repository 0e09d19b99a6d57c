//! CSV writers for run artifacts.

use std::io::Write;

use crate::dsee::{DseeSchedule, SampleStore, SlotRecord};
use crate::error::Result;
use crate::game::MoveRecord;
use crate::model::{Instance, Path};
use crate::poa::{Histogram, PoaRecord};
use crate::regret::{AggregateRow, RegretCurve};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn describe(inst: &Instance, p: Option<&Path>) -> String {
    p.map_or_else(String::new, |p| inst.describe_path(p))
}

pub fn write_moves<W: Write>(inst: &Instance, moves: &[MoveRecord], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["circle", "user", "old_path", "new_path", "cost_before", "cost_after"])?;
    for m in moves {
        w.write_record([
            m.circle.to_string(),
            m.user.to_string(),
            describe(inst, m.old_path.as_ref()),
            describe(inst, Some(&m.new_path)),
            m.cost_before.to_string(),
            m.cost_after.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Final path per commodity.
pub fn write_assignment<W: Write>(inst: &Instance, paths: &[Option<Path>], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["user", "source", "dest", "path"])?;
    for (k, (c, p)) in inst.commodities().iter().zip(paths).enumerate() {
        w.write_record([
            k.to_string(),
            inst.vertex_name(c.source).to_string(),
            inst.vertex_name(c.dest).to_string(),
            describe(inst, p.as_ref()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(trace: &[SlotRecord], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["t", "kind", "source_or_circle", "at_nash", "realized_cost", "card"])?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            r.kind.label().to_string(),
            r.tag.to_string(),
            r.at_nash.to_string(),
            r.realized_cost.to_string(),
            r.card.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_store<W: Write>(inst: &Instance, store: &SampleStore, w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["edge", "load", "count", "mean"])?;
    for s in store.snapshot() {
        w.write_record([
            inst.edge_name(s.edge).to_string(),
            s.load.to_string(),
            s.count.to_string(),
            s.mean.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per slot: `t, kind, source_or_circle`.
pub fn write_schedule<W: Write>(schedule: &DseeSchedule, w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["t", "kind", "source_or_circle"])?;
    for (t, kind, tag) in schedule.slots() {
        w.write_record([t.to_string(), kind.label().to_string(), tag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_poa_records<W: Write>(records: &[PoaRecord], w: W) -> Result<()> {
    let mut w = writer(w);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histograms<W: Write>(histograms: &[Histogram], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["bin_low", "bin_high", "count", "order"])?;
    for h in histograms {
        for b in &h.bins {
            w.write_record([
                b.low.to_string(),
                b.high.to_string(),
                b.count.to_string(),
                h.order.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves<W: Write>(curves: &[RegretCurve], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["T", "regret", "regret_over_logT", "G", "seed"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                p.t.to_string(),
                p.regret.to_string(),
                p.regret_over_log.to_string(),
                c.g.to_string(),
                c.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["G", "T", "mean", "min", "max", "mean_over_logT"])?;
    for r in rows {
        w.write_record([
            r.g.to_string(),
            r.t.to_string(),
            r.mean.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            r.mean_over_log.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::run_to_equilibrium;
    use crate::model::fixtures::d1;

    #[test]
    fn move_log_rows() {
        let inst = d1();
        let (_, _, moves) = run_to_equilibrium(&inst).unwrap();
        let mut buf = Vec::new();
        write_moves(&inst, &moves, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "circle,user,old_path,new_path,cost_before,cost_after");
        assert_eq!(lines[1], "1,0,,e1,0,1");
        assert_eq!(lines[2], "1,1,,e2,1,2");
    }

    #[test]
    fn schedule_rows() {
        let s = crate::dsee::build_schedule(1.0, 2, 2, 8).unwrap();
        let mut buf = Vec::new();
        write_schedule(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().starts_with("1,explore,0"));
    }
}
