//! CSV and text emitters. Every file starts with one `#` header line naming
//! the tool version and the resolved parameters, in the order given.

use std::io::Write;

use crate::error::Result;
use crate::experiment::{SweepResult, WindowRow};
use crate::ids::Day;
use crate::ingest::IdMaps;
use crate::metrics::{MetricReport, RankShift};
use crate::predictors::{PredictorSpec, RankedList, ScoreTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub fields: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.fields.push((key.into(), value.to_string()));
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "# trendcast {VERSION}")?;
        for (k, v) in &self.fields {
            write!(out, " {k}={v}")?;
        }
        writeln!(out)?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `object_id,score` in rank order.
pub fn write_scores<W: Write>(
    out: &mut W,
    header: &Header,
    table: &ScoreTable,
    ranked: &RankedList,
    ids: &IdMaps,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "object_id,score")?;
    for &o in ranked.order() {
        let s = table.get(o).unwrap_or(f64::NAN);
        writeln!(out, "{},{}", ids.object_label(o), s)?;
    }
    Ok(())
}

pub const METRIC_COLUMNS: &str = "predictor,params,t,T_F,n,AUC,Pn,Qn,Dn,En,Cn";

pub fn write_metric_row<W: Write>(
    out: &mut W,
    spec: &PredictorSpec,
    t: Day,
    horizon: Day,
    r: &MetricReport,
) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        spec.kind(),
        spec.params(),
        t,
        horizon,
        r.n,
        r.auc,
        r.precision,
        opt(r.novelty),
        r.hits,
        r.new_entries,
        r.caught
    )?;
    Ok(())
}

/// `object_id,r_k,dr`.
pub fn write_rank_shift<W: Write>(
    out: &mut W,
    header: &Header,
    shifts: &[RankShift],
    ids: &IdMaps,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "object_id,r_k,dr")?;
    for s in shifts {
        writeln!(
            out,
            "{},{},{}",
            ids.object_label(s.object),
            s.degree_rank,
            s.dr
        )?;
    }
    Ok(())
}

pub const SWEEP_COLUMNS: &str = "predictor,param,T_F,n,AUC,Pn,Qn,dates,qn_dates,qn_excluded";

/// One row per grid point per `n`.
pub fn write_sweep<W: Write>(out: &mut W, header: &Header, result: &SweepResult) -> Result<()> {
    header.write(out)?;
    writeln!(out, "{SWEEP_COLUMNS}")?;
    for p in &result.points {
        for r in &p.reports {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                result.family.name(),
                p.param,
                result.horizon,
                r.n,
                r.auc,
                r.precision,
                opt(r.novelty),
                r.dates,
                r.novelty_dates,
                r.novelty_excluded()
            )?;
        }
    }
    Ok(())
}

pub const WINDOW_COLUMNS: &str = "T_F,predictor,best_param,n,AUC,Pn,Qn,dates,qn_dates";

pub fn write_window_rows<W: Write>(out: &mut W, header: &Header, rows: &[WindowRow]) -> Result<()> {
    header.write(out)?;
    writeln!(out, "{WINDOW_COLUMNS}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.horizon,
            row.family.name(),
            row.best_param,
            r.n,
            r.auc,
            r.precision,
            opt(r.novelty),
            r.dates,
            r.novelty_dates
        )?;
    }
    Ok(())
}

/// Plain-text table of the best parameter per sweep at benchmark size `n`:
/// predictor, parameter, AUC, P_n, Q_n.
pub fn write_summary<W: Write>(
    out: &mut W,
    header: &Header,
    sweeps: &[&SweepResult],
    n: usize,
) -> Result<()> {
    header.write(out)?;
    writeln!(
        out,
        "{:<10} {:>10} {:>8} {:>8} {:>8}",
        "Predictor", "Parameter", "AUC", "P_n", "Q_n"
    )?;
    for s in sweeps {
        if let Some(b) = s.best_for(n) {
            let q = b
                .report
                .novelty
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{:<10} {:>10} {:>8.3} {:>8.3} {:>8}",
                s.family.name().to_uppercase(),
                b.param,
                b.report.auc,
                b.report.precision,
                q
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::ObjectId;

    #[test]
    fn header_line() {
        let mut buf = Vec::new();
        Header::new()
            .with("t", 900)
            .with("gamma", 0.06)
            .write(&mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("# trendcast {VERSION} t=900 gamma=0.06\n")
        );
    }

    #[test]
    fn metric_row_with_undefined_novelty() {
        let r = MetricReport {
            n: 2,
            auc: 0.75,
            precision: 0.5,
            novelty: None,
            hits: 1,
            new_entries: 0,
            caught: 0,
        };
        let mut buf = Vec::new();
        write_metric_row(&mut buf, &PredictorSpec::Tbp { gamma: 0.06 }, 900, 30, &r).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tbp,gamma=0.06,900,30,2,0.75,0.5,,1,0,0\n"
        );
    }

    #[test]
    fn scores_in_rank_order() {
        let objects = vec![ObjectId(0), ObjectId(1)];
        let table = ScoreTable::new(3, PredictorSpec::Cumulative, objects, vec![1.0, 2.0]).unwrap();
        let ranked = crate::predictors::rank(&table);
        let ids = IdMaps {
            users: vec![],
            objects: vec!["x".into(), "y".into()],
        };
        let mut buf = Vec::new();
        write_scores(&mut buf, &Header::new(), &table, &ranked, &ids).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("object_id,score\ny,2\nx,1\n"));
    }
}
