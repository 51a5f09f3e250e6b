use super::request::SketchRequest;
use super::summary::MomentsSummary;
use crate::error::{CoreError, Result};
use crate::exact_sum::ExactSum;
use crate::table::Table;

pub(crate) fn identity(req: &SketchRequest) -> MomentsSummary {
    MomentsSummary {
        min: None,
        max: None,
        count: 0,
        missing: 0,
        sums: vec![ExactSum::new(); req.moments as usize],
    }
}

pub(crate) fn summarize(table: &Table, req: &SketchRequest) -> Result<MomentsSummary> {
    let name = req.column(0)?;
    let col = table.column(name)?;
    if !col.kind().is_numeric() {
        return Err(CoreError::kind_mismatch(name, "numeric", col.kind()));
    }
    let mut s = identity(req);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in table.members().iter() {
        let Some(v) = col.numeric(row) else {
            s.missing += 1;
            continue;
        };
        s.count += 1;
        lo = lo.min(v);
        hi = hi.max(v);
        let mut p = 1.0;
        for sum in s.sums.iter_mut() {
            p *= v;
            sum.add(p);
        }
    }
    if s.count > 0 {
        s.min = Some(lo);
        s.max = Some(hi);
    }
    Ok(s)
}

fn pick(a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

pub(crate) fn merge(a: &MomentsSummary, b: &MomentsSummary) -> Result<MomentsSummary> {
    if a.sums.len() != b.sums.len() {
        return Err(CoreError::invalid("moment summaries differ in order"));
    }
    let sums = a
        .sums
        .iter()
        .zip(&b.sums)
        .map(|(x, y)| {
            let mut s = x.clone();
            s.merge(y);
            s
        })
        .collect();
    Ok(MomentsSummary {
        min: pick(a.min, b.min, f64::min),
        max: pick(a.max, b.max, f64::max),
        count: a.count + b.count,
        missing: a.missing + b.missing,
        sums,
    })
}
