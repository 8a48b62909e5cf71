//! CSV readers and writers. Floats are written in Rust's shortest
//! round-trip form, so identical results give identical bytes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gamma::{GammaSweepReport, LebesgueTable};
use crate::geometry::Point;
use crate::reconstruct::Reconstruction;

fn bad(what: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::schema(format!("{what}:{line}"), msg.to_string())
}

fn records(text: &str, what: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let got = rdr.headers().map_err(|e| bad(what, 1, e))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(bad(what, 1, format!("expected header `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(what, 0, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(bad(what, line, format!("expected {} fields", header.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn float(what: &str, line: usize, s: &str) -> Result<f64> {
    let x: f64 = s.parse().map_err(|_| bad(what, line, format!("`{s}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad(what, line, "value must be finite"));
    }
    Ok(x)
}

fn index(what: &str, line: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad(what, line, format!("`{s}` is not an index")))
}

/// Thickness knots, columns `facet,offset,d`. Rows may come in any order;
/// they are grouped by facet and sorted by offset.
pub fn parse_knots(text: &str) -> Result<Vec<(usize, Vec<(f64, f64)>)>> {
    let mut by_facet: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (line, r) in records(text, "knots", &["facet", "offset", "d"])? {
        let facet = index("knots", line, &r[0])?;
        by_facet
            .entry(facet)
            .or_default()
            .push((float("knots", line, &r[1])?, float("knots", line, &r[2])?));
    }
    Ok(by_facet
        .into_iter()
        .map(|(f, mut list)| {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            (f, list)
        })
        .collect())
}

/// Per-triangle values, single column `f`.
pub fn parse_triangle_values(text: &str) -> Result<Vec<f64>> {
    records(text, "source", &["f"])?
        .into_iter()
        .map(|(line, r)| float("source", line, &r[0]))
        .collect()
}

/// Nodal field, columns `node,x,y,u` with nodes numbered `0..n` in order.
pub fn parse_nodal_field(text: &str) -> Result<Vec<f64>> {
    let mut u = Vec::new();
    for (line, r) in records(text, "field", &["node", "x", "y", "u"])? {
        let node = index("field", line, &r[0])?;
        if node != u.len() {
            return Err(bad("field", line, format!("expected node {}, got {node}", u.len())));
        }
        float("field", line, &r[1])?;
        float("field", line, &r[2])?;
        u.push(float("field", line, &r[3])?);
    }
    Ok(u)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

pub fn nodal_field_csv(nodes: &[Point], u: &[f64]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "x", "y", "u"]).unwrap();
    for (i, (p, u)) in nodes.iter().zip(u).enumerate() {
        w.write_record(&[i.to_string(), p[0].to_string(), p[1].to_string(), u.to_string()])
            .unwrap();
    }
    finish(w)
}

/// Insulated nodes in boundary order with arc length, `d` and the normal
/// thickness `(k.n) d`, followed by a `mass` row holding the lumped
/// `sum w (k.n) d`.
pub fn reconstruction_csv(r: &Reconstruction, nodes: &[Point]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "node", "x", "y", "arc", "d", "d_normal"]).unwrap();
    let b = &r.boundary;
    // arc length along the insulated edges in traversal order
    let mut arc = vec![f64::NAN; b.len()];
    let mut s = 0.0;
    for &(la, lb, _) in &b.edges {
        if arc[la].is_nan() {
            arc[la] = s;
        }
        let (pa, pb) = (nodes[b.nodes[la]], nodes[b.nodes[lb]]);
        s += (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        if arc[lb].is_nan() {
            arc[lb] = s;
        }
    }
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&i, &j| arc[i].total_cmp(&arc[j]).then(i.cmp(&j)));
    for l in order {
        let g = b.nodes[l];
        w.write_record(&[
            "node".to_string(),
            g.to_string(),
            nodes[g][0].to_string(),
            nodes[g][1].to_string(),
            arc[l].to_string(),
            r.nodal[l].to_string(),
            r.normal[l].to_string(),
        ])
        .unwrap();
    }
    w.write_record(["mass", "", "", "", "", "", &r.mass.to_string()]).unwrap();
    finish(w)
}

pub fn sweep_csv(r: &GammaSweepReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "h",
        "eps",
        "e_limit",
        "e_eps",
        "e_recovery",
        "gap_solution",
        "gap_recovery",
        "coercivity",
        "area_ratio",
        "poincare_worst",
        "poincare_passed",
    ])
    .unwrap();
    for level in &r.levels {
        for row in &level.rows {
            w.write_record(&[
                level.h.to_string(),
                row.eps.to_string(),
                level.limit.to_string(),
                row.solution.to_string(),
                row.recovery.to_string(),
                row.gap_solution.to_string(),
                row.gap_recovery.to_string(),
                row.coercivity.to_string(),
                row.area_ratio.to_string(),
                row.poincare_worst.to_string(),
                row.poincare_passed.to_string(),
            ])
            .unwrap();
        }
    }
    finish(w)
}

pub fn lebesgue_csv(t: &LebesgueTable) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "eps", "value", "limit", "error", "order"]).unwrap();
    for (i, row) in t.rows.iter().enumerate() {
        let order = if i == 0 { String::new() } else { t.orders[i - 1].to_string() };
        w.write_record(&[
            t.p.to_string(),
            row.eps.to_string(),
            row.value.to_string(),
            row.limit.to_string(),
            row.error.to_string(),
            order,
        ])
        .unwrap();
    }
    finish(w)
}
