use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, structural, Result};
use crate::model::{Coflow, CoflowInstance};

/// Link capacity of ingested traces, MB per second.
pub const TRACE_CAPACITY: f64 = 128.0;

/// One shuffle from a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub coflow_id: u64,
    pub arrival_ms: u64,
    pub mapper_ports: Vec<usize>,
    /// `(rack, shuffle megabytes)` per reducer.
    pub reducer_entries: Vec<(usize, f64)>,
}

#[derive(Debug, Deserialize)]
struct Row {
    coflow_id: u64,
    arrival_ms: u64,
    mappers: String,
    reducers: String,
}

fn parse_rack(s: &str, line: usize) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| argument(format!("line {line}: bad rack id `{s}`")))
}

/// Parses the `coflow_id,arrival_ms,mappers,reducers` layout, with mappers as
/// `;`-separated racks and reducers as `;`-separated `rack:megabytes`.
pub fn parse_trace(reader: impl Read) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let line = i + 2;
        let mapper_ports = row
            .mappers
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_rack(s, line))
            .collect::<Result<Vec<_>>>()?;
        let reducer_entries = row
            .reducers
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|entry| {
                let (rack, mb) = entry.split_once(':').ok_or_else(|| {
                    argument(format!("line {line}: reducer `{entry}` is not rack:MB"))
                })?;
                let mb: f64 = mb
                    .trim()
                    .parse()
                    .map_err(|_| argument(format!("line {line}: bad volume `{mb}`")))?;
                Ok((parse_rack(rack, line)?, mb))
            })
            .collect::<Result<Vec<_>>>()?;
        if mapper_ports.is_empty() || reducer_entries.is_empty() {
            return Err(argument(format!(
                "line {line}: needs at least one mapper and one reducer"
            )));
        }
        if let Some((_, v)) = reducer_entries
            .iter()
            .find(|(_, v)| !(v.is_finite() && *v > 0.0))
        {
            return Err(argument(format!(
                "line {line}: shuffle volume {v} must be positive"
            )));
        }
        out.push(TraceRecord {
            coflow_id: row.coflow_id,
            arrival_ms: row.arrival_ms,
            mapper_ports,
            reducer_entries,
        });
    }
    Ok(out)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    parse_trace(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReleaseMode {
    /// Release at the arrival time in seconds, compressed tenfold.
    WithReleases,
    ZeroReleases,
}

/// Builds an instance with link capacity [`TRACE_CAPACITY`]: every reducer's
/// volume is split evenly over the mappers, and coflows with fewer than
/// `min_flows` nonzero flows are dropped. Coflow ids follow record order.
pub fn ingest_trace(
    records: &[TraceRecord],
    n_ports: usize,
    mode: ReleaseMode,
    min_flows: usize,
) -> Result<CoflowInstance> {
    let mut coflows = Vec::new();
    for rec in records {
        let mut demand: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let share = 1.0 / rec.mapper_ports.len() as f64;
        for &(reducer, mb) in &rec.reducer_entries {
            for &mapper in &rec.mapper_ports {
                if mapper >= n_ports || reducer >= n_ports {
                    return Err(structural(format!(
                        "coflow {}: rack {} outside 0..{n_ports}",
                        rec.coflow_id,
                        mapper.max(reducer)
                    )));
                }
                *demand.entry((mapper, reducer)).or_insert(0.0) += mb * share;
            }
        }
        if demand.len() < min_flows {
            continue;
        }
        let release = match mode {
            ReleaseMode::WithReleases => rec.arrival_ms as f64 / 1000.0 / 10.0,
            ReleaseMode::ZeroReleases => 0.0,
        };
        coflows.push(Coflow::new(
            demand.into_iter().map(|((s, d), v)| (s, d, v)),
            release,
            1.0,
        )?);
    }
    if coflows.is_empty() {
        return Err(argument(format!(
            "no coflow has at least {min_flows} flows"
        )));
    }
    CoflowInstance::with_capacity(n_ports, TRACE_CAPACITY, coflows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "coflow_id,arrival_ms,mappers,reducers\n\
                          1,20000,0;1,2:10\n\
                          2,20500,3,0:4;1:6;2:1;3:2\n";

    #[test]
    fn parses_sample() {
        let recs = parse_trace(SAMPLE.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].mapper_ports, vec![0, 1]);
        assert_eq!(recs[0].reducer_entries, vec![(2, 10.0)]);
        assert_eq!(recs[1].reducer_entries.len(), 4);
    }

    #[test]
    fn even_split_and_scaled_release() {
        let recs = parse_trace(SAMPLE.as_bytes()).unwrap();
        let inst = ingest_trace(&recs, 4, ReleaseMode::WithReleases, 1).unwrap();
        assert_eq!(inst.capacity(), 128.0);
        let d = inst.coflow(0).demands();
        assert_eq!(d[&(0, 2)], 5.0);
        assert_eq!(d[&(1, 2)], 5.0);
        assert_eq!(inst.coflow(0).release(), 2.0);
        assert!((inst.total_demand() - 23.0).abs() < 1e-9);
        let zero = ingest_trace(&recs, 4, ReleaseMode::ZeroReleases, 1).unwrap();
        assert!(zero.all_released_at_zero());
    }

    #[test]
    fn filter_drops_small_coflows() {
        let recs = parse_trace(SAMPLE.as_bytes()).unwrap();
        let inst = ingest_trace(&recs, 4, ReleaseMode::WithReleases, 4).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.coflow(0).num_flows(), 4);
        assert!(ingest_trace(&recs, 4, ReleaseMode::WithReleases, 10).is_err());
    }

    #[test]
    fn bad_rack_is_structural() {
        let recs = parse_trace(SAMPLE.as_bytes()).unwrap();
        assert!(matches!(
            ingest_trace(&recs, 3, ReleaseMode::WithReleases, 1),
            Err(crate::Error::Structural(_))
        ));
    }

    #[test]
    fn malformed_rows_rejected() {
        let bad = "coflow_id,arrival_ms,mappers,reducers\n1,0,0,2\n";
        assert!(parse_trace(bad.as_bytes()).is_err());
        let neg = "coflow_id,arrival_ms,mappers,reducers\n1,0,0,2:-1\n";
        assert!(parse_trace(neg.as_bytes()).is_err());
        let empty = "coflow_id,arrival_ms,mappers,reducers\n1,0,,2:1\n";
        assert!(parse_trace(empty.as_bytes()).is_err());
    }
}
