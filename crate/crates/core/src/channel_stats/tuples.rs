use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{invalid, ChannelStatsError, Condition};

/// One beam's statistics inside a tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleRow {
    pub coherence_time_s: f64,
    pub path_diversity: u32,
    pub mean_beam_power_db: f64,
}

/// Per-beam statistics of one channel realization, strongest beam first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTuple {
    condition: Condition,
    ref_carrier_hz: f64,
    ref_speed_mps: f64,
    rows: Vec<TupleRow>,
}

impl ChannelTuple {
    /// Validates the rows and sorts them by mean beam power, descending.
    pub fn new(
        condition: Condition,
        ref_carrier_hz: f64,
        ref_speed_mps: f64,
        mut rows: Vec<TupleRow>,
    ) -> Result<Self, ChannelStatsError> {
        if !(ref_carrier_hz.is_finite() && ref_carrier_hz > 0.0) {
            return Err(invalid("ref_carrier_hz", "must be positive"));
        }
        if !(ref_speed_mps.is_finite() && ref_speed_mps > 0.0) {
            return Err(invalid("ref_speed_mps", "must be positive"));
        }
        if rows.is_empty() {
            return Err(invalid("rows", "a tuple needs at least one beam"));
        }
        for r in &rows {
            if !(r.coherence_time_s.is_finite() && r.coherence_time_s > 0.0) {
                return Err(invalid("coherence_time_s", format!("{} is not positive", r.coherence_time_s)));
            }
            if r.path_diversity == 0 {
                return Err(invalid("path_diversity", "must be at least 1"));
            }
            if !r.mean_beam_power_db.is_finite() {
                return Err(invalid("mean_beam_power_db", "must be finite"));
            }
        }
        rows.sort_by(|a, b| b.mean_beam_power_db.total_cmp(&a.mean_beam_power_db));
        Ok(Self { condition, ref_carrier_hz, ref_speed_mps, rows })
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn ref_carrier_hz(&self) -> f64 {
        self.ref_carrier_hz
    }

    pub fn ref_speed_mps(&self) -> f64 {
        self.ref_speed_mps
    }

    pub fn rows(&self) -> &[TupleRow] {
        &self.rows
    }

    pub fn beams(&self) -> usize {
        self.rows.len()
    }

    /// Row of the `rank`-th strongest beam, 1-based.
    pub fn row(&self, rank: usize) -> Option<&TupleRow> {
        rank.checked_sub(1).and_then(|i| self.rows.get(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Ingested,
    Synthetic,
}

/// LOS and NLOS tuples sharing one reference carrier, speed and beam count.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleLibrary {
    los: Vec<ChannelTuple>,
    nlos: Vec<ChannelTuple>,
    provenance: Provenance,
}

impl TupleLibrary {
    pub fn new(
        los: Vec<ChannelTuple>,
        nlos: Vec<ChannelTuple>,
        provenance: Provenance,
    ) -> Result<Self, ChannelStatsError> {
        if los.is_empty() || nlos.is_empty() {
            return Err(invalid("tuples", "need at least one LOS and one NLOS tuple"));
        }
        let first = &los[0];
        for (cond, set) in [(Condition::Los, &los), (Condition::Nlos, &nlos)] {
            for t in set.iter() {
                if t.condition != cond {
                    return Err(invalid("condition", format!("{} tuple stored as {cond}", t.condition)));
                }
                if t.ref_carrier_hz != first.ref_carrier_hz || t.ref_speed_mps != first.ref_speed_mps {
                    return Err(invalid("reference", "all tuples must share carrier and speed"));
                }
                if t.beams() != first.beams() {
                    return Err(invalid("rows", "all tuples must have the same number of beams"));
                }
            }
        }
        Ok(Self { los, nlos, provenance })
    }

    pub fn tuples(&self, condition: Condition) -> &[ChannelTuple] {
        match condition {
            Condition::Los => &self.los,
            Condition::Nlos => &self.nlos,
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn ref_carrier_hz(&self) -> f64 {
        self.los[0].ref_carrier_hz
    }

    pub fn ref_speed_mps(&self) -> f64 {
        self.los[0].ref_speed_mps
    }

    pub fn beams(&self) -> usize {
        self.los[0].beams()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChannelTuple> {
        self.los.iter().chain(self.nlos.iter())
    }
}

const COLUMNS: [&str; 6] = ["condition", "tuple_id", "beam_rank", "mean_power_db", "coherence_time_s", "path_diversity"];

/// Writes the canonical tuple file: LOS tuples then NLOS tuples, renumbered
/// from 0, rows in rank order.
pub fn export_tuples<W: Write>(library: &TupleLibrary, mut w: W) -> Result<(), ChannelStatsError> {
    writeln!(
        w,
        "# ref_carrier_hz={}, ref_speed_mps={}, B={}",
        library.ref_carrier_hz(),
        library.ref_speed_mps(),
        library.beams()
    )?;
    writeln!(w, "{}", COLUMNS.join(","))?;
    for cond in [Condition::Los, Condition::Nlos] {
        for (m, t) in library.tuples(cond).iter().enumerate() {
            for (b, row) in t.rows.iter().enumerate() {
                writeln!(
                    w,
                    "{cond},{m},{},{},{},{}",
                    b + 1,
                    row.mean_beam_power_db,
                    row.coherence_time_s,
                    row.path_diversity
                )?;
            }
        }
    }
    Ok(())
}

struct Header {
    carrier: f64,
    speed: f64,
    beams: usize,
}

fn parse_header(line: &str) -> Result<Header, ChannelStatsError> {
    let err = |reason: &str| ChannelStatsError::Format { line: 1, reason: reason.to_string() };
    let body = line.trim().strip_prefix('#').ok_or_else(|| err("missing `# ref_carrier_hz=…` header"))?;
    let (mut carrier, mut speed, mut beams) = (None, None, None);
    for part in body.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| err("expected key=value pairs"))?;
        let v = v.trim();
        match k.trim() {
            "ref_carrier_hz" => carrier = Some(v.parse::<f64>().map_err(|_| err("bad ref_carrier_hz"))?),
            "ref_speed_mps" => speed = Some(v.parse::<f64>().map_err(|_| err("bad ref_speed_mps"))?),
            "B" => beams = Some(v.parse::<usize>().map_err(|_| err("bad B"))?),
            _ => return Err(err("unknown header key")),
        }
    }
    match (carrier, speed, beams) {
        (Some(carrier), Some(speed), Some(beams)) if beams >= 1 => Ok(Header { carrier, speed, beams }),
        _ => Err(err("header needs ref_carrier_hz, ref_speed_mps and B >= 1")),
    }
}

/// Reads a tuple file. Rows of each tuple may appear in any order; they are
/// re-sorted by mean beam power.
pub fn ingest_tuples<R: BufRead>(mut reader: R) -> Result<TupleLibrary, ChannelStatsError> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(&first)?;

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let names = rdr.headers().map_err(|e| ChannelStatsError::Format { line: 2, reason: e.to_string() })?;
    if names.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(ChannelStatsError::Format { line: 2, reason: format!("expected columns {}", COLUMNS.join(",")) });
    }

    let mut groups: BTreeMap<(Condition, u64), Vec<(usize, TupleRow)>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 3;
        let fmt = |reason: String| ChannelStatsError::Format { line, reason };
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| fmt(format!("missing column {}", COLUMNS[k])));
        let condition: Condition = field(0)?.parse().map_err(fmt)?;
        let tuple_id: u64 = field(1)?.parse().map_err(|e| fmt(format!("tuple_id: {e}")))?;
        let rank: usize = field(2)?.parse().map_err(|e| fmt(format!("beam_rank: {e}")))?;
        let power: f64 = field(3)?.parse().map_err(|e| fmt(format!("mean_power_db: {e}")))?;
        let tc: f64 = field(4)?.parse().map_err(|e| fmt(format!("coherence_time_s: {e}")))?;
        let l: u32 = field(5)?.parse().map_err(|e| fmt(format!("path_diversity: {e}")))?;
        if !(tc.is_finite() && tc > 0.0) {
            return Err(fmt(format!("coherence time {tc} is not positive")));
        }
        if l == 0 {
            return Err(fmt("path diversity must be at least 1".into()));
        }
        if !power.is_finite() {
            return Err(fmt("mean power must be finite".into()));
        }
        if rank == 0 || rank > header.beams {
            return Err(fmt(format!("beam_rank {rank} outside 1..={}", header.beams)));
        }
        let row = TupleRow { coherence_time_s: tc, path_diversity: l, mean_beam_power_db: power };
        groups.entry((condition, tuple_id)).or_default().push((rank, row));
    }

    let mut los = Vec::new();
    let mut nlos = Vec::new();
    for ((condition, id), mut rows) in groups {
        rows.sort_by_key(|(rank, _)| *rank);
        let ranks: Vec<usize> = rows.iter().map(|(r, _)| *r).collect();
        if ranks != (1..=header.beams).collect::<Vec<_>>() {
            return Err(ChannelStatsError::Format {
                line: 0,
                reason: format!("{condition} tuple {id} does not have exactly ranks 1..={}", header.beams),
            });
        }
        let tuple =
            ChannelTuple::new(condition, header.carrier, header.speed, rows.into_iter().map(|(_, r)| r).collect())?;
        match condition {
            Condition::Los => los.push(tuple),
            Condition::Nlos => nlos.push(tuple),
        }
    }
    TupleLibrary::new(los, nlos, Provenance::Ingested)
}
