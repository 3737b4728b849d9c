use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;

use super::MobilityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    A3Report,
    HoCmdFail,
    HoSuccess,
    T310Start,
    T310Stop,
    Rlf,
    Reestablish,
    OutageEnter,
    OutageExit,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::A3Report,
        EventKind::HoCmdFail,
        EventKind::HoSuccess,
        EventKind::T310Start,
        EventKind::T310Stop,
        EventKind::Rlf,
        EventKind::Reestablish,
        EventKind::OutageEnter,
        EventKind::OutageExit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::A3Report => "A3_REPORT",
            EventKind::HoCmdFail => "HO_CMD_FAIL",
            EventKind::HoSuccess => "HO_SUCCESS",
            EventKind::T310Start => "T310_START",
            EventKind::T310Stop => "T310_STOP",
            EventKind::Rlf => "RLF",
            EventKind::Reestablish => "REESTABLISH",
            EventKind::OutageEnter => "OUTAGE_ENTER",
            EventKind::OutageExit => "OUTAGE_EXIT",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown event `{s}`"))
    }
}

/// One entry of the event log. `detail` holds `key=value` pairs separated by
/// `;`, e.g. `from=3;to=5`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_s: f64,
    pub ue_id: usize,
    pub kind: EventKind,
    pub detail: String,
}

impl Event {
    /// Value of `key` in the detail field.
    pub fn detail_value(&self, key: &str) -> Option<&str> {
        self.detail.split(';').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
    }

    fn cell(&self, key: &str) -> Option<usize> {
        self.detail_value(key)?.parse().ok()
    }
}

const HEADER: &str = "t_s,ue_id,event,detail";

/// Writes the event log as CSV with a `t_s,ue_id,event,detail` header.
pub fn write_event_log<W: Write>(events: &[Event], mut w: W) -> Result<(), MobilityError> {
    writeln!(w, "{HEADER}")?;
    for e in events {
        writeln!(w, "{:.6},{},{},{}", e.t_s, e.ue_id, e.kind, e.detail)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_event_log<R: BufRead>(r: R) -> Result<Vec<Event>, MobilityError> {
    let mut lines = r.lines();
    let fmt_err = |line: usize, reason: String| MobilityError::Format { line, reason };
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(HEADER) {
        return Err(fmt_err(1, format!("expected header `{HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let mut field = |name: &str| parts.next().ok_or_else(|| fmt_err(n, format!("missing `{name}`")));
        let t_s: f64 = field("t_s")?.trim().parse().map_err(|e| fmt_err(n, format!("t_s: {e}")))?;
        let ue_id = field("ue_id")?.trim().parse().map_err(|e| fmt_err(n, format!("ue_id: {e}")))?;
        let kind = field("event")?.trim().parse().map_err(|e| fmt_err(n, e))?;
        let detail = field("detail")?.trim().to_string();
        if !(t_s.is_finite() && t_s >= 0.0) {
            return Err(fmt_err(n, "t_s must be non-negative".into()));
        }
        out.push(Event { t_s, ue_id, kind, detail });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UeKpi {
    pub n_ho: u64,
    pub n_rlf: u64,
    pub outage_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CellKpi {
    pub n_ho_out: u64,
    pub n_ho_in: u64,
    pub n_rlf: u64,
}

/// Mobility KPIs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub n_ho: u64,
    pub n_rlf: u64,
    pub outage_percent: f64,
    pub ues: usize,
    pub duration_s: f64,
    pub per_ue: Vec<UeKpi>,
    pub per_cell: Vec<CellKpi>,
}

impl KpiReport {
    fn per_ue_per_minute(&self, n: u64) -> f64 {
        n as f64 / (self.ues as f64 * self.duration_s / 60.0)
    }

    /// Successful handovers per UE per minute.
    pub fn ho_rate(&self) -> f64 {
        self.per_ue_per_minute(self.n_ho)
    }

    /// Radio link failures per UE per minute.
    pub fn rlf_rate(&self) -> f64 {
        self.per_ue_per_minute(self.n_rlf)
    }
}

/// `Σ_u outage_u / (U·T) · 100`.
pub fn outage_percent(outage_s: &[f64], duration_s: f64) -> Result<f64, MobilityError> {
    if outage_s.is_empty() {
        return Err(super::invalid("ues", "need at least one UE"));
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(super::invalid("duration_s", "must be positive"));
    }
    Ok(outage_s.iter().sum::<f64>() / (outage_s.len() as f64 * duration_s) * 100.0)
}

/// Recomputes the KPIs from an event log. Outage intervals run from
/// `OUTAGE_ENTER` to `OUTAGE_EXIT`; one still open at the end of the log is
/// closed at `duration_s`. Cell breakdowns use the `from`/`to`/`cell` detail keys.
pub fn analyze_event_log(events: &[Event], ues: usize, duration_s: f64) -> Result<KpiReport, MobilityError> {
    let mut per_ue = vec![UeKpi::default(); ues];
    let mut per_cell: Vec<CellKpi> = Vec::new();
    let mut open: Vec<Option<f64>> = vec![None; ues];
    fn cell(per_cell: &mut Vec<CellKpi>, c: usize) -> &mut CellKpi {
        if per_cell.len() <= c {
            per_cell.resize(c + 1, CellKpi::default());
        }
        &mut per_cell[c]
    }
    for (i, e) in events.iter().enumerate() {
        if e.ue_id >= ues {
            return Err(MobilityError::Format { line: i + 2, reason: format!("ue_id {} out of range", e.ue_id) });
        }
        let u = &mut per_ue[e.ue_id];
        match e.kind {
            EventKind::HoSuccess => {
                u.n_ho += 1;
                if let Some(c) = e.cell("from") {
                    cell(&mut per_cell, c).n_ho_out += 1;
                }
                if let Some(c) = e.cell("to") {
                    cell(&mut per_cell, c).n_ho_in += 1;
                }
            }
            EventKind::Rlf => {
                u.n_rlf += 1;
                if let Some(c) = e.cell("cell") {
                    cell(&mut per_cell, c).n_rlf += 1;
                }
            }
            EventKind::OutageEnter => {
                open[e.ue_id].get_or_insert(e.t_s);
            }
            EventKind::OutageExit => {
                if let Some(t0) = open[e.ue_id].take() {
                    u.outage_s += e.t_s - t0;
                }
            }
            _ => {}
        }
    }
    for (u, t0) in per_ue.iter_mut().zip(open) {
        if let Some(t0) = t0 {
            u.outage_s += (duration_s - t0).max(0.0);
        }
    }
    let outage: Vec<f64> = per_ue.iter().map(|u| u.outage_s).collect();
    Ok(KpiReport {
        n_ho: per_ue.iter().map(|u| u.n_ho).sum(),
        n_rlf: per_ue.iter().map(|u| u.n_rlf).sum(),
        outage_percent: outage_percent(&outage, duration_s)?,
        ues,
        duration_s,
        per_ue,
        per_cell,
    })
}
