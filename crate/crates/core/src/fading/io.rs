use std::io::{BufRead, Write};

use super::{FadingError, FadingProcess};

const HEADER: &str = "t_s,power";

/// Writes `t_s,power` rows, one per sample.
pub fn write_envelope_csv<W: Write>(process: &FadingProcess, mut w: W) -> Result<(), FadingError> {
    writeln!(w, "{HEADER}")?;
    let ts = process.sample_period_s();
    for (i, p) in process.samples().iter().enumerate() {
        writeln!(w, "{},{}", i as f64 * ts, p)?;
    }
    Ok(())
}

/// Reads an envelope written by [`write_envelope_csv`]. The sample period is
/// taken from the first two timestamps; later rows must keep that spacing.
pub fn read_envelope_csv<R: BufRead>(r: R) -> Result<FadingProcess, FadingError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_s", "power"] {
        return Err(FadingError::Csv { line: 1, reason: format!("expected header `{HEADER}`") });
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(line, e))?;
        let t: f64 = parse(&rec, 0, line)?;
        let p: f64 = parse(&rec, 1, line)?;
        times.push(t);
        samples.push(p);
    }
    if samples.len() < 2 {
        return Err(FadingError::Csv { line: 0, reason: "need at least two samples".into() });
    }
    let ts = times[1] - times[0];
    if !(ts > 0.0) {
        return Err(FadingError::Csv { line: 3, reason: "timestamps must increase".into() });
    }
    for (i, t) in times.iter().enumerate() {
        let expect = i as f64 * ts + times[0];
        if (t - expect).abs() > 1e-6 * ts.max(expect.abs() * 1e-6) + 1e-12 {
            return Err(FadingError::Csv { line: i + 2, reason: "non-uniform sample spacing".into() });
        }
    }
    FadingProcess::from_samples(samples, ts, None)
}

fn parse(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<f64, FadingError> {
    rec.get(idx)
        .ok_or_else(|| FadingError::Csv { line, reason: "missing column".into() })?
        .parse()
        .map_err(|e| FadingError::Csv { line, reason: format!("{e}") })
}

fn csv_err(line: usize, e: csv::Error) -> FadingError {
    FadingError::Csv { line, reason: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = FadingProcess::from_samples(vec![0.5, 1.25, 2.0, 0.125], 1e-3, None).unwrap();
        let mut buf = Vec::new();
        write_envelope_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_s,power\n0,0.5\n0.001,1.25\n"));
        let back = read_envelope_csv(&buf[..]).unwrap();
        assert_eq!(back.samples(), p.samples());
        assert!((back.sample_period_s() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_envelope_csv("time,power\n0,1\n1,1\n".as_bytes()).is_err());
        assert!(read_envelope_csv("t_s,power\n0,1\n".as_bytes()).is_err());
        assert!(read_envelope_csv("t_s,power\n0,1\n0.001,x\n".as_bytes()).is_err());
        assert!(read_envelope_csv("t_s,power\n0,1\n0.001,-1\n".as_bytes()).is_err());
        assert!(read_envelope_csv("t_s,power\n0,1\n0.001,1\n0.005,1\n".as_bytes()).is_err());
    }
}
