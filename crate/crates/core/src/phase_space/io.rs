//! CSV serialisation of wavefunctions and Wigner fields.
//!
//! Wavefunction files start with one comment line carrying the grid and hbar,
//! `# hbar=<h> x_min=<a> x_max=<b> n_points=<n>`, followed by `x,re,im` rows.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use super::grid::GridSpec;
use super::wavefunction::WaveFunction;
use super::wigner::WignerField;
use crate::error::{Error, Result};

pub fn write_wavefunction_csv<W: Write>(psi: &WaveFunction, mut out: W) -> Result<()> {
    let g = psi.grid();
    writeln!(
        out,
        "# hbar={} x_min={} x_max={} n_points={}",
        psi.hbar(),
        g.x_min(),
        g.x_max(),
        g.n_points()
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re", "im"])?;
    for (x, v) in g.points().zip(psi.values()) {
        w.write_record(&[x.to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn header_value(header: &str, key: &str) -> Result<f64> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("header is missing `{key}`")))?
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("header field `{key}`: {e}")))
}

pub fn read_wavefunction_csv<R: Read>(input: R) -> Result<WaveFunction> {
    let mut reader = BufReader::new(input);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("first line must be a `#` header".into()))?;
    let hbar = header_value(header, "hbar")?;
    let n = header_value(header, "n_points")?;
    if n.fract() != 0.0 || n < 0.0 {
        return Err(Error::Parse(format!("n_points must be an integer, got {n}")));
    }
    let grid = GridSpec::new(
        header_value(header, "x_min")?,
        header_value(header, "x_max")?,
        n as usize,
    )?;
    let mut rdr = csv::Reader::from_reader(reader);
    let mut values = Vec::with_capacity(grid.n_points());
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse(format!("row has {} fields", rec.len())))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        values.push(Complex64::new(field(1)?, field(2)?));
    }
    WaveFunction::new(grid, values, hbar)
}

pub fn write_wigner_csv<W: Write>(field: &WignerField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "p", "w"])?;
    for (iq, q) in field.qs.iter().enumerate() {
        for (ip, p) in field.ps.iter().enumerate() {
            w.write_record(&[q.to_string(), p.to_string(), field.get(iq, ip).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `q,p,w` rows back into a lattice. Rows must be grouped by `q`.
pub fn read_wigner_csv<R: Read>(input: R) -> Result<WignerField> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut qs: Vec<f64> = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse("short row".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let (q, p, w) = (parse(0)?, parse(1)?, parse(2)?);
        if qs.last() != Some(&q) {
            qs.push(q);
        }
        if qs.len() == 1 {
            ps.push(p);
        }
        values.push(w);
    }
    if values.len() != qs.len() * ps.len() {
        return Err(Error::Parse("Wigner rows do not form a rectangular lattice".into()));
    }
    let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
    Ok(WignerField {
        dq: step(&qs),
        dp: step(&ps),
        qs,
        ps,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{wigner_function, PhasePoint, WignerOptions};

    #[test]
    fn wavefunction_csv_round_trip_is_exact() {
        let g = GridSpec::new(-1.5, 2.5, 128).unwrap();
        let psi = WaveFunction::coherent_state(g, 0.07, PhasePoint::new(0.3, 0.4), Complex64::new(0.2, 1.3)).unwrap();
        let mut buf = Vec::new();
        write_wavefunction_csv(&psi, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# hbar=0.07 x_min=-1.5 x_max=2.5 n_points=128\nx,re,im\n"));
        let back = read_wavefunction_csv(&buf[..]).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_wavefunction_csv("x,re,im\n0,1,0\n".as_bytes()).is_err());
        let short = "# hbar=0.1 x_min=0 x_max=1 n_points=4\nx,re,im\n0,1,0\n";
        assert!(read_wavefunction_csv(short.as_bytes()).is_err());
    }

    #[test]
    fn wigner_csv_round_trip() {
        let g = GridSpec::symmetric(1.0, 64).unwrap();
        let psi = WaveFunction::coherent_state(g, 0.05, PhasePoint::default(), Complex64::i()).unwrap();
        let w = wigner_function(&psi, &WignerOptions { q_stride: 4, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_wigner_csv(&w, &mut buf).unwrap();
        let back = read_wigner_csv(&buf[..]).unwrap();
        assert_eq!(back.values, w.values);
        assert_eq!(back.qs, w.qs);
        assert_eq!(back.ps, w.ps);
    }
}
