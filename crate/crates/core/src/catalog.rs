//! Plain-text persistence of pole catalogs and their residues.
//!
//! Header lines start with `#` and carry `key: value` pairs. Every float is
//! written with 17 significant digits so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::PoleCatalog;
use crate::resonances::ResidueSet;

pub const FORMAT_VERSION: &str = "resopack-catalog 1";

const COLUMNS: &str = "n,re_kappa,im_kappa,residual,re_r,im_r,re_u0,im_u0,re_ul,im_ul";

/// A catalog with residues, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCatalog {
    pub catalog: PoleCatalog,
    pub residues: ResidueSet,
    /// Extra `key: value` header pairs, in order.
    pub metadata: Vec<(String, String)>,
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, ",{v:.16e}");
}

pub fn to_csv(stored: &StoredCatalog) -> Result<String> {
    let StoredCatalog { catalog, residues, metadata } = stored;
    if residues.len() != catalog.len() {
        return Err(Error::CatalogFormat(format!(
            "{} residues for {} poles",
            residues.len(),
            catalog.len()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "# format: {FORMAT_VERSION}");
    let _ = writeln!(out, "# fingerprint: {}", catalog.fingerprint);
    let _ = writeln!(out, "# rng_seed: {}", catalog.rng_seed);
    let _ = writeln!(out, "# length_nm: {:.16e}", residues.length);
    let _ = writeln!(out, "# units: kappa 1/nm, residue nm^-1, u nm^-1/2");
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(COLUMNS);
    out.push('\n');
    for i in 0..catalog.len() {
        let _ = write!(out, "{}", i + 1);
        let k = catalog.poles[i];
        num(&mut out, k.re);
        num(&mut out, k.im);
        num(&mut out, catalog.residuals[i]);
        for c in [residues.residues[i], residues.u0[i], residues.u_l[i]] {
            num(&mut out, c.re);
            num(&mut out, c.im);
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::CatalogFormat(format!("line {line}: bad number {field:?}")))
}

pub fn from_csv(text: &str) -> Result<StoredCatalog> {
    let mut header: Vec<(String, String)> = Vec::new();
    let mut rows: Vec<[f64; 9]> = Vec::new();
    let mut saw_columns = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::CatalogFormat(format!("line {line}: header without ':'")))?;
            header.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        if !saw_columns {
            if raw.trim() != COLUMNS {
                return Err(Error::CatalogFormat(format!("line {line}: unexpected column header")));
            }
            saw_columns = true;
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::CatalogFormat(format!("line {line}: expected 10 fields")));
        }
        let n: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::CatalogFormat(format!("line {line}: bad index")))?;
        if n != rows.len() + 1 {
            return Err(Error::CatalogFormat(format!("line {line}: index {n} out of sequence")));
        }
        let mut row = [0.0; 9];
        for (slot, f) in row.iter_mut().zip(&fields[1..]) {
            *slot = parse_f64(f, line)?;
        }
        rows.push(row);
    }
    if !saw_columns {
        return Err(Error::CatalogFormat("missing column header".into()));
    }
    let take = |key: &str| -> Result<String> {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::CatalogFormat(format!("missing header {key:?}")))
    };
    if take("format")? != FORMAT_VERSION {
        return Err(Error::CatalogFormat("unsupported format version".into()));
    }
    let fingerprint = take("fingerprint")?;
    let rng_seed = take("rng_seed")?
        .parse()
        .map_err(|_| Error::CatalogFormat("bad rng_seed".into()))?;
    let length = parse_f64(&take("length_nm")?, 0)?;
    let c = |a: f64, b: f64| Complex64::new(a, b);
    let catalog = PoleCatalog {
        poles: rows.iter().map(|r| c(r[0], r[1])).collect(),
        residuals: rows.iter().map(|r| r[2]).collect(),
        fingerprint,
        rng_seed,
    };
    let residues = ResidueSet {
        residues: rows.iter().map(|r| c(r[3], r[4])).collect(),
        u0: rows.iter().map(|r| c(r[5], r[6])).collect(),
        u_l: rows.iter().map(|r| c(r[7], r[8])).collect(),
        length,
    };
    let reserved = ["format", "fingerprint", "rng_seed", "length_nm", "units"];
    let metadata = header.into_iter().filter(|(k, _)| !reserved.contains(&k.as_str())).collect();
    Ok(StoredCatalog { catalog, residues, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StoredCatalog {
        let poles = vec![Complex64::new(0.1 + 1e-17, -3.3e-5), Complex64::new(2.0 / 3.0, -1.0 / 7.0)];
        StoredCatalog {
            catalog: PoleCatalog {
                poles,
                residuals: vec![1.2e-13, 0.0],
                fingerprint: "abc123".into(),
                rng_seed: 7,
            },
            residues: ResidueSet {
                residues: vec![Complex64::new(1.0 / 3.0, -f64::MIN_POSITIVE), Complex64::new(-0.0, 5e300)],
                u0: vec![Complex64::new(0.5, 0.25); 2],
                u_l: vec![Complex64::new(-0.5, 1e-300); 2],
                length: 15.0,
            },
            metadata: vec![("preset".into(), "db".into())],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let text = to_csv(&s).unwrap();
        let back = from_csv(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_csv(&back).unwrap(), text);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let text = to_csv(&sample()).unwrap();
        assert!(from_csv(&text.replace("resopack-catalog 1", "other 9")).is_err());
        assert!(from_csv(&text.replacen("\n1,", "\n3,", 1)).is_err());
        assert!(from_csv("# format: resopack-catalog 1\n").is_err());
    }
}
