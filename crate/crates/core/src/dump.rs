//! Plain-text dumps of operators and profiles for external cross-checks.
//!
//! Values are written with round-trip precision, so a dump reloads to the
//! identical band.

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::{DiscreteOperator, OperatorTag};
use crate::profile::CutoffProfile;
use crate::scalar::{cplx, Real};

pub const OPERATOR_HEADER: &str = "i,x,offset,re,im";
pub const PROFILE_HEADER: &str = "i,x,value";

/// One row per stored band entry: row index, node coordinate, column offset
/// `j - i` and the complex value.
pub fn operator_csv<T: Real>(op: &DiscreteOperator<T>, grid: &Grid<T>) -> Result<String> {
    if grid.len() != op.dim() {
        return Err(Error::GridMismatch { expected: op.dim(), found: grid.len() });
    }
    let mut out = format!("{OPERATOR_HEADER}\n");
    for i in 0..op.dim() {
        for j in op.band.row_range(i) {
            let v = op.band.get(i, j);
            let off = j as i64 - i as i64;
            out.push_str(&format!("{i},{},{off},{},{}\n", grid.nodes()[i], v.re, v.im));
        }
    }
    Ok(out)
}

/// Rebuilds a band from [`operator_csv`] output. The dump carries no tag or
/// scales, so the caller supplies them.
pub fn operator_from_csv<T: Real>(text: &str, tag: OperatorTag, h: T, dx: T) -> Result<DiscreteOperator<T>> {
    let mut entries = Vec::new();
    let (mut n, mut kl, mut ku) = (0usize, 0usize, 0usize);
    for (k, line) in data_lines(text, OPERATOR_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad_row(k, line));
        }
        let i: usize = f[0].parse().map_err(|_| bad_row(k, line))?;
        let off: i64 = f[2].parse().map_err(|_| bad_row(k, line))?;
        let re = parse_real::<T>(f[3]).ok_or_else(|| bad_row(k, line))?;
        let im = parse_real::<T>(f[4]).ok_or_else(|| bad_row(k, line))?;
        let j = i as i64 + off;
        if j < 0 {
            return Err(bad_row(k, line));
        }
        n = n.max(i + 1).max(j as usize + 1);
        if off < 0 {
            kl = kl.max((-off) as usize);
        } else {
            ku = ku.max(off as usize);
        }
        entries.push((i, j as usize, cplx(re, im)));
    }
    let mut band = BandMatrix::zeros(n, kl, ku);
    for (i, j, v) in entries {
        band.set(i, j, v);
    }
    Ok(DiscreteOperator { band, h, dx, tag })
}

pub fn profile_csv<T: Real>(profile: &CutoffProfile<T>, grid: &Grid<T>) -> Result<String> {
    if grid.len() != profile.len() {
        return Err(Error::GridMismatch { expected: profile.len(), found: grid.len() });
    }
    let mut out = format!("{PROFILE_HEADER}\n");
    for (i, (x, v)) in grid.nodes().iter().zip(&profile.values).enumerate() {
        out.push_str(&format!("{i},{x},{v}\n"));
    }
    Ok(out)
}

/// Profile values in node order.
pub fn profile_values_from_csv<T: Real>(text: &str) -> Result<Vec<T>> {
    let mut values = Vec::new();
    for (k, line) in data_lines(text, PROFILE_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        let ok = f.len() == 3 && f[0].parse::<usize>().ok() == Some(values.len());
        let v = f.get(2).and_then(|s| parse_real::<T>(s));
        match (ok, v) {
            (true, Some(v)) => values.push(v),
            _ => return Err(bad_row(k, line)),
        }
    }
    Ok(values)
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(Error::InvalidParameter(format!("expected header `{header}`")));
    }
    Ok(lines.enumerate().map(|(k, l)| (k + 2, l.trim())).filter(|(_, l)| !l.is_empty()))
}

fn parse_real<T: Real>(s: &str) -> Option<T> {
    s.trim().parse::<f64>().ok().map(T::lit)
}

fn bad_row(line_no: usize, line: &str) -> Error {
    Error::InvalidParameter(format!("malformed dump row {line_no}: `{line}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SupportLayout;
    use crate::potential::PotentialFamily;
    use crate::scene::{Realization, Scene};

    fn nontrap() -> Scene<f64> {
        Scene::new(SupportLayout::default(), PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn operator_round_trip() {
        let d = nontrap().discretize(0.1).unwrap();
        let op = d.operator(Realization::Cap).unwrap();
        let text = operator_csv(&op, &d.grid).unwrap();
        assert!(text.starts_with("i,x,offset,re,im\n"));
        let back = operator_from_csv(&text, op.tag, op.h, op.dx).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn profile_round_trip() {
        let d = nontrap().discretize(0.1).unwrap();
        let text = profile_csv(&d.profiles.chi, &d.grid).unwrap();
        assert_eq!(profile_values_from_csv::<f64>(&text).unwrap(), d.profiles.chi.values);
        assert!(profile_values_from_csv::<f64>("x,y\n").is_err());
    }
}
