//! File formats: field, point, coefficient, trajectory and spectrum CSVs,
//! and the coupling-tensor file with its JSON sidecar and on-disk cache.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is lossless and identical inputs give identical bytes.

use crate::basis::{BeamBasis, ModeIndex, ModeSet};
use crate::dynamics::{compute_coupling_tensor, CouplingTensor, GammaEntry, TrajectoryRecord};
use crate::entropy::ModalSpectrum;
use crate::error::{Error, Result};
use crate::transform::{CoefficientVector, QuadratureGrid};
use crate::vec3::CVec3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Environment variable naming the coupling-tensor cache directory.
pub const CACHE_DIR_ENV: &str = "DFRT_CACHE_DIR";

pub const FIELD_HEADER: [&str; 9] = ["x", "y", "z", "ux_re", "ux_im", "uy_re", "uy_im", "uz_re", "uz_im"];
pub const COEFF_HEADER: [&str; 5] = ["ell", "m", "n", "a_re", "a_im"];

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// `path` with its extension replaced by `json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn parse_f(s: &str, what: &str, row: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format(format!("row {row}: cannot parse {what} `{s}`")))
}

fn check_header(rdr: &mut csv::Reader<File>, expected: &[&str], path: &Path) -> Result<()> {
    let h = rdr.headers()?;
    let got: Vec<&str> = h.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "{}: expected header `{}`, got `{}`",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_path(path)?)
}

/// Grid metadata stored next to a field CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub radius: f64,
}

fn write_vector_rows(path: &Path, points: &[[f64; 3]], values: &[CVec3]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FIELD_HEADER)?;
    for (p, u) in points.iter().zip(values) {
        let mut rec: Vec<String> = p.iter().map(|&x| fmt_f(x)).collect();
        for c in u {
            rec.push(fmt_f(c.re));
            rec.push(fmt_f(c.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn read_vector_rows(path: &Path) -> Result<(Vec<[f64; 3]>, Vec<CVec3>)> {
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, &FIELD_HEADER, path)?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 9 {
            return Err(Error::Format(format!("row {}: expected 9 columns, got {}", row + 1, rec.len())));
        }
        let f: Vec<f64> =
            rec.iter().enumerate().map(|(c, s)| parse_f(s, FIELD_HEADER[c], row + 1)).collect::<Result<_>>()?;
        points.push([f[0], f[1], f[2]]);
        values.push([Complex64::new(f[3], f[4]), Complex64::new(f[5], f[6]), Complex64::new(f[7], f[8])]);
    }
    Ok((points, values))
}

/// Field values on grid nodes, plus the grid sidecar.
pub fn write_field_csv(path: &Path, grid: &QuadratureGrid, values: &[CVec3]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Dimension(format!("{} values for {} grid nodes", values.len(), grid.len())));
    }
    let pts: Vec<[f64; 3]> = grid.nodes().iter().map(|n| n.x).collect();
    write_vector_rows(path, &pts, values)?;
    let (n_r, n_theta, n_phi) = grid.counts();
    let side = GridSidecar { n_r, n_theta, n_phi, radius: grid.radius() };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Read a gridded field; the grid is rebuilt from the sidecar and the node
/// coordinates in the file must match it.
pub fn read_field_csv(path: &Path) -> Result<(Arc<QuadratureGrid>, Vec<CVec3>)> {
    let side_path = sidecar_path(path);
    let side: GridSidecar = serde_json::from_str(
        &fs::read_to_string(&side_path)
            .map_err(|e| Error::Format(format!("missing grid sidecar {}: {e}", side_path.display())))?,
    )?;
    let grid = QuadratureGrid::new(side.n_r, side.n_theta, side.n_phi, side.radius)?;
    let (points, values) = read_vector_rows(path)?;
    if points.len() != grid.len() {
        return Err(Error::Dimension(format!("{} rows for a grid of {} nodes", points.len(), grid.len())));
    }
    let tol = 1e-9 * side.radius;
    for (row, (p, n)) in points.iter().zip(grid.nodes()).enumerate() {
        if (0..3).any(|c| (p[c] - n.x[c]).abs() > tol) {
            return Err(Error::Format(format!("row {}: point does not match the grid node order", row + 1)));
        }
    }
    Ok((Arc::new(grid), values))
}

/// Field values at arbitrary points (no sidecar).
pub fn write_points_field_csv(path: &Path, points: &[[f64; 3]], values: &[CVec3]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::Dimension("point and value counts differ".into()));
    }
    write_vector_rows(path, points, values)
}

/// Points file with header `x,y,z`.
pub fn read_points_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, &["x", "y", "z"], path)?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Format(format!("row {}: expected 3 columns", row + 1)));
        }
        out.push([parse_f(&rec[0], "x", row + 1)?, parse_f(&rec[1], "y", row + 1)?, parse_f(&rec[2], "z", row + 1)?]);
    }
    Ok(out)
}

pub fn write_points_csv(path: &Path, points: &[[f64; 3]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z"])?;
    for p in points {
        w.write_record(p.iter().map(|&x| fmt_f(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coeffs_csv(path: &Path, coeffs: &CoefficientVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COEFF_HEADER)?;
    for (mode, v) in coeffs.mode_set().iter().zip(coeffs.values()) {
        w.write_record([mode.ell.to_string(), mode.m.to_string(), mode.n.to_string(), fmt_f(v.re), fmt_f(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Read coefficients; the truncation is inferred from the rows, which must
/// list the full mode set in order. The file carries no radius.
pub fn read_coeffs_csv(path: &Path, radius: f64) -> Result<CoefficientVector> {
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, &COEFF_HEADER, path)?;
    let mut modes = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::Format(format!("row {}: expected 5 columns", row + 1)));
        }
        let int = |s: &str, what: &str| -> Result<i64> {
            s.trim().parse::<i64>().map_err(|_| Error::Format(format!("row {}: cannot parse {what} `{s}`", row + 1)))
        };
        let ell =
            u32::try_from(int(&rec[0], "ell")?).map_err(|_| Error::Format(format!("row {}: negative ell", row + 1)))?;
        let m =
            i32::try_from(int(&rec[1], "m")?).map_err(|_| Error::Format(format!("row {}: m out of range", row + 1)))?;
        let n = u32::try_from(int(&rec[2], "n")?).map_err(|_| Error::Format(format!("row {}: negative n", row + 1)))?;
        modes.push(ModeIndex::new(ell, m, n)?);
        values.push(Complex64::new(parse_f(&rec[3], "a_re", row + 1)?, parse_f(&rec[4], "a_im", row + 1)?));
    }
    let ms = mode_set_from_modes(&modes, radius)?;
    CoefficientVector::new(ms, values)
}

fn mode_set_from_modes(modes: &[ModeIndex], radius: f64) -> Result<ModeSet> {
    let l_max = modes.iter().map(|m| m.ell).max().ok_or_else(|| Error::Format("no modes".into()))?;
    let n_max = modes.iter().map(|m| m.n).max().unwrap_or(1);
    let ms = ModeSet::new(l_max, n_max, radius)?;
    if ms.modes() != modes {
        return Err(Error::Format(format!(
            "modes do not form the complete (l_max, n_max) = ({l_max}, {n_max}) set in order"
        )));
    }
    Ok(ms)
}

fn mode_column(mode: &ModeIndex, part: &str) -> String {
    format!("a_{}_{}_{}_{part}", mode.ell, mode.m, mode.n)
}

fn parse_mode_column(name: &str) -> Option<(ModeIndex, bool)> {
    let rest = name.strip_prefix("a_")?;
    let (body, re) =
        if let Some(b) = rest.strip_suffix("_re") { (b, true) } else { (rest.strip_suffix("_im")?, false) };
    let mut it = body.split('_');
    let ell = it.next()?.parse().ok()?;
    let m = it.next()?.parse().ok()?;
    let n = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((ModeIndex::new(ell, m, n).ok()?, re))
}

/// Header `t,E,D` then `a_<ℓ>_<m>_<n>_re, a_<ℓ>_<m>_<n>_im` per mode.
pub fn write_trajectory_csv(path: &Path, traj: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let ms = match traj.coefficients.first() {
        Some(c) => c.mode_set().clone(),
        None => return Err(Error::InsufficientData("empty trajectory".into())),
    };
    let mut header = vec!["t".to_string(), "E".to_string(), "D".to_string()];
    for mode in ms.iter() {
        header.push(mode_column(mode, "re"));
        header.push(mode_column(mode, "im"));
    }
    w.write_record(&header)?;
    for s in 0..traj.len() {
        let mut rec = vec![fmt_f(traj.times[s]), fmt_f(traj.energy[s]), fmt_f(traj.dissipation[s])];
        for v in traj.coefficients[s].values() {
            rec.push(fmt_f(v.re));
            rec.push(fmt_f(v.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path, radius: f64) -> Result<TrajectoryRecord> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 5
        || header[0] != "t"
        || header[1] != "E"
        || header[2] != "D"
        || !(header.len() - 3).is_multiple_of(2)
    {
        return Err(Error::Format(format!("{}: not a trajectory file", path.display())));
    }
    let mut modes = Vec::new();
    for pair in header[3..].chunks(2) {
        match (parse_mode_column(&pair[0]), parse_mode_column(&pair[1])) {
            (Some((a, true)), Some((b, false))) if a == b => modes.push(a),
            _ => return Err(Error::Format(format!("bad coefficient columns `{}`,`{}`", pair[0], pair[1]))),
        }
    }
    let ms = mode_set_from_modes(&modes, radius)?;
    let mut traj = TrajectoryRecord::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Format(format!("row {}: expected {} columns", row + 1, header.len())));
        }
        let f: Vec<f64> = rec.iter().map(|s| parse_f(s, "value", row + 1)).collect::<Result<_>>()?;
        let values = f[3..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        traj.times.push(f[0]);
        traj.energy.push(f[1]);
        traj.dissipation.push(f[2]);
        traj.projection_drift.push(0.0);
        traj.coefficients.push(CoefficientVector::new(ms.clone(), values)?);
    }
    Ok(traj)
}

pub fn write_spectrum_csv(path: &Path, spec: &ModalSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ell", "E", "P"])?;
    for ((l, e), p) in spec.ell_values.iter().zip(&spec.e_ell).zip(&spec.p_ell) {
        w.write_record([l.to_string(), fmt_f(*e), fmt_f(*p)])?;
    }
    w.flush()?;
    Ok(())
}

const GAMMA_MAGIC: &[u8; 8] = b"DFRTGAMA";
const GAMMA_VERSION: u32 = 1;

/// Metadata stored beside a coupling-tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSidecar {
    pub lmax: u32,
    pub nmax: u32,
    pub radius: f64,
    pub grid: [usize; 3],
    /// SHA-256 of the tensor file.
    pub hash: String,
}

fn gamma_is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn gamma_bytes(tensor: &CouplingTensor) -> Vec<u8> {
    let ms = tensor.mode_set();
    let (a, b, c) = tensor.grid_counts();
    let mut out = Vec::with_capacity(64 + tensor.len() * 28);
    out.extend_from_slice(GAMMA_MAGIC);
    out.extend_from_slice(&GAMMA_VERSION.to_le_bytes());
    out.extend_from_slice(&ms.l_max().to_le_bytes());
    out.extend_from_slice(&ms.n_max().to_le_bytes());
    out.extend_from_slice(&ms.radius().to_le_bytes());
    for g in [a, b, c] {
        out.extend_from_slice(&(g as u64).to_le_bytes());
    }
    out.extend_from_slice(&(tensor.pruned as u64).to_le_bytes());
    out.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
    for e in tensor.entries() {
        for idx in [e.i, e.j, e.k] {
            out.extend_from_slice(&(idx as u32).to_le_bytes());
        }
        out.extend_from_slice(&e.value.re.to_le_bytes());
        out.extend_from_slice(&e.value.im.to_le_bytes());
    }
    out
}

fn gamma_csv_bytes(tensor: &CouplingTensor) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "k", "gamma_re", "gamma_im"])?;
    for e in tensor.entries() {
        w.write_record([e.i.to_string(), e.j.to_string(), e.k.to_string(), fmt_f(e.value.re), fmt_f(e.value.im)])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Write the tensor (binary unless the extension is `.csv`) and its
/// sidecar. Returns the content hash.
pub fn write_gamma(path: &Path, tensor: &CouplingTensor) -> Result<String> {
    let bytes = if gamma_is_csv(path) { gamma_csv_bytes(tensor)? } else { gamma_bytes(tensor) };
    let hash = sha256_hex(&bytes);
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    let ms = tensor.mode_set();
    let (a, b, c) = tensor.grid_counts();
    let side =
        GammaSidecar { lmax: ms.l_max(), nmax: ms.n_max(), radius: ms.radius(), grid: [a, b, c], hash: hash.clone() };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(hash)
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.0.len() < N {
            return Err(Error::Format("truncated coupling tensor file".into()));
        }
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(head.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Read a tensor file and verify it against its sidecar hash.
pub fn read_gamma(path: &Path) -> Result<(CouplingTensor, GammaSidecar)> {
    let side_path = sidecar_path(path);
    let side: GammaSidecar = serde_json::from_str(
        &fs::read_to_string(&side_path)
            .map_err(|e| Error::Format(format!("missing tensor sidecar {}: {e}", side_path.display())))?,
    )?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let hash = sha256_hex(&bytes);
    if hash != side.hash {
        return Err(Error::Format(format!(
            "{}: content hash {hash} does not match sidecar {}",
            path.display(),
            side.hash
        )));
    }
    let ms = ModeSet::new(side.lmax, side.nmax, side.radius)?;
    let grid = (side.grid[0], side.grid[1], side.grid[2]);
    let tensor = if gamma_is_csv(path) {
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let mut entries = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let idx = |c: usize| -> Result<usize> {
                rec[c].trim().parse().map_err(|_| Error::Format(format!("row {}: bad index", row + 1)))
            };
            entries.push(GammaEntry {
                i: idx(0)?,
                j: idx(1)?,
                k: idx(2)?,
                value: Complex64::new(parse_f(&rec[3], "gamma_re", row + 1)?, parse_f(&rec[4], "gamma_im", row + 1)?),
            });
        }
        CouplingTensor::from_entries(ms, entries, grid)?
    } else {
        let mut c = Cursor(&bytes);
        if &c.take::<8>()? != GAMMA_MAGIC {
            return Err(Error::Format("not a coupling tensor file (bad magic)".into()));
        }
        let version = c.u32()?;
        if version != GAMMA_VERSION {
            return Err(Error::Format(format!("unsupported tensor file version {version}")));
        }
        let (l, n, r) = (c.u32()?, c.u32()?, c.f64()?);
        if l != side.lmax || n != side.nmax || r != side.radius {
            return Err(Error::Format("tensor header disagrees with sidecar".into()));
        }
        for _ in 0..3 {
            c.u64()?;
        }
        let pruned = c.u64()? as usize;
        let count = c.u64()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, j, k) = (c.u32()? as usize, c.u32()? as usize, c.u32()? as usize);
            entries.push(GammaEntry { i, j, k, value: Complex64::new(c.f64()?, c.f64()?) });
        }
        if !c.0.is_empty() {
            return Err(Error::Format("trailing bytes in tensor file".into()));
        }
        let mut t = CouplingTensor::from_entries(ms, entries, grid)?;
        t.pruned = pruned;
        t
    };
    Ok((tensor, side))
}

/// Where a cached tensor came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheOutcome {
    pub path: Option<PathBuf>,
    pub hash: Option<String>,
    pub hit: bool,
}

/// Cache directory from [`CACHE_DIR_ENV`], if set and nonempty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn cache_file(dir: &Path, ms: &ModeSet, grid: &QuadratureGrid) -> PathBuf {
    let (a, b, c) = grid.counts();
    dir.join(format!("gamma_l{}_n{}_r{}_g{a}x{b}x{c}.bin", ms.l_max(), ms.n_max(), ms.radius()))
}

/// Γ for `(basis, grid)`, read from `cache_dir` when a matching verified
/// file exists and computed (then stored) otherwise. With no directory the
/// tensor is simply computed.
pub fn cached_coupling_tensor(
    basis: &BeamBasis,
    grid: &QuadratureGrid,
    cache_dir: Option<&Path>,
) -> Result<(CouplingTensor, CacheOutcome)> {
    let Some(dir) = cache_dir else {
        let t = compute_coupling_tensor(basis, grid)?;
        return Ok((t, CacheOutcome { path: None, hash: None, hit: false }));
    };
    let ms = basis.mode_set();
    let path = cache_file(dir, ms, grid);
    if path.exists() {
        if let Ok((t, side)) = read_gamma(&path) {
            if t.mode_set().same_as(ms) && t.grid_counts() == grid.counts() {
                return Ok((t, CacheOutcome { path: Some(path), hash: Some(side.hash), hit: true }));
            }
        }
    }
    let t = compute_coupling_tensor(basis, grid)?;
    fs::create_dir_all(dir)?;
    let hash = write_gamma(&path, &t)?;
    Ok((t, CacheOutcome { path: Some(path), hash: Some(hash), hit: false }))
}
