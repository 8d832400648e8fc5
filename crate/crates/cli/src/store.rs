//! On-disk formats.
//!
//! A database or EDM basis is a directory holding `manifest.json` and raw
//! arrays: little-endian `f64`, column-major, complex values interleaved as
//! `(re, im)`. Mode databases also carry the mass matrix as zero-based
//! `row col value` lines in `E.coo`. Every file listed in the manifest has a
//! SHA-256 checksum that is verified on load.
//!
//! Directories are written next to their destination and renamed into
//! place, so readers never observe a partially written output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use edm::edm::{EdmBasis, ModeSide};
use edm::modal::{Crossing, ModeDatabase, ModeSample, ModeSelection};
use edm::numerics::{CMat, CVec, MassMatrix, C64};
use edm::systems::SystemSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const MASS_FILE: &str = "E.coo";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("{path}: expected a {expected} directory, found {found}")]
    Kind {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
    #[error("checksum mismatch in {file}")]
    Checksum { file: String },
    #[error("shape mismatch in {file}: expected {expected} values, found {found}")]
    Shape {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("{file}: missing from manifest")]
    MissingEntry { file: String },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] edm::Error),
}

pub type StoreResult<T> = std::result::Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Float64,
    Complex128,
    Coo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub file: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassLayout {
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseManifest {
    pub format_version: u32,
    pub kind: String,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub complex: bool,
    pub parameters: Vec<f64>,
    pub paired: bool,
    pub aligned: bool,
    pub has_left: bool,
    pub selection: ModeSelection,
    pub mass_layout: MassLayout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub crossings: Vec<Crossing>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub arrays: Vec<ArrayEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdmManifest {
    pub format_version: u32,
    pub kind: String,
    /// One-based mode index.
    pub mode: usize,
    pub side: ModeSide,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub parameters: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub energy_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_threshold: Option<f64>,
    pub arrays: Vec<ArrayEntry>,
}

const DB_KIND: &str = "mode-database";
const EDM_KIND: &str = "edm-basis";

/// A database together with the generator that produced it, if known.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDatabase {
    pub db: ModeDatabase,
    pub system: Option<SystemSpec>,
}

fn complex_bytes<'a>(values: impl Iterator<Item = &'a C64>) -> Vec<u8> {
    let mut out = Vec::new();
    for z in values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn decode_f64(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Accumulates files for one output directory.
struct Staging {
    dir: tempfile::TempDir,
    entries: Vec<ArrayEntry>,
}

impl Staging {
    fn new(dest: &Path) -> StoreResult<Self> {
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(io_err(&parent))?;
        let dir = tempfile::Builder::new()
            .prefix(".edm-staging-")
            .tempdir_in(&parent)
            .map_err(io_err(&parent))?;
        Ok(Staging {
            dir,
            entries: Vec::new(),
        })
    }

    fn add(
        &mut self,
        file: &str,
        dtype: Dtype,
        shape: Vec<usize>,
        bytes: &[u8],
    ) -> StoreResult<()> {
        let path = self.dir.path().join(file);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.entries.push(ArrayEntry {
            file: file.to_string(),
            dtype,
            shape,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn finish<M: Serialize>(self, manifest: &M, dest: &Path) -> StoreResult<()> {
        let path = self.dir.path().join(MANIFEST);
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        let staged = self.dir.keep();
        replace_dir(&staged, dest)
    }
}

fn replace_dir(staged: &Path, dest: &Path) -> StoreResult<()> {
    if dest.exists() {
        let old = staged.with_extension("old");
        fs::rename(dest, &old).map_err(io_err(dest))?;
        fs::rename(staged, dest).map_err(io_err(dest))?;
        fs::remove_dir_all(&old).map_err(io_err(&old))?;
    } else {
        fs::rename(staged, dest).map_err(io_err(dest))?;
    }
    Ok(())
}

/// Writes `bytes` to `dest` through a temporary file in the same directory.
pub fn write_atomic(dest: &Path, bytes: &[u8]) -> StoreResult<()> {
    let parent = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(io_err(&parent))?;
    tmp.write_all(bytes).map_err(io_err(dest))?;
    tmp.persist(dest).map_err(|e| StoreError::Io {
        path: dest.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn format_coo(mass: &MassMatrix) -> String {
    let mut out = String::new();
    for (i, j, v) in mass.triplets() {
        // `{:?}` prints the shortest representation that parses back exactly
        out.push_str(&format!("{i} {j} {v:?}\n"));
    }
    out
}

fn parse_coo(text: &str, n: usize, layout: MassLayout) -> StoreResult<MassMatrix> {
    let mut triplets = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| StoreError::Parse {
            file: MASS_FILE.into(),
            line: k + 1,
            message: message.into(),
        };
        let mut it = line.split_whitespace();
        let i: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad row index"))?;
        let j: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad column index"))?;
        let v: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad value"))?;
        if it.next().is_some() {
            return Err(bad("expected 'row col value'"));
        }
        triplets.push((i, j, v));
    }
    let mass = MassMatrix::from_triplets(n, &triplets)?;
    Ok(match (layout, mass) {
        (MassLayout::Dense, MassMatrix::Diagonal(d)) => {
            MassMatrix::Dense(MassMatrix::Diagonal(d).to_dense())
        }
        (_, m) => m,
    })
}

/// Saves a database (atomically replacing `dest`).
pub fn save_database(
    db: &ModeDatabase,
    system: Option<&SystemSpec>,
    dest: &Path,
) -> StoreResult<()> {
    let (n, p, m) = (db.n(), db.p(), db.m());
    let mut st = Staging::new(dest)?;
    let eig_bytes = complex_bytes(db.samples.iter().flat_map(|s| s.eigenvalues.iter()));
    st.add("eigenvalues.bin", Dtype::Complex128, vec![m, p], &eig_bytes)?;
    let right = complex_bytes(db.samples.iter().flat_map(|s| s.right.iter()));
    st.add("right.bin", Dtype::Complex128, vec![n, m, p], &right)?;
    if db.has_left() {
        let left = complex_bytes(db.samples.iter().flat_map(|s| s.adjoint().iter()));
        st.add("left.bin", Dtype::Complex128, vec![n, m, p], &left)?;
    }
    st.add(
        MASS_FILE,
        Dtype::Coo,
        vec![n, n],
        format_coo(&db.mass).as_bytes(),
    )?;
    let manifest = DatabaseManifest {
        format_version: FORMAT_VERSION,
        kind: DB_KIND.into(),
        n,
        p,
        m,
        complex: db.is_complex(),
        parameters: db.mus(),
        paired: db.paired,
        aligned: db.aligned,
        has_left: db.has_left(),
        selection: db.selection,
        mass_layout: match db.mass {
            MassMatrix::Diagonal(_) => MassLayout::Diagonal,
            MassMatrix::Dense(_) => MassLayout::Dense,
        },
        system: system.cloned(),
        crossings: db.crossings.clone(),
        warnings: db.warnings.clone(),
        arrays: std::mem::take(&mut st.entries),
    };
    st.finish(&manifest, dest)
}

fn read_manifest<M: for<'de> Deserialize<'de>>(dir: &Path, kind: &'static str) -> StoreResult<M> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| StoreError::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(StoreError::Version { found: version });
    }
    let found = raw
        .get("kind")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_string();
    if found != kind {
        return Err(StoreError::Kind {
            path: dir.to_path_buf(),
            expected: kind,
            found,
        });
    }
    serde_json::from_value(raw).map_err(|e| StoreError::Manifest {
        path,
        message: e.to_string(),
    })
}

/// Reads a listed file and checks its checksum and element count.
fn read_entry(
    dir: &Path,
    entries: &[ArrayEntry],
    file: &str,
    shape: &[usize],
) -> StoreResult<Vec<u8>> {
    let entry = entries
        .iter()
        .find(|e| e.file == file)
        .ok_or_else(|| StoreError::MissingEntry { file: file.into() })?;
    let expected: usize = shape.iter().product();
    let listed: usize = entry.shape.iter().product();
    if entry.shape != shape {
        return Err(StoreError::Shape {
            file: file.into(),
            expected,
            found: listed,
        });
    }
    let path = dir.join(file);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(StoreError::Checksum { file: file.into() });
    }
    let per = match entry.dtype {
        Dtype::Float64 => 8,
        Dtype::Complex128 => 16,
        Dtype::Coo => return Ok(bytes),
    };
    if bytes.len() != expected * per {
        return Err(StoreError::Shape {
            file: file.into(),
            expected,
            found: bytes.len() / per,
        });
    }
    Ok(bytes)
}

fn decode_complex(bytes: &[u8]) -> Vec<C64> {
    decode_f64(bytes)
        .chunks_exact(2)
        .map(|c| C64::new(c[0], c[1]))
        .collect()
}

pub fn load_database(dir: &Path) -> StoreResult<StoredDatabase> {
    let man: DatabaseManifest = read_manifest(dir, DB_KIND)?;
    let (n, p, m) = (man.n, man.p, man.m);
    if man.parameters.len() != p {
        return Err(StoreError::Shape {
            file: MANIFEST.into(),
            expected: p,
            found: man.parameters.len(),
        });
    }
    let eigs = decode_complex(&read_entry(dir, &man.arrays, "eigenvalues.bin", &[m, p])?);
    let right = decode_complex(&read_entry(dir, &man.arrays, "right.bin", &[n, m, p])?);
    let left = if man.has_left {
        Some(decode_complex(&read_entry(
            dir,
            &man.arrays,
            "left.bin",
            &[n, m, p],
        )?))
    } else {
        None
    };
    let coo = read_entry(dir, &man.arrays, MASS_FILE, &[n, n])?;
    let coo = String::from_utf8(coo).map_err(|_| StoreError::Parse {
        file: MASS_FILE.into(),
        line: 0,
        message: "not UTF-8".into(),
    })?;
    let mass = parse_coo(&coo, n, man.mass_layout)?;
    let block = n * m;
    let samples = (0..p)
        .map(|k| ModeSample {
            mu: man.parameters[k],
            eigenvalues: eigs[k * m..(k + 1) * m].to_vec(),
            right: CMat::from_column_slice(n, m, &right[k * block..(k + 1) * block]),
            left: left
                .as_ref()
                .map(|l| CMat::from_column_slice(n, m, &l[k * block..(k + 1) * block])),
        })
        .collect();
    let mut db = ModeDatabase::new(samples, mass, man.selection)?;
    db.paired = man.paired;
    db.aligned = man.aligned;
    db.crossings = man.crossings;
    db.warnings = man.warnings;
    Ok(StoredDatabase {
        db,
        system: man.system,
    })
}

pub fn save_edm(basis: &EdmBasis, threshold: Option<f64>, dest: &Path) -> StoreResult<()> {
    let (n, p, r) = (basis.n(), basis.p(), basis.rank());
    let mut st = Staging::new(dest)?;
    st.add(
        "mean.bin",
        Dtype::Complex128,
        vec![n],
        &complex_bytes(basis.mean_mode.iter()),
    )?;
    st.add(
        "edms.bin",
        Dtype::Complex128,
        vec![n, r],
        &complex_bytes(basis.edms.iter()),
    )?;
    st.add(
        "coefficients.bin",
        Dtype::Complex128,
        vec![r, p],
        &complex_bytes(basis.coefficients.iter()),
    )?;
    let manifest = EdmManifest {
        format_version: FORMAT_VERSION,
        kind: EDM_KIND.into(),
        mode: basis.mode_index + 1,
        side: basis.side,
        n,
        p,
        rank: r,
        parameters: basis.sample_mus.clone(),
        singular_values: basis.singular_values.clone(),
        energy_fraction: basis.energy_fraction().ok(),
        energy_threshold: threshold,
        arrays: std::mem::take(&mut st.entries),
    };
    st.finish(&manifest, dest)
}

pub fn load_edm(dir: &Path) -> StoreResult<(EdmBasis, EdmManifest)> {
    let man: EdmManifest = read_manifest(dir, EDM_KIND)?;
    let (n, p, r) = (man.n, man.p, man.rank);
    if man.parameters.len() != p {
        return Err(StoreError::Shape {
            file: MANIFEST.into(),
            expected: p,
            found: man.parameters.len(),
        });
    }
    if man.mode == 0 {
        return Err(StoreError::Manifest {
            path: dir.join(MANIFEST),
            message: "mode indices are one-based".into(),
        });
    }
    let mean = decode_complex(&read_entry(dir, &man.arrays, "mean.bin", &[n])?);
    let edms = decode_complex(&read_entry(dir, &man.arrays, "edms.bin", &[n, r])?);
    let coeffs = decode_complex(&read_entry(dir, &man.arrays, "coefficients.bin", &[r, p])?);
    let basis = EdmBasis {
        mode_index: man.mode - 1,
        side: man.side,
        mean_mode: CVec::from_vec(mean),
        edms: CMat::from_column_slice(n, r, &edms),
        singular_values: man.singular_values.clone(),
        coefficients: CMat::from_column_slice(r, p, &coeffs),
        sample_mus: man.parameters.clone(),
    };
    Ok((basis, man))
}
